use serde::{Deserialize, Serialize};

use super::{Corpus, Sentence, Tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    #[serde(rename = "I-after-O")]
    IAfterO,
    #[serde(rename = "I-type-mismatch")]
    ITypeMismatch,
    #[serde(rename = "empty-sentence")]
    EmptySentence,
    #[serde(rename = "malformed-tag")]
    MalformedTag,
}

/// A structural problem at `(doc_id, sent_index, token_index)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub doc_id: String,
    pub sent_index: usize,
    pub token_index: usize,
    pub kind: ViolationKind,
    pub message: String,
}

/// BIO2 violations of one sentence, without modifying it.
pub fn validate_sentence(s: &Sentence) -> Vec<Violation> {
    let mut copy = s.clone();
    repair_sentence(&mut copy)
}

/// Rewrites every `I-` tag that does not continue a mention of its type to `B-`,
/// returning one violation per rewritten tag. A repaired sentence has no violations.
pub fn repair_sentence(s: &mut Sentence) -> Vec<Violation> {
    let mut out = Vec::new();
    if s.tokens.is_empty() {
        out.push(Violation {
            doc_id: s.doc_id.clone(),
            sent_index: s.sent_index,
            token_index: 0,
            kind: ViolationKind::EmptySentence,
            message: "sentence has no tokens".to_string(),
        });
        return out;
    }
    let mut prev: Option<super::EntityType> = None;
    for (i, tok) in s.tokens.iter_mut().enumerate() {
        let next_prev = match &tok.tag {
            Tag::O => None,
            Tag::B(t) => Some(t.clone()),
            Tag::I(t) => {
                let t = t.clone();
                let problem = match &prev {
                    None => Some((ViolationKind::IAfterO, format!("I-{t} follows O or sentence start"))),
                    Some(p) if *p != t => Some((ViolationKind::ITypeMismatch, format!("I-{t} follows a {p} mention"))),
                    Some(_) => None,
                };
                if let Some((kind, what)) = problem {
                    out.push(Violation {
                        doc_id: s.doc_id.clone(),
                        sent_index: s.sent_index,
                        token_index: i,
                        kind,
                        message: format!("token {:?}: {what}", tok.text),
                    });
                    tok.tag = Tag::B(t.clone());
                }
                Some(t)
            }
        };
        prev = next_prev;
    }
    out
}

/// All BIO2 violations of a corpus, in sentence order.
pub fn validate_corpus(c: &Corpus) -> Vec<Violation> {
    c.sentences.iter().flat_map(validate_sentence).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn i_after_o_is_reported_and_promoted() {
        let mut s = Sentence::from_pairs("d", 0, &[("the", "O"), ("rose", "I-PERSON")]);
        let v = repair_sentence(&mut s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::IAfterO);
        assert_eq!(v[0].token_index, 1);
        assert_eq!(s.tokens[1].tag.to_string(), "B-PERSON");
        assert!(repair_sentence(&mut s).is_empty());
    }

    #[test]
    fn type_mismatch_starts_new_mention() {
        let mut s = Sentence::from_pairs("d", 0, &[("a", "B-ORG"), ("b", "I-GPE"), ("c", "I-GPE")]);
        let v = repair_sentence(&mut s);
        assert_eq!(v.iter().map(|v| v.kind).collect::<Vec<_>>(), vec![ViolationKind::ITypeMismatch]);
        let tags: Vec<String> = s.tokens.iter().map(|t| t.tag.to_string()).collect();
        assert_eq!(tags, ["B-ORG", "B-GPE", "I-GPE"]);
    }

    #[test]
    fn sentence_initial_i_counts_as_after_o() {
        let s = Sentence::from_pairs("d", 3, &[("x", "I-LOC")]);
        let v = validate_sentence(&s);
        assert_eq!(v[0].kind, ViolationKind::IAfterO);
        assert_eq!(v[0].sent_index, 3);
    }

    #[test]
    fn empty_sentence() {
        let s = Sentence::new("d", 0, vec![]);
        assert_eq!(validate_sentence(&s)[0].kind, ViolationKind::EmptySentence);
    }

    #[test]
    fn violation_kind_wire_names() {
        assert_eq!(serde_json::to_string(&ViolationKind::IAfterO).unwrap(), "\"I-after-O\"");
        assert_eq!(serde_json::to_string(&ViolationKind::MalformedTag).unwrap(), "\"malformed-tag\"");
    }
}
