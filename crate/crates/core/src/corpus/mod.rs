//! BIO-tagged corpus model.
//!
//! A [`Corpus`] is an ordered list of [`Sentence`]s, each carrying the
//! document it belongs to and its ordinal within that document. Tags use
//! the BIO2 scheme: every mention opens with `B-<type>` and continues with
//! `I-<type>`.

mod edit;
mod format;
mod validate;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use edit::{apply_edit, Edit, EditOp};
pub use format::{parse_corpus, parse_str, serialize_corpus, ColumnFormat, Separator, Strictness, TagColumn};
pub use validate::{repair_sentence, validate_corpus, validate_sentence, Violation, ViolationKind};

pub(crate) use edit::{apply_edit_in_place, resulting_span};

/// The seven value types of the OntoNotes tagset. All other names are named types.
const VALUE_TYPES: [&str; 7] = ["CARDINAL", "DATE", "MONEY", "ORDINAL", "PERCENT", "QUANTITY", "TIME"];

/// The eighteen OntoNotes entity types.
pub const ONTONOTES_TYPES: [&str; 18] = [
    "CARDINAL",
    "DATE",
    "EVENT",
    "FAC",
    "GPE",
    "LANGUAGE",
    "LAW",
    "LOC",
    "MONEY",
    "NORP",
    "ORDINAL",
    "ORG",
    "PERCENT",
    "PERSON",
    "PRODUCT",
    "QUANTITY",
    "TIME",
    "WORK_OF_ART",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Named,
    Value,
}

/// Entity type name such as `PERSON` or `WORK_OF_ART`.
///
/// Cheap to clone; ordering and equality are by name.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityType(Arc<str>);

impl EntityType {
    pub fn new(name: &str) -> Self {
        EntityType(Arc::from(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    /// Value types are the seven numeric OntoNotes types; unknown names count as named.
    pub fn kind(&self) -> EntityKind {
        if VALUE_TYPES.contains(&self.name()) {
            EntityKind::Value
        } else {
            EntityKind::Named
        }
    }

    fn is_valid_name(name: &str) -> bool {
        !name.is_empty() && !name.chars().any(char::is_whitespace)
    }
}

impl fmt::Debug for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityType {
    fn from(name: &str) -> Self {
        EntityType::new(name)
    }
}

/// A BIO2 tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Tag {
    O,
    B(EntityType),
    I(EntityType),
}

impl Tag {
    pub fn entity_type(&self) -> Option<&EntityType> {
        match self {
            Tag::O => None,
            Tag::B(t) | Tag::I(t) => Some(t),
        }
    }

    pub fn is_outside(&self) -> bool {
        matches!(self, Tag::O)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed tag {0:?}")]
pub struct MalformedTag(pub String);

impl FromStr for Tag {
    type Err = MalformedTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(Tag::O);
        }
        let (prefix, name) = s.split_at_checked(2).ok_or_else(|| MalformedTag(s.to_string()))?;
        if !EntityType::is_valid_name(name) {
            return Err(MalformedTag(s.to_string()));
        }
        match prefix {
            "B-" => Ok(Tag::B(EntityType::new(name))),
            "I-" => Ok(Tag::I(EntityType::new(name))),
            _ => Err(MalformedTag(s.to_string())),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::B(t) => write!(f, "B-{t}"),
            Tag::I(t) => write!(f, "I-{t}"),
        }
    }
}

impl Serialize for Tag {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Tag {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One token line: surface form, tag and any additional columns carried through untouched.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledToken {
    pub text: String,
    pub tag: Tag,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra: Vec<String>,
}

impl LabeledToken {
    pub fn new(text: impl Into<String>, tag: Tag) -> Self {
        LabeledToken { text: text.into(), tag, extra: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub sent_index: usize,
    pub tokens: Vec<LabeledToken>,
}

impl Sentence {
    pub fn new(doc_id: impl Into<String>, sent_index: usize, tokens: Vec<LabeledToken>) -> Self {
        Sentence { doc_id: doc_id.into(), sent_index, tokens }
    }

    /// Builds a sentence from `(text, tag)` pairs. Panics on a malformed tag; meant for fixtures.
    pub fn from_pairs(doc_id: &str, sent_index: usize, pairs: &[(&str, &str)]) -> Self {
        let tokens = pairs
            .iter()
            .map(|(text, tag)| LabeledToken::new(*text, tag.parse().expect("fixture tag")))
            .collect();
        Sentence::new(doc_id, sent_index, tokens)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.text.clone()).collect()
    }

    pub fn same_texts(&self, other: &Sentence) -> bool {
        self.tokens.len() == other.tokens.len()
            && self.tokens.iter().zip(&other.tokens).all(|(a, b)| a.text == b.text)
    }

    /// Mentions of this sentence in order. Fails when the tags are not valid BIO2.
    pub fn mentions(&self) -> Result<Vec<Mention>, CorpusError> {
        extract_mentions(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Dev,
    Test,
    Other(String),
}

impl Partition {
    /// Guesses the partition from a file name (`train.conll`, `dev.txt`, ...).
    pub fn from_file_name(name: &str) -> Self {
        let lower = name.to_lowercase();
        if lower.contains("train") {
            Partition::Train
        } else if lower.contains("dev") || lower.contains("valid") {
            Partition::Dev
        } else if lower.contains("test") {
            Partition::Test
        } else {
            Partition::Other(name.to_string())
        }
    }
}

impl Default for Partition {
    fn default() -> Self {
        Partition::Other(String::new())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Corpus {
    pub partition: Partition,
    pub sentences: Vec<Sentence>,
    /// Free-form metadata following the document id on a boundary line, by document.
    #[serde(default)]
    pub source_meta: BTreeMap<String, String>,
    /// Column separator observed while parsing whitespace-separated input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout_sep: Option<String>,
}

impl Corpus {
    pub fn new(partition: Partition, sentences: Vec<Sentence>) -> Self {
        Corpus { partition, sentences, source_meta: BTreeMap::new(), layout_sep: None }
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// Distinct document ids in order of first appearance.
    pub fn document_ids(&self) -> Vec<&str> {
        let mut seen = std::collections::HashSet::new();
        self.sentences
            .iter()
            .filter(|s| seen.insert(s.doc_id.as_str()))
            .map(|s| s.doc_id.as_str())
            .collect()
    }

    pub fn index(&self) -> SentenceIndex {
        SentenceIndex(
            self.sentences
                .iter()
                .enumerate()
                .map(|(i, s)| ((s.doc_id.clone(), s.sent_index), i))
                .collect(),
        )
    }

    pub fn find_sentence(&self, doc_id: &str, sent_index: usize) -> Option<&Sentence> {
        self.sentences.iter().find(|s| s.doc_id == doc_id && s.sent_index == sent_index)
    }

    /// All mentions, sentence by sentence.
    pub fn mentions(&self) -> Result<Vec<Mention>, CorpusError> {
        let mut out = Vec::new();
        for s in &self.sentences {
            out.extend(extract_mentions(s)?);
        }
        Ok(out)
    }

    /// Checks that `other` has the same sentences with the same token texts.
    pub fn check_aligned(&self, other: &Corpus) -> Result<(), CorpusError> {
        if self.sentences.len() != other.sentences.len() {
            return Err(CorpusError::StructureMismatch(format!(
                "sentence counts differ: {} vs {}",
                self.sentences.len(),
                other.sentences.len()
            )));
        }
        for (a, b) in self.sentences.iter().zip(&other.sentences) {
            if !a.same_texts(b) {
                return Err(CorpusError::StructureMismatch(format!(
                    "token texts differ in sentence {}/{}",
                    a.doc_id, a.sent_index
                )));
            }
        }
        Ok(())
    }
}

/// Position lookup of sentences by `(doc_id, sent_index)`.
#[derive(Debug, Clone, Default)]
pub struct SentenceIndex(HashMap<(String, usize), usize>);

impl SentenceIndex {
    pub fn get(&self, doc_id: &str, sent_index: usize) -> Option<usize> {
        self.0.get(&(doc_id.to_string(), sent_index)).copied()
    }
}

/// Contiguous typed span `[start, end)` of one sentence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mention {
    pub doc_id: String,
    pub sent_index: usize,
    pub start: usize,
    pub end: usize,
    pub etype: EntityType,
    pub surface: String,
}

impl Mention {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }

    pub fn overlaps(&self, other: &Mention) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn same_span(&self, other: &Mention) -> bool {
        self.start == other.start && self.end == other.end
    }

    pub fn token_texts<'a>(&self, sentence: &'a Sentence) -> &'a [LabeledToken] {
        &sentence.tokens[self.start..self.end]
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus has {} violation(s); first: {}", .0.len(), .0.first().map(|v| v.message.as_str()).unwrap_or(""))]
    Invalid(Vec<Violation>),
    #[error("sentence {doc_id}/{sent_index} is not valid BIO: {message}")]
    InvalidBio { doc_id: String, sent_index: usize, message: String },
    #[error("no sentence {doc_id}/{sent_index} in corpus")]
    UnknownSentence { doc_id: String, sent_index: usize },
    #[error("stale edit target: no {etype} mention at {doc_id}/{sent_index} [{start}, {end})")]
    StaleTarget { doc_id: String, sent_index: usize, start: usize, end: usize, etype: EntityType },
    #[error("edit would leave an empty span")]
    EmptySpan,
    #[error("edited span [{start}, {end}) lies outside a sentence of {len} tokens")]
    SpanOutOfBounds { start: usize, end: usize, len: usize },
    #[error("edited span [{start}, {end}) overlaps another mention")]
    SpanConflict { start: usize, end: usize },
    #[error("corpora are not aligned: {0}")]
    StructureMismatch(String),
}

/// Splits a sentence's tags into maximal `B I*` runs of one type.
///
/// Fails on the first `I-` that does not continue a mention of its own type.
pub fn extract_mentions(s: &Sentence) -> Result<Vec<Mention>, CorpusError> {
    let spans = mention_spans(&s.tokens).map_err(|(index, message)| CorpusError::InvalidBio {
        doc_id: s.doc_id.clone(),
        sent_index: s.sent_index,
        message: format!("token {index}: {message}"),
    })?;
    Ok(spans
        .into_iter()
        .map(|(start, end, etype)| Mention {
            doc_id: s.doc_id.clone(),
            sent_index: s.sent_index,
            start,
            end,
            etype: etype.clone(),
            surface: join_surface(&s.tokens[start..end]),
        })
        .collect())
}

/// `(start, end, type)` of one mention.
pub(crate) type Span<'a> = (usize, usize, &'a EntityType);

/// `(start, end, type)` triples without building surfaces.
pub(crate) fn mention_spans(tokens: &[LabeledToken]) -> Result<Vec<Span<'_>>, (usize, String)> {
    let mut out: Vec<(usize, usize, &EntityType)> = Vec::new();
    let mut open: Option<(usize, &EntityType)> = None;
    for (i, tok) in tokens.iter().enumerate() {
        match &tok.tag {
            Tag::O => {
                if let Some((start, t)) = open.take() {
                    out.push((start, i, t));
                }
            }
            Tag::B(t) => {
                if let Some((start, prev)) = open.replace((i, t)) {
                    out.push((start, i, prev));
                }
            }
            Tag::I(t) => match open {
                Some((_, prev)) if prev == t => {}
                Some((_, prev)) => return Err((i, format!("I-{t} continues a {prev} mention"))),
                None => return Err((i, format!("I-{t} does not continue a mention"))),
            },
        }
    }
    if let Some((start, t)) = open {
        out.push((start, tokens.len(), t));
    }
    Ok(out)
}

pub(crate) fn join_surface(tokens: &[LabeledToken]) -> String {
    let mut s = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(&t.text);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tags(s: &[&str]) -> Sentence {
        let pairs: Vec<(&str, &str)> = s.iter().enumerate().map(|(i, t)| (["w0", "w1", "w2", "w3", "w4"][i], *t)).collect();
        Sentence::from_pairs("d", 0, &pairs)
    }

    #[test]
    fn tag_parsing() {
        assert_eq!("O".parse::<Tag>().unwrap(), Tag::O);
        assert_eq!("B-GPE".parse::<Tag>().unwrap(), Tag::B("GPE".into()));
        assert_eq!("I-WORK_OF_ART".parse::<Tag>().unwrap(), Tag::I("WORK_OF_ART".into()));
        for bad in ["", "B-", "X-GPE", "B_GPE", "o", "I"] {
            assert!(bad.parse::<Tag>().is_err(), "{bad:?} should be malformed");
        }
    }

    #[test]
    fn entity_kinds() {
        assert_eq!(EntityType::new("DATE").kind(), EntityKind::Value);
        assert_eq!(EntityType::new("PERSON").kind(), EntityKind::Named);
        assert_eq!(EntityType::new("SOMETHING_NEW").kind(), EntityKind::Named);
        let values = ONTONOTES_TYPES.iter().filter(|t| EntityType::new(t).kind() == EntityKind::Value).count();
        assert_eq!(values, 7);
    }

    #[test]
    fn single_token_mention() {
        let s = Sentence::from_pairs("d", 0, &[("US", "B-GPE"), ("economy", "O")]);
        let m = extract_mentions(&s).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].start, m[0].end, m[0].etype.name(), m[0].surface.as_str()), (0, 1, "GPE", "US"));
    }

    #[test]
    fn two_token_mention() {
        let m = extract_mentions(&tags(&["B-PERSON", "I-PERSON", "O"])).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].start, m[0].end), (0, 2));
        assert_eq!(m[0].surface, "w0 w1");
    }

    #[test]
    fn adjacent_b_tags_are_separate_mentions() {
        let m = extract_mentions(&tags(&["B-ORG", "B-ORG"])).unwrap();
        assert_eq!(m.iter().map(|m| (m.start, m.end)).collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn invalid_bio_is_rejected() {
        assert!(extract_mentions(&tags(&["O", "I-PERSON"])).is_err());
        assert!(extract_mentions(&tags(&["B-ORG", "I-GPE"])).is_err());
    }

    /// Reference recognizer written independently of `mention_spans`: a mention
    /// starts at every B- and extends over the following I- tags of the same type.
    fn reference_mentions(tags: &[&str]) -> Option<Vec<(usize, usize, String)>> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < tags.len() {
            let t = tags[i];
            if t == "O" {
                i += 1;
            } else {
                let ty = t.strip_prefix("B-")?;
                let mut j = i + 1;
                while j < tags.len() && tags[j].strip_prefix("I-") == Some(ty) {
                    j += 1;
                }
                out.push((i, j, ty.to_string()));
                i = j;
            }
        }
        Some(out)
    }

    #[test]
    fn exhaustive_bio_strings_up_to_length_four() {
        let alphabet = ["O", "B-ORG", "I-ORG", "B-GPE", "I-GPE"];
        let mut checked = 0;
        for len in 0..=4u32 {
            for code in 0..alphabet.len().pow(len) {
                let mut c = code;
                let seq: Vec<&str> = (0..len)
                    .map(|_| {
                        let t = alphabet[c % alphabet.len()];
                        c /= alphabet.len();
                        t
                    })
                    .collect();
                let got = extract_mentions(&tags(&seq))
                    .ok()
                    .map(|ms| ms.into_iter().map(|m| (m.start, m.end, m.etype.name().to_string())).collect::<Vec<_>>());
                assert_eq!(got, reference_mentions(&seq), "tags {seq:?}");
                checked += 1;
            }
        }
        assert_eq!(checked, 1 + 5 + 25 + 125 + 625);
    }

    #[test]
    fn document_ids_in_first_appearance_order() {
        let c = Corpus::new(
            Partition::Train,
            vec![
                Sentence::from_pairs("b", 0, &[("x", "O")]),
                Sentence::from_pairs("a", 0, &[("x", "O")]),
                Sentence::from_pairs("b", 1, &[("x", "O")]),
            ],
        );
        assert_eq!(c.document_ids(), vec!["b", "a"]);
    }
}
