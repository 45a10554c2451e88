//! Frequency-based detection of suspicious mentions.
//!
//! Tokens inside mentions are compared with a profile of the same surface
//! form in a reference partition. A token is flagged when it was never seen
//! ([`SubsetLabel::UnseenI`]), when it is mostly tagged `O` there
//! ([`SubsetLabel::DiffI`]), or when it mostly belongs to mentions of another
//! type ([`SubsetLabel::DiffEtype`]). Flagged mentions are collapsed into
//! [`Candidate`]s for review.

mod candidate;
mod profile;

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{mention_spans, Corpus, CorpusError, EntityType, Mention};

pub use candidate::{Candidate, CandidateSource, CandidateStatus, Flag, FlagLabel, Occurrence};
pub use profile::{Profile, TokenProfile};

use candidate::{aggregate_hits, Hit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SubsetLabel {
    #[serde(rename = "unseen-I")]
    UnseenI,
    #[serde(rename = "diff-I")]
    DiffI,
    #[serde(rename = "diff-etype")]
    DiffEtype,
}

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("fold count must be at least 2, got {0}")]
    TooFewFolds(usize),
    #[error("corpus has {docs} document(s), fewer than {k} folds; use a smaller fold count")]
    TooFewDocuments { docs: usize, k: usize },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Classifies one token occurrence found inside a mention of `observed`.
///
/// Majority-`O` means strictly more `O` occurrences than mention occurrences;
/// the type check needs a unique plurality type. Ties never flag.
pub fn classify_token(profile: &Profile, surface: &str, observed: &EntityType) -> Option<SubsetLabel> {
    let Some(p) = profile.get(surface) else {
        return Some(SubsetLabel::UnseenI);
    };
    if p.count_o > p.mention_total() {
        return Some(SubsetLabel::DiffI);
    }
    match p.plurality_type() {
        Some(t) if t != observed => Some(SubsetLabel::DiffEtype),
        _ => None,
    }
}

fn sentence_hits(corpus: &Corpus, pos: usize, profile: &Profile) -> Result<Vec<Hit>, CorpusError> {
    let s = &corpus.sentences[pos];
    let spans = mention_spans(&s.tokens).map_err(|(i, message)| CorpusError::InvalidBio {
        doc_id: s.doc_id.clone(),
        sent_index: s.sent_index,
        message: format!("token {i}: {message}"),
    })?;
    let mut hits = Vec::new();
    for (start, end, etype) in spans {
        let flags: Vec<Flag> = (start..end)
            .filter_map(|i| {
                classify_token(profile, &s.tokens[i].text, etype).map(|label| Flag { offset: i - start, label: label.into() })
            })
            .collect();
        if !flags.is_empty() {
            hits.push(Hit {
                mention: Mention {
                    doc_id: s.doc_id.clone(),
                    sent_index: s.sent_index,
                    start,
                    end,
                    etype: etype.clone(),
                    surface: crate::corpus::join_surface(&s.tokens[start..end]),
                },
                flags,
                sentence_pos: pos,
            });
        }
    }
    Ok(hits)
}

fn hits_for(corpus: &Corpus, positions: &[usize], profile: &Profile) -> Result<Vec<Hit>, CorpusError> {
    let per_sentence: Result<Vec<Vec<Hit>>, CorpusError> =
        positions.par_iter().map(|&pos| sentence_hits(corpus, pos, profile)).collect();
    Ok(per_sentence?.into_iter().flatten().collect())
}

/// Flags every mention of `target` containing at least one flagged token.
///
/// Identical (surface, type, flags) mentions collapse into one candidate that
/// keeps all occurrences. Candidates are ordered by occurrence count
/// (descending), then surface.
pub fn flag_partition(target: &Corpus, profile: &Profile) -> Result<Vec<Candidate>, CorpusError> {
    let positions: Vec<usize> = (0..target.sentences.len()).collect();
    let hits = hits_for(target, &positions, profile)?;
    Ok(aggregate_hits(target, hits))
}

/// Assigns each document to one of `k` folds after a seeded shuffle.
pub fn assign_folds(corpus: &Corpus, k: usize, seed: u64) -> Result<HashMap<String, usize>, DetectError> {
    if k < 2 {
        return Err(DetectError::TooFewFolds(k));
    }
    let mut docs: Vec<String> = corpus.document_ids().into_iter().map(str::to_string).collect();
    if docs.len() < k {
        return Err(DetectError::TooFewDocuments { docs: docs.len(), k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    docs.shuffle(&mut rng);
    Ok(docs.into_iter().enumerate().map(|(i, d)| (d, i % k)).collect())
}

/// Flags the training partition against itself without self-reference: each
/// fold of documents is classified against a profile of the other folds.
pub fn cross_validated_flags(train: &Corpus, k: usize, seed: u64) -> Result<Vec<Candidate>, DetectError> {
    let folds = assign_folds(train, k, seed)?;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (pos, s) in train.sentences.iter().enumerate() {
        members[folds[&s.doc_id]].push(pos);
    }
    let fold_profiles: Vec<Profile> = members
        .par_iter()
        .map(|positions| {
            let mut p = Profile::default();
            for &pos in positions {
                p.add_sentence(&train.sentences[pos]);
            }
            p
        })
        .collect();
    let mut whole = Profile::default();
    for p in &fold_profiles {
        whole.merge(p.clone());
    }
    let per_fold: Result<Vec<Vec<Hit>>, CorpusError> = members
        .par_iter()
        .zip(fold_profiles.par_iter())
        .map(|(positions, held_out)| {
            let mut complement = whole.clone();
            complement.subtract(held_out);
            hits_for(train, positions, &complement)
        })
        .collect();
    let mut hits: Vec<Hit> = per_fold?.into_iter().flatten().collect();
    hits.sort_by_key(|h| h.sentence_pos);
    Ok(aggregate_hits(train, hits))
}

/// Frequency of one exact ⟨surface, type⟩ mention pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairEntry {
    pub surface: String,
    pub etype: EntityType,
    pub count: u64,
}

/// Counts ⟨surface, type⟩ mention pairs, optionally restricted to `types`,
/// sorted by count (descending), surface, then type.
pub fn mention_type_pairs(c: &Corpus, types: Option<&[EntityType]>) -> Result<Vec<PairEntry>, CorpusError> {
    let mut counts: HashMap<(String, EntityType), u64> = HashMap::new();
    for s in &c.sentences {
        for m in s.mentions()? {
            if types.is_some_and(|ts| !ts.contains(&m.etype)) {
                continue;
            }
            *counts.entry((m.surface, m.etype)).or_insert(0) += 1;
        }
    }
    let mut out: Vec<PairEntry> =
        counts.into_iter().map(|((surface, etype), count)| PairEntry { surface, etype, count }).collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.surface.cmp(&b.surface)).then_with(|| a.etype.cmp(&b.etype)));
    Ok(out)
}

/// Review candidates for the given pairs, with every occurrence in `c`.
pub fn pair_candidates(c: &Corpus, pairs: &[PairEntry]) -> Result<Vec<Candidate>, CorpusError> {
    let wanted: HashMap<(&str, &EntityType), usize> =
        pairs.iter().enumerate().map(|(i, p)| ((p.surface.as_str(), &p.etype), i)).collect();
    let mut found: Vec<Vec<(Mention, usize)>> = vec![Vec::new(); pairs.len()];
    for (pos, s) in c.sentences.iter().enumerate() {
        for m in s.mentions()? {
            if let Some(&i) = wanted.get(&(m.surface.as_str(), &m.etype)) {
                found[i].push((m, pos));
            }
        }
    }
    Ok(pairs
        .iter()
        .zip(found)
        .filter(|(_, occ)| !occ.is_empty())
        .map(|(p, occ)| {
            let context = c.sentences[occ[0].1].texts();
            Candidate {
                id: crate::util::stable_id(&["pair_list", &p.surface, p.etype.name()]),
                surface: p.surface.clone(),
                etype: p.etype.clone(),
                flags: Vec::new(),
                occurrences: occ.iter().map(|(m, _)| Occurrence::of(m)).collect(),
                context_sample: context,
                source: CandidateSource::PairList,
                status: CandidateStatus::Pending,
                note: Some(format!("{} occurrence(s) as {}", p.count, p.etype)),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Partition, Sentence};

    type Entry<'a> = (&'a str, u64, &'a [(&'a str, u64)]);

    fn profile_of(entries: &[Entry]) -> Profile {
        let mut p = Profile::default();
        for (surface, o, types) in entries {
            let count_by_type: std::collections::BTreeMap<EntityType, u64> =
                types.iter().map(|(t, n)| (EntityType::new(t), *n)).collect();
            let total = o + count_by_type.values().sum::<u64>();
            p.insert(*surface, TokenProfile { total, count_o: *o, count_by_type });
        }
        p
    }

    #[test]
    fn unseen_token() {
        assert_eq!(classify_token(&Profile::default(), "Zyx", &"ORG".into()), Some(SubsetLabel::UnseenI));
    }

    #[test]
    fn majority_o_is_diff_i() {
        let p = profile_of(&[("the", 950, &[("PERSON", 10), ("FAC", 40)])]);
        assert_eq!(classify_token(&p, "the", &"PERSON".into()), Some(SubsetLabel::DiffI));
    }

    #[test]
    fn other_plurality_is_diff_etype() {
        let p = profile_of(&[("Columbia", 0, &[("GPE", 20), ("PRODUCT", 3)])]);
        assert_eq!(classify_token(&p, "Columbia", &"PRODUCT".into()), Some(SubsetLabel::DiffEtype));
        assert_eq!(classify_token(&p, "Columbia", &"GPE".into()), None);
    }

    #[test]
    fn ties_do_not_flag() {
        let p = profile_of(&[("x", 5, &[("GPE", 5)]), ("y", 0, &[("GPE", 5), ("LOC", 5)])]);
        assert_eq!(classify_token(&p, "x", &"GPE".into()), None);
        assert_eq!(classify_token(&p, "y", &"ORG".into()), None);
    }

    fn sentence(doc: &str, i: usize, pairs: &[(&str, &str)]) -> Sentence {
        Sentence::from_pairs(doc, i, pairs)
    }

    #[test]
    fn no_flags_no_candidates() {
        let c = Corpus::new(Partition::Dev, vec![sentence("d", 0, &[("US", "B-GPE"), ("rose", "O")])]);
        let p = Profile::build(&c);
        assert!(flag_partition(&c, &p).unwrap().is_empty());
    }

    #[test]
    fn determiner_flagged_once_per_unique_mention() {
        let train = Corpus::new(
            Partition::Train,
            vec![sentence("t", 0, &[("the", "O"), ("the", "O"), ("US", "B-GPE")])],
        );
        let target = Corpus::new(
            Partition::Dev,
            (0..5).map(|i| sentence("d", i, &[("In", "O"), ("the", "B-GPE"), ("US", "I-GPE")])).collect(),
        );
        let cands = flag_partition(&target, &Profile::build(&train)).unwrap();
        assert_eq!(cands.len(), 1);
        let c = &cands[0];
        assert_eq!(c.surface, "the US");
        assert_eq!(c.flags, vec![Flag { offset: 0, label: FlagLabel::DiffI }]);
        assert_eq!(c.occurrences.len(), 5);
        assert_eq!(c.context_sample, vec!["In", "the", "US"]);
    }

    #[test]
    fn candidates_sorted_by_count_then_surface() {
        let target = Corpus::new(
            Partition::Dev,
            vec![
                sentence("d", 0, &[("Bb", "B-ORG")]),
                sentence("d", 1, &[("Aa", "B-ORG")]),
                sentence("d", 2, &[("Cc", "B-ORG")]),
                sentence("d", 3, &[("Cc", "B-ORG")]),
            ],
        );
        let cands = flag_partition(&target, &Profile::default()).unwrap();
        let order: Vec<&str> = cands.iter().map(|c| c.surface.as_str()).collect();
        assert_eq!(order, vec!["Cc", "Aa", "Bb"]);
    }

    #[test]
    fn fold_errors() {
        let c = Corpus::new(Partition::Train, vec![sentence("a", 0, &[("x", "O")])]);
        assert!(matches!(cross_validated_flags(&c, 1, 0), Err(DetectError::TooFewFolds(1))));
        assert!(matches!(cross_validated_flags(&c, 2, 0), Err(DetectError::TooFewDocuments { docs: 1, k: 2 })));
    }

    #[test]
    fn two_document_cross_validation() {
        // doc a: "Acme" ORG, "rose" O; doc b: "Acme" GPE, "rose" B-ORG
        // Held-out a vs profile(b): Acme -> GPE plurality, observed ORG -> DiffEtype.
        // Held-out b vs profile(a): Acme -> ORG plurality, observed GPE -> DiffEtype;
        //   rose -> majority O, inside ORG -> DiffI.
        let c = Corpus::new(
            Partition::Train,
            vec![
                sentence("a", 0, &[("Acme", "B-ORG"), ("rose", "O")]),
                sentence("b", 0, &[("Acme", "B-GPE"), ("rose", "B-ORG")]),
            ],
        );
        let cands = cross_validated_flags(&c, 2, 7).unwrap();
        let mut got: Vec<(String, String, Vec<Flag>)> =
            cands.into_iter().map(|c| (c.surface, c.etype.to_string(), c.flags)).collect();
        got.sort();
        let flag = |label| vec![Flag { offset: 0, label }];
        assert_eq!(
            got,
            vec![
                ("Acme".to_string(), "GPE".to_string(), flag(FlagLabel::DiffEtype)),
                ("Acme".to_string(), "ORG".to_string(), flag(FlagLabel::DiffEtype)),
                ("rose".to_string(), "ORG".to_string(), flag(FlagLabel::DiffI)),
            ]
        );
    }

    #[test]
    fn unique_token_is_unseen_when_held_out() {
        let mut sents = Vec::new();
        for d in 0..10 {
            sents.push(sentence(&format!("doc{d}"), 0, &[("Common", "B-ORG"), ("said", "O")]));
        }
        sents.push(sentence("doc3", 1, &[("Zanzibarium", "B-PRODUCT")]));
        let c = Corpus::new(Partition::Train, sents);
        let cands = cross_validated_flags(&c, 10, 1).unwrap();
        assert_eq!(cands.len(), 1);
        assert_eq!(cands[0].surface, "Zanzibarium");
        assert_eq!(cands[0].flags[0].label, FlagLabel::UnseenI);
        assert_eq!(cross_validated_flags(&c, 10, 1).unwrap(), cands);
    }

    #[test]
    fn pairs() {
        let c = Corpus::new(
            Partition::Dev,
            vec![
                sentence("d", 0, &[("US", "B-GPE"), ("for", "O"), ("the", "O"), ("first", "B-PERSON"), ("time", "O")]),
                sentence("d", 1, &[("US", "B-GPE")]),
                sentence("d", 2, &[("US", "B-GPE"), ("US", "B-ORG")]),
            ],
        );
        let p = mention_type_pairs(&c, None).unwrap();
        let rows: Vec<(&str, &str, u64)> = p.iter().map(|e| (e.surface.as_str(), e.etype.name(), e.count)).collect();
        assert_eq!(rows, vec![("US", "GPE", 3), ("US", "ORG", 1), ("first", "PERSON", 1)]);
        assert_eq!(p.iter().map(|e| e.count).sum::<u64>(), c.mentions().unwrap().len() as u64);

        let only: Vec<EntityType> = vec!["PERSON".into()];
        let p = mention_type_pairs(&c, Some(&only)).unwrap();
        assert_eq!(p, vec![PairEntry { surface: "first".into(), etype: "PERSON".into(), count: 1 }]);
        assert!(mention_type_pairs(&Corpus::default(), None).unwrap().is_empty());

        let cands = pair_candidates(&c, &p).unwrap();
        assert_eq!(cands.len(), 1);
        assert_eq!(cands[0].source, CandidateSource::PairList);
        assert_eq!(cands[0].occurrences[0].start, 3);
    }
}
