use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::SubsetLabel;
use crate::corpus::{Corpus, EntityType, Mention};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FlagLabel {
    #[serde(rename = "unseen-I")]
    UnseenI,
    #[serde(rename = "diff-I")]
    DiffI,
    #[serde(rename = "diff-etype")]
    DiffEtype,
    /// Raised by a correction rule that declined to propose an automatic edit.
    #[serde(rename = "rule")]
    Rule,
}

impl From<SubsetLabel> for FlagLabel {
    fn from(l: SubsetLabel) -> Self {
        match l {
            SubsetLabel::UnseenI => FlagLabel::UnseenI,
            SubsetLabel::DiffI => FlagLabel::DiffI,
            SubsetLabel::DiffEtype => FlagLabel::DiffEtype,
        }
    }
}

impl FlagLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            FlagLabel::UnseenI => "unseen-I",
            FlagLabel::DiffI => "diff-I",
            FlagLabel::DiffEtype => "diff-etype",
            FlagLabel::Rule => "rule",
        }
    }
}

/// A flagged token, by offset inside its mention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Flag {
    pub offset: usize,
    pub label: FlagLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSource {
    Hardeval,
    PairList,
    Rule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateStatus {
    #[default]
    Pending,
    ConfirmedError,
    Dismissed,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Occurrence {
    pub doc_id: String,
    pub sent_index: usize,
    pub start: usize,
    pub end: usize,
}

impl Occurrence {
    pub fn of(m: &Mention) -> Self {
        Occurrence { doc_id: m.doc_id.clone(), sent_index: m.sent_index, start: m.start, end: m.end }
    }
}

/// A mention (with all its identical occurrences) awaiting review.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: String,
    pub surface: String,
    pub etype: EntityType,
    pub flags: Vec<Flag>,
    pub occurrences: Vec<Occurrence>,
    /// Token texts of the sentence of the first occurrence.
    pub context_sample: Vec<String>,
    pub source: CandidateSource,
    #[serde(default)]
    pub status: CandidateStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Candidate {
    /// The first occurrence as a mention.
    pub fn mention(&self) -> Option<Mention> {
        self.occurrences.first().map(|o| Mention {
            doc_id: o.doc_id.clone(),
            sent_index: o.sent_index,
            start: o.start,
            end: o.end,
            etype: self.etype.clone(),
            surface: self.surface.clone(),
        })
    }
}

pub(crate) struct Hit {
    pub mention: Mention,
    pub flags: Vec<Flag>,
    pub sentence_pos: usize,
}

/// Collapses hits on (surface, type, flags), keeping occurrences in input order.
pub(crate) fn aggregate_hits(corpus: &Corpus, hits: Vec<Hit>) -> Vec<Candidate> {
    let mut index: HashMap<(String, EntityType, Vec<Flag>), usize> = HashMap::new();
    let mut groups: Vec<(Hit, Vec<Occurrence>)> = Vec::new();
    for hit in hits {
        let key = (hit.mention.surface.clone(), hit.mention.etype.clone(), hit.flags.clone());
        let occ = Occurrence::of(&hit.mention);
        match index.get(&key) {
            Some(&i) => groups[i].1.push(occ),
            None => {
                index.insert(key, groups.len());
                groups.push((hit, vec![occ]));
            }
        }
    }
    let mut out: Vec<Candidate> = groups
        .into_iter()
        .map(|(first, occurrences)| {
            let flag_key: Vec<String> = first.flags.iter().map(|f| format!("{}:{}", f.offset, f.label.as_str())).collect();
            Candidate {
                id: crate::util::stable_id(&["hardeval", &first.mention.surface, first.mention.etype.name(), &flag_key.join(",")]),
                surface: first.mention.surface,
                etype: first.mention.etype,
                flags: first.flags,
                occurrences,
                context_sample: corpus.sentences[first.sentence_pos].texts(),
                source: super::CandidateSource::Hardeval,
                status: CandidateStatus::Pending,
                note: None,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.occurrences
            .len()
            .cmp(&a.occurrences.len())
            .then_with(|| a.surface.cmp(&b.surface))
            .then_with(|| a.etype.cmp(&b.etype))
            .then_with(|| a.flags.cmp(&b.flags))
    });
    out
}
