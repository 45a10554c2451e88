//! Guideline-derived correction rules.
//!
//! A [`Rule`] inspects one mention and either proposes an edit or asks for a
//! manual look. [`scan`] runs a [`RuleSet`] over a corpus; reviewers answer
//! proposals with [`Decision`]s kept in an append-only log, and [`replay`]
//! turns the original corpus plus that log into the corrected corpus.

mod builtin;
mod decision;
mod proposal;
mod replay;

use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{extract_mentions, Corpus, CorpusError, EditOp, Mention};
use crate::detector::{Candidate, CandidateSource, CandidateStatus, Flag, FlagLabel, Occurrence};

pub use builtin::{is_punctuation_token, rule_edge_punctuation, rule_leading_determiner, rule_trailing_possessive, EdgePunctuation, LeadingDeterminer, TrailingPossessive};
pub use decision::{effective_decisions, read_decisions, Decision, DecisionLog, Verdict};
pub use proposal::EditProposal;
pub use replay::{replay, ReplayReport, Replayer, SkippedEdit};

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("unknown rule {0:?}")]
    UnknownRule(String),
    #[error("decision references unknown proposal {0:?}")]
    UnknownProposal(String),
    #[error("invalid decision for {id}: {reason}")]
    InvalidDecision { id: String, reason: String },
    #[error("decision log line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error("decision log: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// What a rule concluded about a mention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Finding {
    Propose(EditOp),
    /// No safe automatic edit; the mention goes to manual review.
    Review { offset: usize, note: String },
}

pub trait Rule: Send + Sync {
    fn id(&self) -> &str;
    fn check(&self, mention: &Mention) -> Option<Finding>;
}

/// Named, independently toggleable rules.
#[derive(Clone)]
pub struct RuleSet {
    rules: Vec<Arc<dyn Rule>>,
}

impl RuleSet {
    pub const BUILTIN_IDS: [&'static str; 3] = ["leading_determiner", "trailing_possessive", "edge_punctuation"];

    pub fn builtin() -> Self {
        RuleSet { rules: vec![Arc::new(LeadingDeterminer), Arc::new(TrailingPossessive), Arc::new(EdgePunctuation)] }
    }

    pub fn empty() -> Self {
        RuleSet { rules: Vec::new() }
    }

    /// Built-in rules selected by id.
    pub fn from_ids<S: AsRef<str>>(ids: &[S]) -> Result<Self, RuleError> {
        let all = RuleSet::builtin();
        let mut rules = Vec::new();
        for id in ids {
            let id = id.as_ref();
            let rule = all.rules.iter().find(|r| r.id() == id).ok_or_else(|| RuleError::UnknownRule(id.to_string()))?;
            rules.push(rule.clone());
        }
        Ok(RuleSet { rules })
    }

    pub fn with(mut self, rule: impl Rule + 'static) -> Self {
        self.rules.push(Arc::new(rule));
        self
    }

    pub fn without(mut self, id: &str) -> Self {
        self.rules.retain(|r| r.id() != id);
        self
    }

    pub fn ids(&self) -> Vec<&str> {
        self.rules.iter().map(|r| r.id()).collect()
    }
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet::builtin()
    }
}

impl std::fmt::Debug for RuleSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.ids()).finish()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScanOutput {
    pub proposals: Vec<EditProposal>,
    /// Mentions a rule matched but would not edit automatically.
    pub review: Vec<Candidate>,
}

/// Every rule on every mention. Proposals are ordered by
/// (doc_id, sent_index, start, rule_id).
pub fn scan(c: &Corpus, rules: &RuleSet) -> Result<Vec<EditProposal>, CorpusError> {
    Ok(scan_all(c, rules)?.proposals)
}

/// Like [`scan`], also returning review candidates in the same order.
pub fn scan_all(c: &Corpus, rules: &RuleSet) -> Result<ScanOutput, CorpusError> {
    let per_sentence: Result<Vec<ScanOutput>, CorpusError> = c
        .sentences
        .par_iter()
        .map(|s| {
            let mut out = ScanOutput::default();
            for m in extract_mentions(s)? {
                for rule in &rules.rules {
                    match rule.check(&m) {
                        Some(Finding::Propose(op)) => out.proposals.push(EditProposal::new(rule.id(), m.clone(), op)),
                        Some(Finding::Review { offset, note }) => out.review.push(review_candidate(rule.id(), &m, offset, note, s.texts())),
                        None => {}
                    }
                }
            }
            Ok(out)
        })
        .collect();
    let mut out = ScanOutput::default();
    for part in per_sentence? {
        out.proposals.extend(part.proposals);
        out.review.extend(part.review);
    }
    out.proposals.sort_by(|a, b| {
        (&a.target.doc_id, a.target.sent_index, a.target.start, &a.rule_id).cmp(&(
            &b.target.doc_id,
            b.target.sent_index,
            b.target.start,
            &b.rule_id,
        ))
    });
    out.review.sort_by(|a, b| {
        let key = |c: &Candidate| (c.occurrences[0].clone(), c.note.clone());
        key(a).cmp(&key(b))
    });
    Ok(out)
}

fn review_candidate(rule_id: &str, m: &Mention, offset: usize, note: String, context: Vec<String>) -> Candidate {
    let sent = m.sent_index.to_string();
    let start = m.start.to_string();
    let end = m.end.to_string();
    Candidate {
        id: crate::util::stable_id(&["rule", rule_id, &m.doc_id, &sent, &start, &end, m.etype.name()]),
        surface: m.surface.clone(),
        etype: m.etype.clone(),
        flags: vec![Flag { offset, label: FlagLabel::Rule }],
        occurrences: vec![Occurrence::of(m)],
        context_sample: context,
        source: CandidateSource::Rule,
        status: CandidateStatus::Pending,
        note: Some(format!("{rule_id}: {note}")),
    }
}
