use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{effective_decisions, Decision, EditProposal, RuleError, Verdict};
use crate::corpus::{apply_edit_in_place, extract_mentions, resulting_span, Corpus, Edit, Tag};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedEdit {
    pub proposal_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayReport {
    /// Log lines read, including superseded ones.
    pub decisions: usize,
    /// Ids with at least one decision.
    pub decided: usize,
    pub applied: usize,
    /// Applied edits that came from a modify verdict.
    pub modified: usize,
    /// Edits whose result was already present in the corpus.
    pub already_applied: usize,
    pub rejected: usize,
    pub ambiguous: usize,
    /// Accepted review items that carry no edit of their own.
    pub status_only: usize,
    pub skipped: Vec<SkippedEdit>,
}

/// Replays a decision log against a corpus.
///
/// Besides proposal ids, extra review ids (detector candidates) may be
/// registered; decisions on those only produce edits through a modify verdict.
#[derive(Debug, Clone, Default)]
pub struct Replayer<'a> {
    proposals: HashMap<&'a str, &'a EditProposal>,
    review_ids: HashSet<String>,
}

struct Pending {
    proposal_id: String,
    edit: Edit,
    order: (String, usize, usize, String),
    modified: bool,
}

impl<'a> Replayer<'a> {
    pub fn new(proposals: &'a [EditProposal]) -> Self {
        Replayer { proposals: proposals.iter().map(|p| (p.id.as_str(), p)).collect(), review_ids: HashSet::new() }
    }

    pub fn with_review_ids<I: IntoIterator<Item = String>>(mut self, ids: I) -> Self {
        self.review_ids.extend(ids);
        self
    }

    pub fn knows(&self, id: &str) -> bool {
        self.proposals.contains_key(id) || self.review_ids.contains(id)
    }

    /// Applies the effective accepted or modified edits in scan order.
    ///
    /// Edits whose target is gone are skipped and reported, never forced. Passes
    /// repeat until no further edit applies, so replaying the output again
    /// changes nothing.
    pub fn run(&self, corpus: &Corpus, log: &[Decision]) -> Result<(Corpus, ReplayReport), RuleError> {
        for d in log {
            if !self.knows(&d.proposal_id) {
                return Err(RuleError::UnknownProposal(d.proposal_id.clone()));
            }
            d.validate()?;
        }
        let effective = effective_decisions(log);
        let mut report = ReplayReport { decisions: log.len(), decided: effective.len(), ..Default::default() };
        let mut pending = Vec::new();
        for (id, d) in &effective {
            let original = self.proposals.get(id).copied();
            let (edit, modified) = match d.verdict {
                Verdict::Reject => {
                    report.rejected += 1;
                    continue;
                }
                Verdict::Ambiguous => {
                    report.ambiguous += 1;
                    continue;
                }
                Verdict::Accept => match original {
                    Some(p) => (p.edit(), false),
                    None => {
                        report.status_only += 1;
                        continue;
                    }
                },
                Verdict::Modify => (d.replacement.as_ref().expect("validated").edit(), true),
            };
            let anchor = original.unwrap_or_else(|| d.replacement.as_ref().expect("validated"));
            let order = (anchor.target.doc_id.clone(), anchor.target.sent_index, anchor.target.start, anchor.rule_id.clone());
            pending.push(Pending { proposal_id: id.to_string(), edit, order, modified });
        }
        pending.sort_by(|a, b| a.order.cmp(&b.order).then_with(|| a.proposal_id.cmp(&b.proposal_id)));

        let mut out = corpus.clone();
        let index = out.index();
        let mut last_error: HashMap<String, String> = HashMap::new();
        loop {
            let mut progressed = false;
            let mut still = Vec::new();
            for p in pending {
                let Some(pos) = index.get(&p.edit.target.doc_id, p.edit.target.sent_index) else {
                    last_error.insert(p.proposal_id.clone(), "sentence not found".to_string());
                    still.push(p);
                    continue;
                };
                match apply_edit_in_place(&mut out.sentences[pos], &p.edit) {
                    Ok(()) => {
                        report.applied += 1;
                        report.modified += usize::from(p.modified);
                        progressed = true;
                    }
                    Err(e) => {
                        last_error.insert(p.proposal_id.clone(), e.to_string());
                        still.push(p);
                    }
                }
            }
            pending = still;
            if !progressed || pending.is_empty() {
                break;
            }
        }
        for p in pending {
            let satisfied = index.get(&p.edit.target.doc_id, p.edit.target.sent_index).is_some_and(|pos| already_satisfied(&out, pos, &p.edit));
            if satisfied {
                report.already_applied += 1;
            } else {
                let reason = last_error.remove(&p.proposal_id).unwrap_or_default();
                report.skipped.push(SkippedEdit { proposal_id: p.proposal_id, reason });
            }
        }
        Ok((out, report))
    }
}

/// The edit's intended result is present although its target is not.
fn already_satisfied(c: &Corpus, pos: usize, edit: &Edit) -> bool {
    let s = &c.sentences[pos];
    let t = &edit.target;
    if t.end > s.tokens.len() {
        return false;
    }
    match resulting_span(t, &edit.operation, s.tokens.len()) {
        Ok(None) => s.tokens[t.start..t.end].iter().all(|tok| tok.tag == Tag::O),
        Ok(Some((start, end, etype))) => extract_mentions(s)
            .map(|ms| ms.iter().any(|m| m.start == start && m.end == end && m.etype == etype))
            .unwrap_or(false),
        Err(_) => false,
    }
}

/// Replays `log` over `c` using `proposals` to resolve ids.
pub fn replay(c: &Corpus, log: &[Decision], proposals: &[EditProposal]) -> Result<(Corpus, ReplayReport), RuleError> {
    Replayer::new(proposals).run(c, log)
}
