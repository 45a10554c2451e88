use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EditProposal, RuleError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Accept,
    Reject,
    Ambiguous,
    /// Apply the attached replacement instead.
    Modify,
}

/// A reviewer's verdict on one proposal or candidate. The latest entry for an id wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub proposal_id: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replacement: Option<EditProposal>,
    pub actor: String,
    pub timestamp: String,
}

impl Decision {
    pub fn new(proposal_id: impl Into<String>, verdict: Verdict, actor: impl Into<String>, timestamp: impl Into<String>) -> Self {
        Decision { proposal_id: proposal_id.into(), verdict, replacement: None, actor: actor.into(), timestamp: timestamp.into() }
    }

    pub fn modify(proposal_id: impl Into<String>, replacement: EditProposal, actor: impl Into<String>, timestamp: impl Into<String>) -> Self {
        Decision { replacement: Some(replacement), ..Decision::new(proposal_id, Verdict::Modify, actor, timestamp) }
    }

    pub fn validate(&self) -> Result<(), RuleError> {
        match (self.verdict, &self.replacement) {
            (Verdict::Modify, None) => Err(RuleError::InvalidDecision {
                id: self.proposal_id.clone(),
                reason: "modify verdict without replacement".to_string(),
            }),
            (Verdict::Accept | Verdict::Reject | Verdict::Ambiguous, Some(_)) => Err(RuleError::InvalidDecision {
                id: self.proposal_id.clone(),
                reason: "replacement given for a verdict other than modify".to_string(),
            }),
            _ => Ok(()),
        }
    }
}

/// Reads JSON-lines decisions. A final line without a newline that fails to
/// parse is treated as a torn write and dropped.
pub fn read_decisions<R: BufRead>(mut reader: R) -> Result<Vec<Decision>, RuleError> {
    let mut out = Vec::new();
    let mut line = String::new();
    let mut line_no = 0;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        line_no += 1;
        let complete = line.ends_with('\n');
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        match serde_json::from_str::<Decision>(text) {
            Ok(d) => {
                d.validate()?;
                out.push(d);
            }
            Err(_) if !complete => break,
            Err(source) => return Err(RuleError::Json { line: line_no, source }),
        }
    }
    Ok(out)
}

/// The last decision per id.
pub fn effective_decisions(log: &[Decision]) -> HashMap<&str, &Decision> {
    log.iter().map(|d| (d.proposal_id.as_str(), d)).collect()
}

/// Append-only decision log file.
#[derive(Debug, Clone)]
pub struct DecisionLog {
    path: PathBuf,
}

impl DecisionLog {
    /// Opens the log, creating an empty file if needed.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, RuleError> {
        let path = path.as_ref().to_path_buf();
        OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(DecisionLog { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn read(&self) -> Result<Vec<Decision>, RuleError> {
        read_decisions(BufReader::new(File::open(&self.path)?))
    }

    /// Writes one line with a single `write_all` on an append-mode handle, then syncs.
    pub fn append(&self, decision: &Decision) -> Result<(), RuleError> {
        decision.validate()?;
        let mut line = serde_json::to_string(decision).map_err(|source| RuleError::Json { line: 0, source })?;
        line.push('\n');
        let mut f = OpenOptions::new().append(true).open(&self.path)?;
        f.write_all(line.as_bytes())?;
        f.sync_data()?;
        Ok(())
    }
}
