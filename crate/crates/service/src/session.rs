use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ner_audit_core::corpus::{parse_corpus, serialize_corpus, ColumnFormat, EditOp, Mention};
use ner_audit_core::detector::{Flag, FlagLabel, Occurrence};
use ner_audit_core::diff::diff_corpora;
use ner_audit_core::rules::{effective_decisions, DecisionLog, ReplayReport, Replayer, RuleError};
use ner_audit_core::{Candidate, CandidateSource, CandidateStatus, Corpus, Decision, DiffReport, EditProposal, Verdict};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("unknown candidate {0:?}")]
    UnknownId(String),
    #[error("{0}")]
    BadRequest(String),
    #[error(transparent)]
    Rules(#[from] RuleError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub corpus: PathBuf,
    pub format: ColumnFormat,
    pub candidates: Option<PathBuf>,
    pub proposals: Option<PathBuf>,
    pub log: PathBuf,
    pub export_dir: PathBuf,
    /// Default actor for decisions that do not name one.
    pub actor: String,
}

impl SessionConfig {
    pub fn new(corpus: impl Into<PathBuf>, log: impl Into<PathBuf>) -> Self {
        let corpus = corpus.into();
        let export_dir = corpus.parent().map(Path::to_path_buf).unwrap_or_default().join("export");
        SessionConfig {
            corpus,
            format: ColumnFormat::repair(),
            candidates: None,
            proposals: None,
            log: log.into(),
            export_dir,
            actor: "reviewer".to_string(),
        }
    }
}

/// Replacement edit in a modify decision. The target defaults to the
/// candidate's first occurrence.
#[derive(Debug, Clone, Deserialize)]
pub struct ReplacementBody {
    pub target: Option<Mention>,
    pub operation: EditOp,
}

#[derive(Debug, Clone, Deserialize)]
pub struct DecisionBody {
    pub verdict: Verdict,
    pub replacement: Option<ReplacementBody>,
    pub actor: Option<String>,
}

/// Result of replaying the log, recomputed after each decision.
#[derive(Debug, Clone)]
pub struct Derived {
    pub working: Corpus,
    pub replay: ReplayReport,
    pub diff: DiffReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExportPaths {
    pub corrected: PathBuf,
    pub report: PathBuf,
}

#[derive(Debug, Serialize)]
struct ExportReport<'a> {
    diff: &'a DiffReport,
    replay: &'a ReplayReport,
}

/// Review state. Everything except the log is read-only; the working corpus
/// is always the replay of the log over the original.
#[derive(Debug)]
pub struct Session {
    config: SessionConfig,
    original: Corpus,
    proposals: Vec<EditProposal>,
    candidates: Vec<Candidate>,
    by_id: HashMap<String, usize>,
    proposal_index: HashMap<String, usize>,
    log: DecisionLog,
    decisions: Vec<Decision>,
    derived: Arc<Derived>,
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, SessionError> {
    let input = |message: String| SessionError::Input { path: path.to_path_buf(), message };
    let file = fs::File::open(path).map_err(|e| input(e.to_string()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| input(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| input(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

fn proposal_candidate(p: &EditProposal, context: Vec<String>) -> Candidate {
    Candidate {
        id: p.id.clone(),
        surface: p.target.surface.clone(),
        etype: p.target.etype.clone(),
        flags: vec![Flag { offset: 0, label: FlagLabel::Rule }],
        occurrences: vec![Occurrence::of(&p.target)],
        context_sample: context,
        source: CandidateSource::Rule,
        status: CandidateStatus::Pending,
        note: Some(p.rule_id.clone()),
    }
}

pub fn status_of(d: Option<&Decision>) -> CandidateStatus {
    match d.map(|d| d.verdict) {
        None => CandidateStatus::Pending,
        Some(Verdict::Accept | Verdict::Modify) => CandidateStatus::ConfirmedError,
        Some(Verdict::Reject) => CandidateStatus::Dismissed,
        Some(Verdict::Ambiguous) => CandidateStatus::Ambiguous,
    }
}

impl Session {
    pub fn load(config: SessionConfig) -> Result<Self, SessionError> {
        let file = fs::File::open(&config.corpus).map_err(|e| SessionError::Input { path: config.corpus.clone(), message: e.to_string() })?;
        let (original, _) = parse_corpus(BufReader::new(file), &config.format)
            .map_err(|e| SessionError::Input { path: config.corpus.clone(), message: e.to_string() })?;
        let proposals: Vec<EditProposal> = match &config.proposals {
            Some(p) => read_jsonl(p)?,
            None => Vec::new(),
        };
        let loaded: Vec<Candidate> = match &config.candidates {
            Some(p) => read_jsonl(p)?,
            None => Vec::new(),
        };
        let log = DecisionLog::open(&config.log)?;
        let decisions = log.read()?;

        // Detector candidates keep their file order (occurrence count first);
        // rule proposals follow in scan order.
        let index = original.index();
        let mut candidates = loaded;
        let mut proposal_index = HashMap::new();
        for (i, p) in proposals.iter().enumerate() {
            proposal_index.insert(p.id.clone(), i);
            if candidates.iter().any(|c| c.id == p.id) {
                continue;
            }
            let context = index.get(&p.target.doc_id, p.target.sent_index).map(|pos| original.sentences[pos].texts()).unwrap_or_default();
            candidates.push(proposal_candidate(p, context));
        }
        let by_id = candidates.iter().enumerate().map(|(i, c)| (c.id.clone(), i)).collect();
        let derived = Arc::new(Self::derive(&original, &proposals, &candidates, &decisions)?);
        let mut s = Session { config, original, proposals, candidates, by_id, proposal_index, log, decisions, derived };
        s.refresh_statuses();
        Ok(s)
    }

    fn derive(original: &Corpus, proposals: &[EditProposal], candidates: &[Candidate], log: &[Decision]) -> Result<Derived, SessionError> {
        let (working, replay) = Replayer::new(proposals).with_review_ids(candidates.iter().map(|c| c.id.clone())).run(original, log)?;
        let diff = diff_corpora(original, &working).map_err(RuleError::from)?;
        Ok(Derived { working, replay, diff })
    }

    fn refresh_statuses(&mut self) {
        let effective = effective_decisions(&self.decisions);
        for c in &mut self.candidates {
            c.status = status_of(effective.get(c.id.as_str()).copied());
        }
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn original(&self) -> &Corpus {
        &self.original
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn candidate(&self, id: &str) -> Option<&Candidate> {
        self.by_id.get(id).map(|&i| &self.candidates[i])
    }

    pub fn proposal(&self, id: &str) -> Option<&EditProposal> {
        self.proposal_index.get(id).map(|&i| &self.proposals[i])
    }

    pub fn proposals(&self) -> &[EditProposal] {
        &self.proposals
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    pub fn derived(&self) -> Arc<Derived> {
        self.derived.clone()
    }

    /// Builds, logs and applies one decision. The log line is written before
    /// any in-memory state changes.
    pub fn decide(&mut self, id: &str, body: DecisionBody) -> Result<Decision, SessionError> {
        let candidate = self.candidate(id).ok_or_else(|| SessionError::UnknownId(id.to_string()))?;
        let actor = body.actor.unwrap_or_else(|| self.config.actor.clone());
        let timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
        let decision = match (body.verdict, body.replacement) {
            (Verdict::Modify, Some(r)) => {
                let target = r.target.or_else(|| candidate.mention()).ok_or_else(|| SessionError::BadRequest("candidate has no occurrence".into()))?;
                Decision::modify(id, EditProposal::new("review", target, r.operation), actor, timestamp)
            }
            (Verdict::Modify, None) => return Err(SessionError::BadRequest("modify requires a replacement".into())),
            (_, Some(_)) => return Err(SessionError::BadRequest("replacement is only allowed with modify".into())),
            (verdict, None) => Decision::new(id, verdict, actor, timestamp),
        };
        let mut log = self.decisions.clone();
        log.push(decision.clone());
        let derived = Self::derive(&self.original, &self.proposals, &self.candidates, &log)?;
        self.log.append(&decision)?;
        self.decisions = log;
        self.derived = Arc::new(derived);
        let i = self.by_id[id];
        self.candidates[i].status = status_of(Some(&decision));
        Ok(decision)
    }

    pub fn status_counts(&self) -> BTreeMap<&'static str, usize> {
        let mut out: BTreeMap<&'static str, usize> =
            ["pending", "confirmed_error", "dismissed", "ambiguous"].into_iter().map(|k| (k, 0)).collect();
        for c in &self.candidates {
            let key = match c.status {
                CandidateStatus::Pending => "pending",
                CandidateStatus::ConfirmedError => "confirmed_error",
                CandidateStatus::Dismissed => "dismissed",
                CandidateStatus::Ambiguous => "ambiguous",
            };
            *out.entry(key).or_default() += 1;
        }
        out
    }

    /// Writes `corrected.conll` and `report.json` into the export directory.
    pub fn export(&self) -> Result<ExportPaths, SessionError> {
        fs::create_dir_all(&self.config.export_dir)?;
        let corrected = self.config.export_dir.join("corrected.conll");
        let report = self.config.export_dir.join("report.json");
        let d = &self.derived;
        let fmt = self.config.format.clone().with_strictness(ner_audit_core::corpus::Strictness::Strict);
        fs::write(&corrected, serialize_corpus(&d.working, &fmt))?;
        let json = serde_json::to_string_pretty(&ExportReport { diff: &d.diff, replay: &d.replay }).expect("report serializes");
        fs::write(&report, json + "\n")?;
        Ok(ExportPaths { corrected, report })
    }
}
