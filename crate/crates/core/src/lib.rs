//! Auditing toolkit for BIO-tagged named-entity corpora.
//!
//! - [`corpus`]: column-format parsing, validation, mention extraction and edits.
//! - [`detector`]: token-frequency profiles and flagging of suspicious mentions.
//! - [`rules`]: guideline rules that propose span corrections, the decision log and replay.
//! - [`diff`]: mention-level comparison of two versions of a corpus.
//! - [`score`]: exact-match span scoring and score comparisons.
//! - [`synth`]: seeded synthetic corpora for tests and benchmarks.

pub mod corpus;
pub mod detector;
pub mod diff;
pub mod rules;
pub mod score;
pub mod synth;
mod util;

pub use corpus::{Corpus, CorpusError, EntityType, LabeledToken, Mention, Partition, Sentence, Tag};
pub use detector::{Candidate, CandidateSource, CandidateStatus, Profile, SubsetLabel};
pub use diff::{diff_corpora, DiffReport};
pub use rules::{Decision, EditProposal, RuleSet, Verdict};
pub use score::{compare, score, DeltaReport, ScoreReport};
