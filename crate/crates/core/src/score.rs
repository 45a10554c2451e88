//! Exact-match span scoring and comparisons between evaluation runs.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{mention_spans, Corpus, CorpusError, EntityType, Sentence};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("F1 value {0} is outside [0, 100]")]
    OutOfRange(f64),
}

/// Counts and derived rates (percent) for one type or overall.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn from_counts(tp: u64, fp: u64, fn_: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
        Metrics { tp, fp, fn_, precision, recall, f1 }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeMetrics {
    #[serde(rename = "type")]
    pub etype: EntityType,
    #[serde(flatten)]
    pub metrics: Metrics,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    /// Types occurring in gold or predictions, by name.
    pub per_type: Vec<TypeMetrics>,
    pub overall: Metrics,
}

impl ScoreReport {
    pub fn get(&self, etype: &str) -> Option<&Metrics> {
        self.per_type.iter().find(|t| t.etype.name() == etype).map(|t| &t.metrics)
    }

    /// Overall counts equal the per-type sums.
    pub fn is_micro_consistent(&self) -> bool {
        let sum = |f: fn(&Metrics) -> u64| self.per_type.iter().map(|t| f(&t.metrics)).sum::<u64>();
        sum(|m| m.tp) == self.overall.tp && sum(|m| m.fp) == self.overall.fp && sum(|m| m.fn_) == self.overall.fn_
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<14} {:>7} {:>7} {:>7} {:>8} {:>8} {:>8}", "Type", "TP", "FP", "FN", "P", "R", "F1");
        let row = |out: &mut String, name: &str, m: &Metrics| {
            let _ = writeln!(
                out,
                "{:<14} {:>7} {:>7} {:>7} {:>8} {:>8} {:>8}",
                name,
                m.tp,
                m.fp,
                m.fn_,
                fmt2(m.precision),
                fmt2(m.recall),
                fmt2(m.f1)
            );
        };
        for t in &self.per_type {
            row(&mut out, t.etype.name(), &t.metrics);
        }
        row(&mut out, "overall", &self.overall);
        out
    }
}

type Counts = BTreeMap<EntityType, (u64, u64, u64)>;

fn sentence_counts(gold: &Sentence, pred: &Sentence) -> Result<Counts, CorpusError> {
    if !gold.same_texts(pred) {
        return Err(CorpusError::StructureMismatch(format!("token texts differ in sentence {}/{}", gold.doc_id, gold.sent_index)));
    }
    let spans = |s: &Sentence| -> Result<Vec<(usize, usize, EntityType)>, CorpusError> {
        mention_spans(&s.tokens)
            .map(|v| v.into_iter().map(|(a, b, t)| (a, b, t.clone())).collect())
            .map_err(|(i, message)| CorpusError::InvalidBio { doc_id: s.doc_id.clone(), sent_index: s.sent_index, message: format!("token {i}: {message}") })
    };
    let g = spans(gold)?;
    let p = spans(pred)?;
    let gold_set: HashSet<&(usize, usize, EntityType)> = g.iter().collect();
    let pred_set: HashSet<&(usize, usize, EntityType)> = p.iter().collect();
    let mut counts = Counts::new();
    for m in &p {
        let e = counts.entry(m.2.clone()).or_default();
        if gold_set.contains(m) {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    for m in &g {
        if !pred_set.contains(m) {
            counts.entry(m.2.clone()).or_default().2 += 1;
        }
    }
    Ok(counts)
}

/// Scores predictions against gold. A predicted mention is a true positive iff
/// gold has a mention with the same sentence, span and type.
pub fn score(gold: &Corpus, pred: &Corpus) -> Result<ScoreReport, ScoreError> {
    gold.check_aligned(pred)?;
    let counts = gold
        .sentences
        .par_iter()
        .zip(pred.sentences.par_iter())
        .map(|(g, p)| sentence_counts(g, p))
        .try_reduce(Counts::new, |mut a, b| {
            for (t, (tp, fp, fn_)) in b {
                let e = a.entry(t).or_default();
                e.0 += tp;
                e.1 += fp;
                e.2 += fn_;
            }
            Ok(a)
        })?;
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    let per_type = counts
        .into_iter()
        .map(|(etype, (a, b, c))| {
            tp += a;
            fp += b;
            fn_ += c;
            TypeMetrics { etype, metrics: Metrics::from_counts(a, b, c) }
        })
        .collect();
    Ok(ScoreReport { per_type, overall: Metrics::from_counts(tp, fp, fn_) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaReport {
    pub old_f1: f64,
    pub new_f1: f64,
    pub delta: f64,
    /// Percent of the remaining error (100 − old F1) removed; absent when old F1 is 100.
    pub err_reduction: Option<f64>,
}

/// Delta and relative error reduction between two F1 values in percent.
pub fn compare(old_f1: f64, new_f1: f64) -> Result<DeltaReport, ScoreError> {
    for v in [old_f1, new_f1] {
        if !(0.0..=100.0).contains(&v) {
            return Err(ScoreError::OutOfRange(v));
        }
    }
    let delta = new_f1 - old_f1;
    let err_reduction = (old_f1 < 100.0).then(|| 100.0 * delta / (100.0 - old_f1));
    Ok(DeltaReport { old_f1, new_f1, delta, err_reduction })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDelta {
    pub label: String,
    #[serde(flatten)]
    pub delta: DeltaReport,
}

/// Overall comparison, or one row per type present in either report (a type
/// missing from one report counts as F1 0 there).
pub fn compare_reports(old: &ScoreReport, new: &ScoreReport, per_type: bool) -> Result<Vec<LabeledDelta>, ScoreError> {
    if !per_type {
        return Ok(vec![LabeledDelta { label: "overall".to_string(), delta: compare(old.overall.f1, new.overall.f1)? }]);
    }
    let mut types: Vec<&EntityType> = old.per_type.iter().chain(&new.per_type).map(|t| &t.etype).collect();
    types.sort_by_key(|t| (t.kind() == crate::corpus::EntityKind::Value, t.name().to_string()));
    types.dedup();
    types
        .into_iter()
        .map(|t| {
            let f = |r: &ScoreReport| r.get(t.name()).map(|m| m.f1).unwrap_or(0.0);
            Ok(LabeledDelta { label: t.to_string(), delta: compare(f(old), f(new))? })
        })
        .collect()
}

/// Rounds half away from zero to two decimals.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn fmt2(x: f64) -> String {
    format!("{:.2}", round2(x))
}

/// Text table with F1, delta and error reduction columns.
pub fn render_deltas(rows: &[LabeledDelta]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<14} {:>8} {:>8} {:>8} {:>10}", "", "Old F1", "New F1", "Delta", "Err. red.");
    for r in rows {
        let red = r.delta.err_reduction.map(|e| format!("{}%", fmt2(e))).unwrap_or_else(|| "n/a".to_string());
        let _ = writeln!(
            out,
            "{:<14} {:>8} {:>8} {:>8} {:>10}",
            r.label,
            fmt2(r.delta.old_f1),
            fmt2(r.delta.new_f1),
            fmt2(r.delta.delta),
            red
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Partition;

    fn corpus(sents: &[&[(&str, &str)]]) -> Corpus {
        Corpus::new(Partition::Test, sents.iter().enumerate().map(|(i, p)| Sentence::from_pairs("d", i, p)).collect())
    }

    #[test]
    fn perfect_predictions() {
        let g = corpus(&[&[("US", "B-GPE"), ("Bank", "B-ORG"), ("of", "I-ORG"), ("X", "I-ORG")]]);
        let r = score(&g, &g).unwrap();
        assert_eq!(r.overall.f1, 100.0);
        assert!(r.per_type.iter().all(|t| t.metrics.f1 == 100.0));
        assert!(r.is_micro_consistent());
    }

    #[test]
    fn one_match_one_spurious() {
        let g = corpus(&[&[("a", "B-ORG"), ("b", "O"), ("c", "B-GPE")]]);
        let p = corpus(&[&[("a", "B-ORG"), ("b", "B-PERSON"), ("c", "O")]]);
        let r = score(&g, &p).unwrap();
        assert_eq!((r.overall.tp, r.overall.fp, r.overall.fn_), (1, 1, 1));
        assert_eq!(round2(r.overall.precision), 50.0);
        assert_eq!(round2(r.overall.recall), 50.0);
        assert_eq!(round2(r.overall.f1), 50.0);
    }

    #[test]
    fn wrong_type_counts_twice() {
        let g = corpus(&[&[("NYC", "B-LOC")]]);
        let p = corpus(&[&[("NYC", "B-GPE")]]);
        let r = score(&g, &p).unwrap();
        assert_eq!(r.get("LOC").unwrap().fn_, 1);
        assert_eq!(r.get("GPE").unwrap().fp, 1);
        assert_eq!(r.get("LOC").unwrap().f1, 0.0);
        assert_eq!(r.get("GPE").unwrap().f1, 0.0);
    }

    #[test]
    fn known_error_reductions() {
        for (old, new, delta, red) in [(89.70, 90.97, 1.27, 12.33), (89.51, 90.54, 1.03, 9.82), (85.92, 87.52, 1.60, 11.36), (89.58, 90.59, 1.01, 9.69)] {
            let d = compare(old, new).unwrap();
            assert!((d.delta - delta).abs() < 1e-9);
            assert!((d.err_reduction.unwrap() - red).abs() <= 0.01, "{old} -> {new}");
        }
    }

    #[test]
    fn compare_edges() {
        assert_eq!(compare(42.0, 42.0).unwrap().err_reduction, Some(0.0));
        assert_eq!(compare(100.0, 100.0).unwrap().err_reduction, None);
        assert_eq!(compare(100.0, 99.0).unwrap().err_reduction, None);
        assert!(compare(-1.0, 5.0).is_err());
        assert!(compare(5.0, 100.5).is_err());
        let d = compare(90.0, 89.0).unwrap();
        assert!(d.delta < 0.0 && d.err_reduction.unwrap() < 0.0);
    }

    #[test]
    fn rounding() {
        assert_eq!(fmt2(12.330097), "12.33");
        assert_eq!(fmt2(0.125), "0.13");
        assert_eq!(fmt2(-4.005), "-4.01");
    }

    #[test]
    fn per_type_comparison_covers_union() {
        let g = corpus(&[&[("a", "B-ORG"), ("b", "B-DATE")]]);
        let p1 = corpus(&[&[("a", "B-ORG"), ("b", "O")]]);
        let p2 = corpus(&[&[("a", "B-PERSON"), ("b", "B-DATE")]]);
        let r1 = score(&g, &p1).unwrap();
        let r2 = score(&g, &p2).unwrap();
        let rows = compare_reports(&r1, &r2, true).unwrap();
        let labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, vec!["ORG", "PERSON", "DATE"]);
        assert!(render_deltas(&rows).contains("Err. red."));
        assert_eq!(compare_reports(&r1, &r2, false).unwrap().len(), 1);
    }
}
