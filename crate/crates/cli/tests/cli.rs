use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

const CORPUS: &str = "\
# a
In O
the B-GPE
US I-GPE
. O

Boris B-PERSON
Yelstin I-PERSON
's I-PERSON
left O

# b
Europe B-LOC
voted O

the O
US B-GPE
voted O

";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ner-audit"))
}

fn run(args: &[&str]) -> Output {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success() || out.status.code() == Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn workspace() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("train.conll");
    fs::write(&corpus, CORPUS).unwrap();
    (dir, corpus)
}

fn jsonl(path: &Path) -> Vec<Value> {
    fs::read_to_string(path).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn parse_check_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conll");
    fs::write(&bad, "the O\nrose I-PERSON\n\n").unwrap();
    let strict = bin().args(["parse-check", p(&bad)]).output().unwrap();
    assert_eq!(strict.status.code(), Some(1));
    let v: Value = serde_json::from_slice(strict.stdout.split(|&b| b == b'\n').next().unwrap()).unwrap();
    assert_eq!(v["kind"], "I-after-O");
    assert_eq!(v["token_index"], 1);
    let repaired = bin().args(["parse-check", "--repair", p(&bad)]).output().unwrap();
    assert!(repaired.status.success());
    assert_eq!(String::from_utf8(repaired.stdout).unwrap().lines().count(), 1);

    let (_dir, good) = workspace();
    let ok = run(&["parse-check", p(&good)]);
    assert!(ok.status.success() && ok.stdout.is_empty());
}

#[test]
fn scan_review_apply_diff_pipeline() {
    let (dir, corpus) = workspace();
    let props = dir.path().join("proposals.jsonl");
    run(&["rules", "scan", "--in", p(&corpus), "--out", p(&props)]);
    let proposals = jsonl(&props);
    let rules: Vec<&str> = proposals.iter().map(|p| p["rule_id"].as_str().unwrap()).collect();
    assert_eq!(rules, vec!["leading_determiner", "trailing_possessive"]);

    let log = dir.path().join("decisions.jsonl");
    let mut child = bin()
        .args(["rules", "interactive", "--in", p(&corpus), "--proposals", p(&props), "--log", p(&log)])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"x\na\nr\n").unwrap();
    assert!(child.wait_with_output().unwrap().status.success());
    let decisions = jsonl(&log);
    assert_eq!(decisions.len(), 2);
    assert_eq!((decisions[0]["verdict"].as_str(), decisions[1]["verdict"].as_str()), (Some("accept"), Some("reject")));

    let fixed = dir.path().join("fixed.conll");
    let report = dir.path().join("report.json");
    run(&["rules", "apply", "--in", p(&corpus), "--proposals", p(&props), "--log", p(&log), "--out", p(&fixed), "--report", p(&report)]);
    let text = fs::read_to_string(&fixed).unwrap();
    assert!(text.starts_with("# a\nIn O\nthe O\nUS B-GPE\n"));
    assert!(text.contains("'s I-PERSON"));
    let r: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["replay"]["applied"], 1);
    assert_eq!(r["diff"]["categories"]["span_only"], 1);

    let diff_out = dir.path().join("diff.json");
    let table = run(&["diff", "--old", p(&corpus), "--new", p(&fixed), "--out", p(&diff_out), "--table"]);
    assert!(String::from_utf8(table.stdout).unwrap().contains("| Span changed, but not type | 1"));
    let d: Value = serde_json::from_str(&fs::read_to_string(&diff_out).unwrap()).unwrap();
    assert_eq!(d["tokens"]["changed"], 1);
    assert_eq!(d["sentences"]["changed"], 1);
}

#[test]
fn detect_and_pairs() {
    let (dir, corpus) = workspace();
    let target = dir.path().join("test.conll");
    fs::write(&target, "Europe B-GPE\nand O\nMars B-LOC\n\n").unwrap();
    let out = dir.path().join("cands.jsonl");
    run(&["detect", "--train", p(&corpus), "--target", p(&target), "--out", p(&out)]);
    let cands = jsonl(&out);
    let labels: Vec<(&str, &str)> =
        cands.iter().map(|c| (c["surface"].as_str().unwrap(), c["flags"][0]["label"].as_str().unwrap())).collect();
    assert_eq!(labels.len(), 2);
    assert!(labels.contains(&("Europe", "diff-etype")));
    assert!(labels.contains(&("Mars", "unseen-I")));

    let cv = bin().args(["detect", "--train", p(&corpus), "--cv", "10", "--out", p(&out)]).output().unwrap();
    assert_eq!(cv.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&cv.stderr).contains("fewer than 10 folds"));
    run(&["detect", "--train", p(&corpus), "--cv", "2", "--seed", "3", "--out", p(&out)]);
    assert!(!jsonl(&out).is_empty());

    let pairs_out = dir.path().join("pairs.jsonl");
    let tsv = run(&["pairs", "--in", p(&corpus), "--types", "GPE,LOC", "--top", "2", "--candidates-out", p(&pairs_out)]);
    let tsv = String::from_utf8(tsv.stdout).unwrap();
    assert_eq!(tsv.lines().collect::<Vec<_>>(), vec!["Europe\tLOC\t1", "US\tGPE\t1"]);
    assert!(jsonl(&pairs_out).iter().all(|c| c["source"] == "pair_list"));
}

#[test]
fn score_and_compare() {
    let (dir, gold) = workspace();
    let pred = dir.path().join("pred.conll");
    fs::write(&pred, CORPUS.replace("Europe B-LOC", "Europe B-GPE")).unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    run(&["score", "--gold", p(&gold), "--pred", p(&pred), "--out", p(&a)]);
    run(&["score", "--gold", p(&gold), "--pred", p(&gold), "--out", p(&b)]);
    let sa: Value = serde_json::from_str(&fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!((sa["overall"]["tp"].as_u64(), sa["overall"]["fp"].as_u64(), sa["overall"]["fn"].as_u64()), (Some(3), Some(1), Some(1)));
    let table = run(&["score", "compare", "--old", p(&a), "--new", p(&b), "--per-type"]);
    let text = String::from_utf8(table.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("LOC") && l.contains("100.00") && !l.contains("n/a")));
    let raw = run(&["score", "compare", "--old-f1", "85.92", "--new-f1", "87.52"]);
    assert!(String::from_utf8(raw.stdout).unwrap().contains("11.36%"));
    let bad = bin().args(["score", "compare", "--old-f1", "120", "--new-f1", "90"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn tab_separated_input_round_trips_through_apply() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("tab.conll");
    let text = "the\tDT\tB-ORG\nFed\tNNP\tI-ORG\n\n";
    fs::write(&corpus, text).unwrap();
    let props = dir.path().join("p.jsonl");
    let log = dir.path().join("d.jsonl");
    let out = dir.path().join("o.conll");
    run(&["--format", "sep=tab", "rules", "scan", "--in", p(&corpus), "--out", p(&props)]);
    fs::write(&log, "").unwrap();
    run(&["--format", "sep=tab", "rules", "apply", "--in", p(&corpus), "--proposals", p(&props), "--log", p(&log), "--out", p(&out)]);
    assert_eq!(fs::read_to_string(&out).unwrap(), text);
}
