use std::io::{BufRead, Write};

use anyhow::Result;
use ner_audit_core::rules::{effective_decisions, DecisionLog};
use ner_audit_core::{Corpus, Decision, EditProposal, Verdict};

/// Sentence text with the target mention in brackets.
fn render(corpus: &Corpus, p: &EditProposal) -> String {
    let Some(s) = corpus.find_sentence(&p.target.doc_id, p.target.sent_index) else {
        return p.target.surface.clone();
    };
    let mut out = Vec::with_capacity(s.tokens.len() + 2);
    for (i, t) in s.tokens.iter().enumerate() {
        if i == p.target.start {
            out.push("[".to_string());
        }
        out.push(t.text.clone());
        if i + 1 == p.target.end {
            out.push(format!("]{}", p.target.etype));
        }
    }
    out.join(" ")
}

/// Asks about each undecided proposal; every answer is appended to the log
/// before the next one is shown.
pub fn run<R: BufRead, W: Write>(corpus: &Corpus, proposals: &[EditProposal], log: &DecisionLog, actor: &str, mut input: R, mut out: W) -> Result<()> {
    let existing = log.read()?;
    let decided = effective_decisions(&existing);
    let pending: Vec<&EditProposal> = proposals.iter().filter(|p| !decided.contains_key(p.id.as_str())).collect();
    writeln!(out, "{} pending of {} proposals", pending.len(), proposals.len())?;
    let mut answered = 0;
    let mut line = String::new();
    'outer: for (n, p) in pending.iter().enumerate() {
        writeln!(out, "\n({}/{}) {} {}/{}", n + 1, pending.len(), p.rule_id, p.target.doc_id, p.target.sent_index)?;
        writeln!(out, "  {}", render(corpus, p))?;
        writeln!(out, "  proposed: {}", serde_json::to_string(&p.operation)?)?;
        loop {
            write!(out, "  [a]ccept [r]eject a[m]biguous [s]kip [q]uit > ")?;
            out.flush()?;
            line.clear();
            if input.read_line(&mut line)? == 0 {
                break 'outer;
            }
            let verdict = match line.trim() {
                "a" => Verdict::Accept,
                "r" => Verdict::Reject,
                "m" => Verdict::Ambiguous,
                "s" => continue 'outer,
                "q" => break 'outer,
                _ => continue,
            };
            let timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true);
            log.append(&Decision::new(p.id.clone(), verdict, actor, timestamp))?;
            answered += 1;
            break;
        }
    }
    writeln!(out, "\n{answered} decision(s) recorded in {}", log.path().display())?;
    Ok(())
}
