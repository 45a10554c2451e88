use std::sync::LazyLock;

use regex::Regex;

use super::{Finding, Rule};
use crate::corpus::{EditOp, Mention};

const DETERMINERS: [&str; 3] = ["the", "a", "an"];
const POSSESSIVE_MARKERS: [&str; 4] = ["'s", "'", "\u{2019}s", "\u{2019}"];

// Po also covers %, &, #, @ and similar signs that belong to PERCENT, ORG or MONEY mentions.
static PUNCTUATION_ONLY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[[\p{P}`´]&&[^%\&#@*/\\‰‱§¶†‡]]+$").expect("static regex"));

/// A token made only of punctuation characters (backticks included, as used for opening quotes).
pub fn is_punctuation_token(text: &str) -> bool {
    PUNCTUATION_ONLY.is_match(text)
}

fn tokens(m: &Mention) -> Vec<&str> {
    m.surface.split(' ').collect()
}

/// Leading `the`/`a`/`an` (any case) on a mention that is not DATE or TIME.
pub fn rule_leading_determiner(m: &Mention) -> Option<Finding> {
    if matches!(m.etype.name(), "DATE" | "TIME") {
        return None;
    }
    let toks = tokens(m);
    let first = toks.first()?.to_lowercase();
    if !DETERMINERS.contains(&first.as_str()) {
        return None;
    }
    if toks.len() == 1 {
        return Some(Finding::Review { offset: 0, note: "mention is only a determiner".to_string() });
    }
    Some(Finding::Propose(EditOp::shrink_left(1)))
}

/// Trailing possessive marker split off as its own token.
///
/// A marker glued to the last token (`McDonald's`) is only surfaced for review,
/// since some names legitimately end in one.
pub fn rule_trailing_possessive(m: &Mention) -> Option<Finding> {
    let toks = tokens(m);
    let last = *toks.last()?;
    if POSSESSIVE_MARKERS.contains(&last) {
        if toks.len() == 1 {
            return Some(Finding::Review { offset: 0, note: "mention is only a possessive marker".to_string() });
        }
        return Some(Finding::Propose(EditOp::shrink_right(1)));
    }
    let embedded = ["'s", "\u{2019}s"].iter().any(|marker| last.len() > marker.len() && last.ends_with(marker));
    if embedded {
        return Some(Finding::Review { offset: toks.len() - 1, note: format!("{last:?} ends in a possessive marker") });
    }
    None
}

/// Punctuation-only tokens at either edge, removed in one proposal.
pub fn rule_edge_punctuation(m: &Mention) -> Option<Finding> {
    let toks = tokens(m);
    let left = toks.iter().take_while(|t| is_punctuation_token(t)).count();
    if left == toks.len() {
        return Some(Finding::Review { offset: 0, note: "mention is only punctuation; consider deleting it".to_string() });
    }
    let right = toks.iter().rev().take_while(|t| is_punctuation_token(t)).count();
    if left == 0 && right == 0 {
        return None;
    }
    Some(Finding::Propose(EditOp::Shrink { left, right }))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LeadingDeterminer;

#[derive(Debug, Clone, Copy, Default)]
pub struct TrailingPossessive;

#[derive(Debug, Clone, Copy, Default)]
pub struct EdgePunctuation;

impl Rule for LeadingDeterminer {
    fn id(&self) -> &str {
        "leading_determiner"
    }

    fn check(&self, mention: &Mention) -> Option<Finding> {
        rule_leading_determiner(mention)
    }
}

impl Rule for TrailingPossessive {
    fn id(&self) -> &str {
        "trailing_possessive"
    }

    fn check(&self, mention: &Mention) -> Option<Finding> {
        rule_trailing_possessive(mention)
    }
}

impl Rule for EdgePunctuation {
    fn id(&self) -> &str {
        "edge_punctuation"
    }

    fn check(&self, mention: &Mention) -> Option<Finding> {
        rule_edge_punctuation(mention)
    }
}
