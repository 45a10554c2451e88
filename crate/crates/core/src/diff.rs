//! Mention-level comparison of two versions of a corpus.
//!
//! Mentions of the old and new version of a sentence are linked when their
//! token footprints overlap; each connected component of that overlap graph is
//! one [`Link`]. Components are classified as deleted, added, one-to-one,
//! split, merged or (for many-to-many components) complex.

use std::collections::BTreeMap;
use std::fmt::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CorpusError, EntityType, Mention, Sentence, Tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Deleted,
    Added,
    OneToOne,
    Split,
    Merged,
    Complex,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub old: Vec<Mention>,
    pub new: Vec<Mention>,
    pub kind: LinkKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionAlignment {
    pub links: Vec<Link>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OneToOneChange {
    Unchanged,
    SpanOnly,
    TypeOnly,
    SpanAndType,
}

/// Compares two overlapping mentions by span and type.
pub fn classify_one_to_one(old: &Mention, new: &Mention) -> OneToOneChange {
    match (old.same_span(new), old.etype == new.etype) {
        (true, true) => OneToOneChange::Unchanged,
        (false, true) => OneToOneChange::SpanOnly,
        (true, false) => OneToOneChange::TypeOnly,
        (false, false) => OneToOneChange::SpanAndType,
    }
}

fn link_kind(old: usize, new: usize) -> LinkKind {
    match (old, new) {
        (_, 0) => LinkKind::Deleted,
        (0, _) => LinkKind::Added,
        (1, 1) => LinkKind::OneToOne,
        (1, _) => LinkKind::Split,
        (_, 1) => LinkKind::Merged,
        _ => LinkKind::Complex,
    }
}

/// Aligns the mentions of two versions of one sentence.
///
/// Both sides are sorted and internally non-overlapping, so a sweep by start
/// position finds the components: an interval starting before the running
/// component end necessarily overlaps the interval that set that end, which
/// comes from the other side.
pub fn align_mentions(old_s: &Sentence, new_s: &Sentence) -> Result<MentionAlignment, CorpusError> {
    if !old_s.same_texts(new_s) {
        return Err(CorpusError::StructureMismatch(format!(
            "token texts differ in sentence {}/{}",
            old_s.doc_id, old_s.sent_index
        )));
    }
    let old = old_s.mentions()?;
    let new = new_s.mentions()?;
    Ok(align(old, new))
}

fn align(old: Vec<Mention>, new: Vec<Mention>) -> MentionAlignment {
    let mut events: Vec<(bool, Mention)> = old.into_iter().map(|m| (false, m)).chain(new.into_iter().map(|m| (true, m))).collect();
    events.sort_by_key(|(is_new, m)| (m.start, *is_new));
    let mut links = Vec::new();
    let mut cur_old: Vec<Mention> = Vec::new();
    let mut cur_new: Vec<Mention> = Vec::new();
    let mut cur_end = 0;
    let flush = |o: &mut Vec<Mention>, n: &mut Vec<Mention>, links: &mut Vec<Link>| {
        if !o.is_empty() || !n.is_empty() {
            let kind = link_kind(o.len(), n.len());
            links.push(Link { old: std::mem::take(o), new: std::mem::take(n), kind });
        }
    };
    for (is_new, m) in events {
        if m.start >= cur_end {
            flush(&mut cur_old, &mut cur_new, &mut links);
        }
        cur_end = if cur_old.is_empty() && cur_new.is_empty() { m.end } else { cur_end.max(m.end) };
        if is_new {
            cur_new.push(m);
        } else {
            cur_old.push(m);
        }
    }
    flush(&mut cur_old, &mut cur_new, &mut links);
    MentionAlignment { links }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub changed: u64,
    pub total: u64,
    pub pct: f64,
}

impl Rate {
    fn new(changed: u64, total: u64) -> Self {
        Rate { changed, total, pct: percent(changed as f64, total as f64).unwrap_or(0.0) }
    }
}

fn percent(part: f64, whole: f64) -> Option<f64> {
    (whole != 0.0).then(|| 100.0 * part / whole)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionCounts {
    pub before: u64,
    pub after: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub deleted: u64,
    pub added: u64,
    pub span_only: u64,
    pub type_only: u64,
    pub span_and_type: u64,
    pub split: u64,
    pub merged: u64,
    pub complex: u64,
}

/// Mention totals behind the link counts, needed to balance the books.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtendedCounts {
    pub unchanged: u64,
    /// Mentions on the new side of split links.
    pub split_new_mentions: u64,
    /// Mentions on the old side of merged links.
    pub merged_old_mentions: u64,
    pub complex_old_mentions: u64,
    pub complex_new_mentions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeDelta {
    #[serde(rename = "type")]
    pub etype: EntityType,
    pub before: u64,
    pub after: u64,
    pub delta: i64,
    /// Relative to `before`; absent when `before` is zero.
    pub pct: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DiffReport {
    pub tokens: Rate,
    pub sentences: Rate,
    pub mentions: MentionCounts,
    pub categories: CategoryCounts,
    pub per_type: Vec<TypeDelta>,
    pub extended: ExtendedCounts,
}

#[derive(Default)]
struct Partial {
    changed_tokens: u64,
    total_tokens: u64,
    changed_sentences: u64,
    total_sentences: u64,
    mentions: MentionCounts,
    categories: CategoryCounts,
    extended: ExtendedCounts,
    before_by_type: BTreeMap<EntityType, u64>,
    after_by_type: BTreeMap<EntityType, u64>,
}

impl Partial {
    fn merge(mut self, o: Partial) -> Partial {
        self.changed_tokens += o.changed_tokens;
        self.total_tokens += o.total_tokens;
        self.changed_sentences += o.changed_sentences;
        self.total_sentences += o.total_sentences;
        self.mentions.before += o.mentions.before;
        self.mentions.after += o.mentions.after;
        let (c, oc) = (&mut self.categories, o.categories);
        c.deleted += oc.deleted;
        c.added += oc.added;
        c.span_only += oc.span_only;
        c.type_only += oc.type_only;
        c.span_and_type += oc.span_and_type;
        c.split += oc.split;
        c.merged += oc.merged;
        c.complex += oc.complex;
        let (e, oe) = (&mut self.extended, o.extended);
        e.unchanged += oe.unchanged;
        e.split_new_mentions += oe.split_new_mentions;
        e.merged_old_mentions += oe.merged_old_mentions;
        e.complex_old_mentions += oe.complex_old_mentions;
        e.complex_new_mentions += oe.complex_new_mentions;
        for (t, n) in o.before_by_type {
            *self.before_by_type.entry(t).or_insert(0) += n;
        }
        for (t, n) in o.after_by_type {
            *self.after_by_type.entry(t).or_insert(0) += n;
        }
        self
    }

    fn sentence(old: &Sentence, new: &Sentence) -> Result<Partial, CorpusError> {
        let alignment = align_mentions(old, new)?;
        let mut p = Partial { total_tokens: old.len() as u64, total_sentences: 1, ..Default::default() };
        p.changed_tokens = changed_tokens(old, new);
        p.changed_sentences = u64::from(p.changed_tokens > 0);
        for link in &alignment.links {
            p.mentions.before += link.old.len() as u64;
            p.mentions.after += link.new.len() as u64;
            for m in &link.old {
                *p.before_by_type.entry(m.etype.clone()).or_insert(0) += 1;
            }
            for m in &link.new {
                *p.after_by_type.entry(m.etype.clone()).or_insert(0) += 1;
            }
            match link.kind {
                LinkKind::Deleted => p.categories.deleted += 1,
                LinkKind::Added => p.categories.added += 1,
                LinkKind::OneToOne => match classify_one_to_one(&link.old[0], &link.new[0]) {
                    OneToOneChange::Unchanged => p.extended.unchanged += 1,
                    OneToOneChange::SpanOnly => p.categories.span_only += 1,
                    OneToOneChange::TypeOnly => p.categories.type_only += 1,
                    OneToOneChange::SpanAndType => p.categories.span_and_type += 1,
                },
                LinkKind::Split => {
                    p.categories.split += 1;
                    p.extended.split_new_mentions += link.new.len() as u64;
                }
                LinkKind::Merged => {
                    p.categories.merged += 1;
                    p.extended.merged_old_mentions += link.old.len() as u64;
                }
                LinkKind::Complex => {
                    p.categories.complex += 1;
                    p.extended.complex_old_mentions += link.old.len() as u64;
                    p.extended.complex_new_mentions += link.new.len() as u64;
                }
            }
        }
        Ok(p)
    }
}

/// Change statistics between two versions of the same corpus.
///
/// Tokens whose entity label (type or O) differs, plus tokens where only a
/// boundary between two otherwise unchanged tokens appeared or vanished.
///
/// Dropping the determiner from `the US` changes one token: `US` turns from
/// I- into B- only because its neighbour left the mention.
fn changed_tokens(old: &Sentence, new: &Sentence) -> u64 {
    let label = |t: &Tag| t.entity_type().cloned();
    let mut changed = 0;
    let mut prev_same = true;
    for (a, b) in old.tokens.iter().zip(&new.tokens) {
        let same_label = label(&a.tag) == label(&b.tag);
        if !same_label || (a.tag != b.tag && prev_same) {
            changed += 1;
        }
        prev_same = same_label;
    }
    changed
}

/// Percentages: changed tokens over all tokens, changed sentences over all
/// sentences, per-type deltas over the old count of that type.
pub fn diff_corpora(old: &Corpus, new: &Corpus) -> Result<DiffReport, CorpusError> {
    old.check_aligned(new)?;
    let total = old
        .sentences
        .par_iter()
        .zip(new.sentences.par_iter())
        .map(|(a, b)| Partial::sentence(a, b))
        .try_reduce(Partial::default, |a, b| Ok(a.merge(b)))?;
    let mut types: Vec<EntityType> = total.before_by_type.keys().chain(total.after_by_type.keys()).cloned().collect();
    types.sort();
    types.dedup();
    let per_type = types
        .into_iter()
        .map(|t| {
            let before = total.before_by_type.get(&t).copied().unwrap_or(0);
            let after = total.after_by_type.get(&t).copied().unwrap_or(0);
            let delta = after as i64 - before as i64;
            TypeDelta { pct: percent(delta as f64, before as f64), etype: t, before, after, delta }
        })
        .collect();
    Ok(DiffReport {
        tokens: Rate::new(total.changed_tokens, total.total_tokens),
        sentences: Rate::new(total.changed_sentences, total.total_sentences),
        mentions: total.mentions,
        categories: total.categories,
        per_type,
        extended: total.extended,
    })
}

impl DiffReport {
    /// after = before + added − deleted + Σsplit(|new|−1) − Σmerged(|old|−1) + Σcomplex(|new|−|old|).
    pub fn conservation_holds(&self) -> bool {
        let c = &self.categories;
        let e = &self.extended;
        let rhs = self.mentions.before as i64 + c.added as i64 - c.deleted as i64
            + (e.split_new_mentions as i64 - c.split as i64)
            - (e.merged_old_mentions as i64 - c.merged as i64)
            + (e.complex_new_mentions as i64 - e.complex_old_mentions as i64);
        rhs == self.mentions.after as i64
    }

    pub fn is_zero(&self) -> bool {
        self.tokens.changed == 0
            && self.sentences.changed == 0
            && self.categories == CategoryCounts::default()
            && self.per_type.iter().all(|t| t.delta == 0)
    }

    /// Mention changes as rows of (label, count), in table order.
    pub fn category_rows(&self) -> Vec<(&'static str, u64)> {
        let c = &self.categories;
        vec![
            ("Deleted mentions", c.deleted),
            ("Added mentions", c.added),
            ("Span changed, but not type", c.span_only),
            ("Type changed, but not span", c.type_only),
            ("Both span and type changed", c.span_and_type),
            ("Split into 2 or more", c.split),
            ("Merged from 2 or more", c.merged),
            ("Many-to-many (complex)", c.complex),
        ]
    }

    /// Two plain-text tables: change statistics, then per-type frequency changes.
    pub fn render_tables(&self) -> String {
        let mut out = String::new();
        let mut rows: Vec<(String, String)> = vec![
            ("Nb changed tokens".into(), format!("{} ({:.2}%)", self.tokens.changed, self.tokens.pct)),
            ("Nb changed sentences".into(), format!("{} ({:.2}%)", self.sentences.changed, self.sentences.pct)),
            ("Nb mentions before".into(), self.mentions.before.to_string()),
            ("Nb mentions after".into(), self.mentions.after.to_string()),
        ];
        rows.extend(self.category_rows().into_iter().map(|(l, n)| (l.to_string(), n.to_string())));
        write_table(&mut out, ("Statistic", "Count"), &rows);
        out.push('\n');
        let rows: Vec<(String, String)> = self
            .per_type
            .iter()
            .map(|t| {
                let pct = match t.pct {
                    Some(p) => format!(" ({}{:.2}%)", if p > 0.0 { "+" } else { "" }, p),
                    None => String::new(),
                };
                let sign = if t.delta > 0 { "+" } else { "" };
                (t.etype.to_string(), format!("{sign}{}{pct}", t.delta))
            })
            .collect();
        write_table(&mut out, ("Entity type", "Change"), &rows);
        out
    }
}

fn write_table(out: &mut String, header: (&str, &str), rows: &[(String, String)]) {
    let w0 = rows.iter().map(|r| r.0.chars().count()).chain([header.0.len()]).max().unwrap_or(0);
    let w1 = rows.iter().map(|r| r.1.chars().count()).chain([header.1.len()]).max().unwrap_or(0);
    let rule = format!("+-{}-+-{}-+\n", "-".repeat(w0), "-".repeat(w1));
    out.push_str(&rule);
    let _ = writeln!(out, "| {:<w0$} | {:<w1$} |", header.0, header.1);
    out.push_str(&rule);
    for (a, b) in rows {
        let _ = writeln!(out, "| {a:<w0$} | {b:<w1$} |");
    }
    out.push_str(&rule);
}
