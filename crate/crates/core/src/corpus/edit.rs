use serde::{Deserialize, Serialize};

use super::{mention_spans, Corpus, CorpusError, EntityType, Mention, Sentence, Tag};

/// A change to one mention. Only tags change; token texts never do.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditOp {
    /// Drop `left` tokens from the start and `right` tokens from the end.
    Shrink { left: usize, right: usize },
    /// Extend over `left`/`right` neighbouring tokens, which must be outside any mention.
    Grow { left: usize, right: usize },
    Retype { etype: EntityType },
    Delete,
    /// Replace the mention by `[start, end)` of type `etype`. Tokens outside the
    /// old span must be outside any mention.
    Reshape { start: usize, end: usize, etype: EntityType },
}

impl EditOp {
    pub fn shrink_left(n: usize) -> Self {
        EditOp::Shrink { left: n, right: 0 }
    }

    pub fn shrink_right(n: usize) -> Self {
        EditOp::Shrink { left: 0, right: n }
    }

    pub fn retype(etype: impl Into<EntityType>) -> Self {
        EditOp::Retype { etype: etype.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edit {
    pub target: Mention,
    pub operation: EditOp,
}

/// Span and type the target turns into, or `None` for a deletion.
pub(crate) fn resulting_span(target: &Mention, op: &EditOp, sentence_len: usize) -> Result<Option<(usize, usize, EntityType)>, CorpusError> {
    let (start, end, etype) = match op {
        EditOp::Delete => return Ok(None),
        EditOp::Shrink { left, right } => {
            if left + right >= target.len() {
                return Err(CorpusError::EmptySpan);
            }
            (target.start + left, target.end - right, target.etype.clone())
        }
        EditOp::Grow { left, right } => {
            let start = target.start.checked_sub(*left).ok_or(CorpusError::SpanOutOfBounds {
                start: 0,
                end: target.end + right,
                len: sentence_len,
            })?;
            (start, target.end + right, target.etype.clone())
        }
        EditOp::Retype { etype } => (target.start, target.end, etype.clone()),
        EditOp::Reshape { start, end, etype } => {
            if start >= end {
                return Err(CorpusError::EmptySpan);
            }
            (*start, *end, etype.clone())
        }
    };
    if end > sentence_len {
        return Err(CorpusError::SpanOutOfBounds { start, end, len: sentence_len });
    }
    Ok(Some((start, end, etype)))
}

fn target_present(s: &Sentence, target: &Mention) -> bool {
    let Some(first) = s.tokens.get(target.start) else { return false };
    if target.end > s.tokens.len() || target.start >= target.end {
        return false;
    }
    if first.tag != Tag::B(target.etype.clone()) {
        return false;
    }
    let continues = |t: &Tag| matches!(t, Tag::I(x) if *x == target.etype);
    s.tokens[target.start + 1..target.end].iter().all(|t| continues(&t.tag))
        && s.tokens.get(target.end).is_none_or(|t| !continues(&t.tag))
        && super::join_surface(&s.tokens[target.start..target.end]) == target.surface
}

/// Applies an edit to one sentence in place, leaving it untouched on error.
pub(crate) fn apply_edit_in_place(s: &mut Sentence, edit: &Edit) -> Result<(), CorpusError> {
    let t = &edit.target;
    if mention_spans(&s.tokens).is_err() || !target_present(s, t) {
        return Err(CorpusError::StaleTarget {
            doc_id: t.doc_id.clone(),
            sent_index: t.sent_index,
            start: t.start,
            end: t.end,
            etype: t.etype.clone(),
        });
    }
    let result = resulting_span(t, &edit.operation, s.tokens.len())?;
    if let Some((start, end, _)) = &result {
        let outside_old = (*start..*end).filter(|i| *i < t.start || *i >= t.end);
        for i in outside_old {
            if !s.tokens[i].tag.is_outside() {
                return Err(CorpusError::SpanConflict { start: *start, end: *end });
            }
        }
    }
    for tok in &mut s.tokens[t.start..t.end] {
        tok.tag = Tag::O;
    }
    if let Some((start, end, etype)) = result {
        s.tokens[start].tag = Tag::B(etype.clone());
        for tok in &mut s.tokens[start + 1..end] {
            tok.tag = Tag::I(etype.clone());
        }
    }
    Ok(())
}

/// Returns a copy of `c` with the edit applied.
///
/// The target must still be present with exactly the recorded span, type and
/// surface; otherwise the edit is rejected as stale.
pub fn apply_edit(c: &Corpus, edit: &Edit) -> Result<Corpus, CorpusError> {
    let t = &edit.target;
    let pos = c
        .sentences
        .iter()
        .position(|s| s.doc_id == t.doc_id && s.sent_index == t.sent_index)
        .ok_or_else(|| CorpusError::UnknownSentence { doc_id: t.doc_id.clone(), sent_index: t.sent_index })?;
    let mut sentence = c.sentences[pos].clone();
    apply_edit_in_place(&mut sentence, edit)?;
    let mut out = c.clone();
    out.sentences[pos] = sentence;
    Ok(out)
}
