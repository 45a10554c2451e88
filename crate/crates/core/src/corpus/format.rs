//! Column-format reading and writing.
//!
//! One token per line, columns separated by runs of whitespace (or a fixed
//! character), a blank line after every sentence and `# <doc_id> [meta]`
//! lines opening each document.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::validate::{repair_sentence, Violation, ViolationKind};
use super::{Corpus, CorpusError, LabeledToken, Sentence, Tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Separator {
    /// Any run of spaces and tabs.
    Whitespace,
    Char(char),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TagColumn {
    Last,
    Index(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Strictness {
    /// Any violation aborts parsing.
    #[default]
    Strict,
    /// BIO violations are rewritten and reported alongside the corpus.
    Repair,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnFormat {
    pub token_col: usize,
    pub tag_col: TagColumn,
    pub separator: Separator,
    pub strictness: Strictness,
    /// Prefix of document boundary lines; `None` disables document boundaries.
    pub doc_marker: Option<String>,
}

impl Default for ColumnFormat {
    fn default() -> Self {
        ColumnFormat {
            token_col: 0,
            tag_col: TagColumn::Last,
            separator: Separator::Whitespace,
            strictness: Strictness::Strict,
            doc_marker: Some("#".to_string()),
        }
    }
}

impl ColumnFormat {
    pub fn repair() -> Self {
        ColumnFormat { strictness: Strictness::Repair, ..Default::default() }
    }

    pub fn with_strictness(mut self, strictness: Strictness) -> Self {
        self.strictness = strictness;
        self
    }

    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        match self.separator {
            Separator::Whitespace => line.split_whitespace().collect(),
            Separator::Char(c) => line.split(c).collect(),
        }
    }

    fn tag_index(&self, columns: usize) -> usize {
        match self.tag_col {
            TagColumn::Last => columns.saturating_sub(1),
            TagColumn::Index(i) => i,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatSpecError(pub String);

impl fmt::Display for FormatSpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid column format: {}", self.0)
    }
}

impl std::error::Error for FormatSpecError {}

/// Parses `token=0,tag=last,sep=whitespace,doc=#` style descriptions.
/// `sep` accepts `whitespace`, `tab`, `space` or a single character; `doc=none`
/// disables document boundaries.
impl FromStr for ColumnFormat {
    type Err = FormatSpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut fmt = ColumnFormat::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part.split_once('=').ok_or_else(|| FormatSpecError(format!("expected key=value, got {part:?}")))?;
            match key {
                "token" => fmt.token_col = value.parse().map_err(|_| FormatSpecError(format!("bad token column {value:?}")))?,
                "tag" => {
                    fmt.tag_col = if value == "last" {
                        TagColumn::Last
                    } else {
                        TagColumn::Index(value.parse().map_err(|_| FormatSpecError(format!("bad tag column {value:?}")))?)
                    }
                }
                "sep" => {
                    fmt.separator = match value {
                        "whitespace" | "ws" => Separator::Whitespace,
                        "tab" => Separator::Char('\t'),
                        "space" => Separator::Char(' '),
                        other => {
                            let mut chars = other.chars();
                            match (chars.next(), chars.next()) {
                                (Some(c), None) => Separator::Char(c),
                                _ => return Err(FormatSpecError(format!("bad separator {other:?}"))),
                            }
                        }
                    }
                }
                "doc" => fmt.doc_marker = if value == "none" { None } else { Some(value.to_string()) },
                other => return Err(FormatSpecError(format!("unknown key {other:?}"))),
            }
        }
        if let TagColumn::Index(i) = fmt.tag_col {
            if i == fmt.token_col {
                return Err(FormatSpecError("token and tag columns coincide".to_string()));
            }
        }
        Ok(fmt)
    }
}

struct Builder<'f> {
    fmt: &'f ColumnFormat,
    corpus: Corpus,
    violations: Vec<Violation>,
    doc_id: String,
    next_index: HashMap<String, usize>,
    current: Vec<LabeledToken>,
}

impl Builder<'_> {
    fn finish_sentence(&mut self) {
        if self.current.is_empty() {
            return;
        }
        let counter = self.next_index.entry(self.doc_id.clone()).or_insert(0);
        let mut sentence = Sentence::new(self.doc_id.clone(), *counter, std::mem::take(&mut self.current));
        *counter += 1;
        let found = repair_sentence(&mut sentence);
        self.violations.extend(found);
        self.corpus.sentences.push(sentence);
    }

    fn malformed(&mut self, message: String) {
        let sent_index = self.next_index.get(&self.doc_id).copied().unwrap_or(0);
        self.violations.push(Violation {
            doc_id: self.doc_id.clone(),
            sent_index,
            token_index: self.current.len(),
            kind: ViolationKind::MalformedTag,
            message,
        });
    }

    fn token_line(&mut self, line: &str, line_no: usize) {
        let columns = self.fmt.split(line);
        let tag_at = self.fmt.tag_index(columns.len());
        let token_col = self.fmt.token_col;
        if columns.len() < 2 || token_col >= columns.len() || tag_at >= columns.len() || tag_at == token_col {
            self.malformed(format!("line {line_no}: expected token and tag columns, got {:?}", line));
            let text = columns.get(token_col).or(columns.first()).copied().unwrap_or("_");
            self.current.push(LabeledToken::new(text, Tag::O));
            return;
        }
        let tag = match columns[tag_at].parse::<Tag>() {
            Ok(tag) => tag,
            Err(e) => {
                self.malformed(format!("line {line_no}: {e}"));
                Tag::O
            }
        };
        if self.corpus.layout_sep.is_none() && self.fmt.separator == Separator::Whitespace {
            self.corpus.layout_sep = first_gap(line).map(str::to_string);
        }
        let extra = columns
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != token_col && *i != tag_at)
            .map(|(_, c)| c.to_string())
            .collect();
        self.current.push(LabeledToken { text: columns[token_col].to_string(), tag, extra });
    }

    /// A marker line inside a sentence is a token if it has a parseable tag column.
    fn is_token_like(&self, line: &str) -> bool {
        let columns = self.fmt.split(line);
        columns.len() >= 2 && columns[self.fmt.tag_index(columns.len())].parse::<Tag>().is_ok()
    }
}

fn first_gap(line: &str) -> Option<&str> {
    let trimmed = line.trim_start();
    let start = trimmed.find([' ', '\t'])?;
    let rest = &trimmed[start..];
    let len = rest.find(|c: char| c != ' ' && c != '\t').unwrap_or(rest.len());
    Some(&rest[..len])
}

/// Reads a corpus. In strict mode any violation aborts with the full list; in
/// repair mode violations are fixed (BIO ones promoted to `B-`, malformed tags
/// set to `O`) and returned next to the corpus.
pub fn parse_corpus<R: BufRead>(input: R, fmt: &ColumnFormat) -> Result<(Corpus, Vec<Violation>), CorpusError> {
    let mut b = Builder {
        fmt,
        corpus: Corpus::default(),
        violations: Vec::new(),
        doc_id: String::new(),
        next_index: HashMap::new(),
        current: Vec::new(),
    };
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim_end();
        if line.trim().is_empty() {
            b.finish_sentence();
            continue;
        }
        if let Some(marker) = fmt.doc_marker.as_deref() {
            if let Some(rest) = line.strip_prefix(marker) {
                if b.current.is_empty() || !b.is_token_like(line) {
                    b.finish_sentence();
                    let rest = rest.trim();
                    let (id, meta) = match rest.split_once(char::is_whitespace) {
                        Some((id, meta)) => (id, meta.trim()),
                        None => (rest, ""),
                    };
                    b.doc_id = id.to_string();
                    if !meta.is_empty() {
                        b.corpus.source_meta.insert(id.to_string(), meta.to_string());
                    }
                    continue;
                }
            }
        }
        b.token_line(line, i + 1);
    }
    b.finish_sentence();
    let Builder { corpus, violations, .. } = b;
    if fmt.strictness == Strictness::Strict && !violations.is_empty() {
        return Err(CorpusError::Invalid(violations));
    }
    Ok((corpus, violations))
}

pub fn parse_str(input: &str, fmt: &ColumnFormat) -> Result<(Corpus, Vec<Violation>), CorpusError> {
    parse_corpus(input.as_bytes(), fmt)
}

/// Writes a corpus in the canonical layout: document line when the document
/// changes, one token per line, a blank line after each sentence.
pub fn serialize_corpus(c: &Corpus, fmt: &ColumnFormat) -> String {
    let sep = match fmt.separator {
        Separator::Whitespace => c.layout_sep.clone().unwrap_or_else(|| " ".to_string()),
        Separator::Char(ch) => ch.to_string(),
    };
    let mut out = String::with_capacity(c.token_count() * 12);
    let mut doc: Option<&str> = None;
    for s in &c.sentences {
        if doc != Some(s.doc_id.as_str()) {
            if let Some(marker) = fmt.doc_marker.as_deref() {
                if !s.doc_id.is_empty() || doc.is_some() {
                    out.push_str(marker);
                    out.push(' ');
                    out.push_str(&s.doc_id);
                    if let Some(meta) = c.source_meta.get(&s.doc_id) {
                        out.push(' ');
                        out.push_str(meta);
                    }
                    out.push('\n');
                }
            }
            doc = Some(&s.doc_id);
        }
        for tok in &s.tokens {
            write_token_line(&mut out, tok, fmt, &sep);
        }
        out.push('\n');
    }
    out
}

fn write_token_line(out: &mut String, tok: &LabeledToken, fmt: &ColumnFormat, sep: &str) {
    let width = tok.extra.len() + 2;
    let tag_at = fmt.tag_index(width);
    let mut extra = tok.extra.iter();
    let tag = tok.tag.to_string();
    for col in 0..width {
        if col > 0 {
            out.push_str(sep);
        }
        if col == fmt.token_col {
            out.push_str(&tok.text);
        } else if col == tag_at {
            out.push_str(&tag);
        } else if let Some(e) = extra.next() {
            out.push_str(e);
        }
    }
    out.push('\n');
}
