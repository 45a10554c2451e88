//! Seeded synthetic corpora.
//!
//! Surfaces are drawn from a skewed vocabulary so token profiles contain
//! repeats, and a configurable share of mentions carries a leading determiner,
//! a split-off possessive or quote tokens at the edges so every built-in rule
//! fires. Generation is fully determined by the seed.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, EntityType, LabeledToken, Partition, Sentence, Tag};

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub docs: usize,
    pub sentences_per_doc: (usize, usize),
    /// Approximate token range per sentence, before mentions are inserted.
    pub tokens_per_sentence: (usize, usize),
    /// Chance that a token position starts a mention.
    pub mention_rate: f64,
    pub types: Vec<EntityType>,
    /// Distinct filler words and distinct entity names.
    pub vocab: usize,
    pub names: usize,
    /// Chance of tagging a name with a type other than its usual one, or leaving it O.
    pub label_noise: f64,
    /// Chance of each guideline violation (determiner, possessive, quotes) per mention.
    pub violation_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            docs: 20,
            sentences_per_doc: (3, 12),
            tokens_per_sentence: (4, 20),
            mention_rate: 0.12,
            types: ["PERSON", "ORG", "GPE", "LOC", "NORP", "DATE", "MONEY"].iter().map(|t| EntityType::new(t)).collect(),
            vocab: 400,
            names: 150,
            label_noise: 0.05,
            violation_rate: 0.1,
        }
    }
}

impl SynthConfig {
    pub fn small() -> Self {
        SynthConfig { docs: 4, sentences_per_doc: (1, 4), tokens_per_sentence: (1, 10), vocab: 12, names: 8, ..Default::default() }
    }

    /// Enough documents for roughly `tokens` tokens.
    pub fn with_tokens(tokens: usize) -> Self {
        let base = SynthConfig::default();
        let per_doc = (base.sentences_per_doc.0 + base.sentences_per_doc.1) as f64 / 2.0
            * ((base.tokens_per_sentence.0 + base.tokens_per_sentence.1) as f64 / 2.0 + 1.0);
        SynthConfig { docs: (tokens as f64 / per_doc).ceil().max(1.0) as usize, vocab: 5000, names: 2000, ..base }
    }
}

fn skewed(rng: &mut ChaCha8Rng, n: usize) -> usize {
    // Squaring a uniform draw favours low indices.
    let u: f64 = rng.random();
    ((u * u) * n as f64) as usize % n.max(1)
}

fn push_mention(tokens: &mut Vec<LabeledToken>, words: &[String], etype: &EntityType) {
    for (i, w) in words.iter().enumerate() {
        let tag = if i == 0 { Tag::B(etype.clone()) } else { Tag::I(etype.clone()) };
        tokens.push(LabeledToken::new(w.clone(), tag));
    }
}

/// Generates a corpus in the Train partition with documents `doc0000`, `doc0001`, ...
pub fn generate(cfg: &SynthConfig, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sentences = Vec::new();
    for d in 0..cfg.docs {
        let doc_id = format!("doc{d:04}");
        let n_sent = rng.random_range(cfg.sentences_per_doc.0..=cfg.sentences_per_doc.1);
        for s in 0..n_sent {
            let len = rng.random_range(cfg.tokens_per_sentence.0..=cfg.tokens_per_sentence.1);
            let mut tokens = Vec::with_capacity(len + 4);
            while tokens.len() < len {
                if cfg.types.is_empty() || !rng.random_bool(cfg.mention_rate) {
                    tokens.push(LabeledToken::new(format!("w{}", skewed(&mut rng, cfg.vocab)), Tag::O));
                    continue;
                }
                let name = skewed(&mut rng, cfg.names);
                let mut etype = &cfg.types[name % cfg.types.len()];
                let mut words: Vec<String> = (0..1 + name % 3).map(|k| format!("N{name}x{k}")).collect();
                if rng.random_bool(cfg.label_noise) {
                    if rng.random_bool(0.5) {
                        for w in words {
                            tokens.push(LabeledToken::new(w, Tag::O));
                        }
                        continue;
                    }
                    etype = cfg.types.choose(&mut rng).expect("non-empty");
                }
                if rng.random_bool(cfg.violation_rate) {
                    match rng.random_range(0..3) {
                        0 => words.insert(0, ["the", "The", "a", "an"].choose(&mut rng).expect("non-empty").to_string()),
                        1 => words.push(["'s", "'"].choose(&mut rng).expect("non-empty").to_string()),
                        _ => {
                            words.insert(0, "``".to_string());
                            words.push("''".to_string());
                        }
                    }
                }
                push_mention(&mut tokens, &words, etype);
            }
            if rng.random_bool(0.8) {
                tokens.push(LabeledToken::new(".", Tag::O));
            }
            sentences.push(Sentence::new(doc_id.clone(), s, tokens));
        }
    }
    Corpus::new(Partition::Train, sentences)
}

/// Random span operations that keep token texts and BIO validity.
///
/// Each sentence is changed with probability `rate`; a changed sentence gets one
/// to three operations among delete, add, shrink, grow, retype, split and merge.
pub fn perturb(c: &Corpus, rate: f64, types: &[EntityType], seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = c.clone();
    for s in &mut out.sentences {
        if s.tokens.is_empty() || !rng.random_bool(rate) {
            continue;
        }
        let Ok(mentions) = s.mentions() else { continue };
        let mut spans: Vec<(usize, usize, EntityType)> = mentions.into_iter().map(|m| (m.start, m.end, m.etype)).collect();
        for _ in 0..rng.random_range(1..=3) {
            mutate_spans(&mut spans, s.tokens.len(), types, &mut rng);
        }
        write_spans(s, &spans);
    }
    out
}

fn mutate_spans(spans: &mut Vec<(usize, usize, EntityType)>, len: usize, types: &[EntityType], rng: &mut ChaCha8Rng) {
    let pick_type = |rng: &mut ChaCha8Rng| types.choose(rng).cloned().unwrap_or_else(|| EntityType::new("MISC"));
    let op = rng.random_range(0..7);
    if spans.is_empty() || op == 1 {
        // Add a mention over free tokens.
        let start = rng.random_range(0..len);
        let mut end = start;
        let limit = rng.random_range(start + 1..=len.min(start + 3));
        while end < limit && !spans.iter().any(|&(a, b, _)| a <= end && end < b) {
            end += 1;
        }
        if end > start {
            spans.push((start, end, pick_type(rng)));
            spans.sort_by_key(|s| s.0);
        }
        return;
    }
    let i = rng.random_range(0..spans.len());
    let (a, b) = (spans[i].0, spans[i].1);
    match op {
        0 => {
            spans.remove(i);
        }
        2 if b - a > 1 => {
            if rng.random_bool(0.5) {
                spans[i].0 += 1;
            } else {
                spans[i].1 -= 1;
            }
        }
        3 => {
            let prev_end = if i > 0 { spans[i - 1].1 } else { 0 };
            let next_start = spans.get(i + 1).map_or(len, |s| s.0);
            if rng.random_bool(0.5) && a > prev_end {
                spans[i].0 -= 1;
            } else if b < next_start {
                spans[i].1 += 1;
            }
        }
        4 => spans[i].2 = pick_type(rng),
        5 if b - a > 1 => {
            let cut = rng.random_range(a + 1..b);
            let etype = spans[i].2.clone();
            spans[i].1 = cut;
            spans.insert(i + 1, (cut, b, if rng.random_bool(0.5) { etype } else { pick_type(rng) }));
        }
        6 if i + 1 < spans.len() => {
            let next_end = spans[i + 1].1;
            spans.remove(i + 1);
            spans[i].1 = next_end;
        }
        _ => {}
    }
}

fn write_spans(s: &mut Sentence, spans: &[(usize, usize, EntityType)]) {
    for t in &mut s.tokens {
        t.tag = Tag::O;
    }
    for (a, b, etype) in spans {
        s.tokens[*a].tag = Tag::B(etype.clone());
        for t in &mut s.tokens[a + 1..*b] {
            t.tag = Tag::I(etype.clone());
        }
    }
}
