//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::PathBuf;

use ner_audit_core::corpus::{Corpus, EntityType, LabeledToken, Partition, Sentence, Tag};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TYPES: [&str; 5] = ["PERSON", "ORG", "GPE", "LOC", "DATE"];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Valid BIO2 by construction: each token is O, opens a mention, or continues
/// the current one.
pub fn random_corpus(rng: &mut ChaCha8Rng, max_sents: usize, max_toks: usize, vocab: &[&str]) -> Corpus {
    let docs = rng.random_range(1..=3);
    random_corpus_docs(rng, docs, max_sents, max_toks, vocab)
}

pub fn random_corpus_docs(rng: &mut ChaCha8Rng, docs: usize, max_sents: usize, max_toks: usize, vocab: &[&str]) -> Corpus {
    let mut sentences = Vec::new();
    for d in 0..docs {
        for i in 0..rng.random_range(1..=max_sents) {
            let len = rng.random_range(1..=max_toks);
            let mut tokens = Vec::with_capacity(len);
            let mut current: Option<EntityType> = None;
            for _ in 0..len {
                let text = vocab.choose(rng).unwrap().to_string();
                let roll: f64 = rng.random();
                let tag = match &current {
                    Some(t) if roll < 0.3 => Tag::I(t.clone()),
                    _ if roll < 0.65 => Tag::O,
                    _ => Tag::B(EntityType::new(TYPES.choose(rng).unwrap())),
                };
                current = tag.entity_type().cloned();
                tokens.push(LabeledToken::new(text, tag));
            }
            sentences.push(Sentence::new(format!("d{d}"), i, tokens));
        }
    }
    Corpus::new(Partition::Train, sentences)
}

/// Same texts, independently drawn valid tags.
pub fn retag(rng: &mut ChaCha8Rng, c: &Corpus) -> Corpus {
    let mut out = c.clone();
    for s in &mut out.sentences {
        let mut current: Option<EntityType> = None;
        for t in &mut s.tokens {
            let roll: f64 = rng.random();
            t.tag = match &current {
                Some(e) if roll < 0.3 => Tag::I(e.clone()),
                _ if roll < 0.65 => Tag::O,
                _ => Tag::B(EntityType::new(TYPES.choose(rng).unwrap())),
            };
            current = t.tag.entity_type().cloned();
        }
    }
    out
}

/// (start, end, type) runs, read off the tag strings.
pub fn brute_spans(s: &Sentence) -> Vec<(usize, usize, String)> {
    let tags: Vec<String> = s.tokens.iter().map(|t| t.tag.to_string()).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < tags.len() {
        if let Some(ty) = tags[i].strip_prefix("B-") {
            let mut j = i + 1;
            while j < tags.len() && tags[j] == format!("I-{ty}") {
                j += 1;
            }
            out.push((i, j, ty.to_string()));
            i = j;
        } else {
            i += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub p: f64,
    pub r: f64,
    pub f: f64,
}

fn prf(tp: u64, fp: u64, fn_: u64) -> Prf {
    let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 * 100.0 };
    let r = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 * 100.0 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    Prf { tp, fp, fn_, p, r, f }
}

type Key = (String, usize, usize, usize, String);

fn mention_set(c: &Corpus) -> HashSet<Key> {
    c.sentences
        .iter()
        .flat_map(|s| brute_spans(s).into_iter().map(move |(a, b, t)| (s.doc_id.clone(), s.sent_index, a, b, t)))
        .collect()
}

/// Micro and per-type scores from plain mention sets.
pub fn brute_score(gold: &Corpus, pred: &Corpus) -> (Prf, BTreeMap<String, Prf>) {
    let g = mention_set(gold);
    let p = mention_set(pred);
    let types: HashSet<&String> = g.iter().chain(&p).map(|k| &k.4).collect();
    let mut per_type = BTreeMap::new();
    for ty in types {
        let gt: HashSet<&Key> = g.iter().filter(|k| &k.4 == ty).collect();
        let pt: HashSet<&Key> = p.iter().filter(|k| &k.4 == ty).collect();
        let tp = gt.intersection(&pt).count() as u64;
        per_type.insert(ty.clone(), prf(tp, pt.len() as u64 - tp, gt.len() as u64 - tp));
    }
    let tp = g.intersection(&p).count() as u64;
    (prf(tp, p.len() as u64 - tp, g.len() as u64 - tp), per_type)
}

pub fn close(a: f64, b: f64) -> bool {
    let scale = a.abs().max(b.abs()).max(1.0);
    (a - b).abs() <= 1e-9 * scale
}

/// Expected label for one token occurrence, counted straight off the reference
/// sentences. Returns the serde name of the subset.
pub fn brute_label(reference: &[&Sentence], surface: &str, observed: &str) -> Option<&'static str> {
    let mut o = 0u64;
    let mut by_type: HashMap<String, u64> = HashMap::new();
    for s in reference {
        for t in &s.tokens {
            if t.text != surface {
                continue;
            }
            let tag = t.tag.to_string();
            if tag == "O" {
                o += 1;
            } else {
                *by_type.entry(tag[2..].to_string()).or_default() += 1;
            }
        }
    }
    let mention: u64 = by_type.values().sum();
    if o + mention == 0 {
        return Some("unseen-I");
    }
    if o > mention {
        return Some("diff-I");
    }
    let best = by_type.values().copied().max().unwrap_or(0);
    let leaders: Vec<&String> = by_type.iter().filter(|(_, &n)| n == best).map(|(t, _)| t).collect();
    if leaders.len() == 1 && leaders[0] != observed {
        return Some("diff-etype");
    }
    None
}
