use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, EntityType, Sentence, Tag};

/// Label frequencies of one surface form in a reference partition.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenProfile {
    pub total: u64,
    pub count_o: u64,
    pub count_by_type: BTreeMap<EntityType, u64>,
}

impl TokenProfile {
    pub fn mention_total(&self) -> u64 {
        self.count_by_type.values().sum()
    }

    /// The single most frequent mention type; `None` on ties or when never inside a mention.
    pub fn plurality_type(&self) -> Option<&EntityType> {
        let mut best: Option<(&EntityType, u64)> = None;
        let mut tied = false;
        for (t, &n) in &self.count_by_type {
            match best {
                Some((_, b)) if n < b => {}
                Some((_, b)) if n == b => tied = true,
                _ => {
                    best = Some((t, n));
                    tied = false;
                }
            }
        }
        match best {
            Some((t, n)) if n > 0 && !tied => Some(t),
            _ => None,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.total == self.count_o + self.mention_total()
    }

    fn add(&mut self, tag: &Tag) {
        self.total += 1;
        match tag.entity_type() {
            None => self.count_o += 1,
            Some(t) => *self.count_by_type.entry(t.clone()).or_insert(0) += 1,
        }
    }
}

/// Surface form → [`TokenProfile`], exact and case-sensitive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Profile {
    entries: HashMap<String, TokenProfile>,
}

impl Profile {
    /// Counts every token of `reference`: `O` tokens toward `count_o`, `B-`/`I-`
    /// tokens toward their type.
    pub fn build(reference: &Corpus) -> Profile {
        Profile::from_sentences(&reference.sentences)
    }

    pub fn from_sentences(sentences: &[Sentence]) -> Profile {
        sentences
            .par_chunks(4096)
            .map(|chunk| {
                let mut p = Profile::default();
                for s in chunk {
                    p.add_sentence(s);
                }
                p
            })
            .reduce(Profile::default, |mut a, b| {
                a.merge(b);
                a
            })
    }

    pub fn add_sentence(&mut self, s: &Sentence) {
        for tok in &s.tokens {
            match self.entries.get_mut(tok.text.as_str()) {
                Some(p) => p.add(&tok.tag),
                None => {
                    let mut p = TokenProfile::default();
                    p.add(&tok.tag);
                    self.entries.insert(tok.text.clone(), p);
                }
            }
        }
    }

    pub fn merge(&mut self, other: Profile) {
        if self.entries.len() < other.entries.len() {
            let mine = std::mem::replace(self, other);
            self.merge(mine);
            return;
        }
        for (surface, p) in other.entries {
            let e = self.entries.entry(surface).or_default();
            e.total += p.total;
            e.count_o += p.count_o;
            for (t, n) in p.count_by_type {
                *e.count_by_type.entry(t).or_insert(0) += n;
            }
        }
    }

    /// Removes counts contributed by `part`, which must be a sub-collection of what
    /// built `self`. Entries that drop to zero disappear.
    pub fn subtract(&mut self, part: &Profile) {
        for (surface, p) in &part.entries {
            let Some(e) = self.entries.get_mut(surface) else { continue };
            e.total = e.total.saturating_sub(p.total);
            e.count_o = e.count_o.saturating_sub(p.count_o);
            for (t, n) in &p.count_by_type {
                if let Some(c) = e.count_by_type.get_mut(t) {
                    *c = c.saturating_sub(*n);
                    if *c == 0 {
                        e.count_by_type.remove(t);
                    }
                }
            }
            if e.total == 0 {
                self.entries.remove(surface);
            }
        }
    }

    pub fn get(&self, surface: &str) -> Option<&TokenProfile> {
        self.entries.get(surface)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &TokenProfile)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn is_consistent(&self) -> bool {
        self.entries.values().all(TokenProfile::is_consistent)
    }

    pub fn insert(&mut self, surface: impl Into<String>, profile: TokenProfile) {
        self.entries.insert(surface.into(), profile);
    }
}
