//! Corpus ingestion: preprocessing, vocabulary construction, frequent-word
//! subsampling and skip-gram (target, context) pair generation.
//!
//! The corpus format is plain text, one sentence per line, whitespace
//! tokenized. Preprocessing lowercases and replaces every digit with `#`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

/// Generic tag substituted for each digit character.
const DIGIT_TAG: char = '#';

/// Lowercases a line, replaces every digit character with `#` and splits
/// it on whitespace. An empty line yields an empty vector.
pub fn preprocess_line(raw: &str) -> Vec<String> {
    raw.split_whitespace().map(preprocess_token).collect()
}

fn preprocess_token(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for c in raw.chars() {
        if c.is_numeric() {
            out.push(DIGIT_TAG);
        } else {
            out.extend(c.to_lowercase());
        }
    }
    out
}

/// A word type retained in the vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordEntry {
    pub word: String,
    pub count: u64,
}

/// Word vocabulary with dense ids assigned in descending count order
/// (ties broken lexicographically). Immutable once built.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: Vec<WordEntry>,
    index: HashMap<String, usize>,
    total_tokens: u64,
}

/// One skip-gram training example.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingPair {
    pub target_id: usize,
    pub context_id: usize,
}

impl Vocabulary {
    /// Builds a vocabulary from raw word counts, keeping words with
    /// count >= `min_count`.
    pub fn from_counts(counts: &HashMap<String, u64>, min_count: u64) -> Result<Vocabulary> {
        if counts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut words: Vec<WordEntry> = counts
            .iter()
            .filter(|(_, &c)| c >= min_count)
            .map(|(w, &c)| WordEntry {
                word: w.clone(),
                count: c,
            })
            .collect();
        if words.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        words.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.word.cmp(&b.word)));
        let index = words
            .iter()
            .enumerate()
            .map(|(i, e)| (e.word.clone(), i))
            .collect();
        let total_tokens = words.iter().map(|e| e.count).sum();
        Ok(Vocabulary {
            words,
            index,
            total_tokens,
        })
    }

    /// Builds a vocabulary by streaming and preprocessing a corpus file.
    pub fn from_corpus(path: &Path, min_count: u64) -> Result<Vocabulary> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut counts: HashMap<String, u64> = HashMap::new();
        for line in reader.lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            for token in preprocess_line(&line) {
                *counts.entry(token).or_insert(0) += 1;
            }
        }
        Vocabulary::from_counts(&counts, min_count)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Number of retained training tokens (sum of kept counts).
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: usize) -> &str {
        &self.words[id].word
    }

    pub fn count(&self, id: usize) -> u64 {
        self.words[id].count
    }

    pub fn entries(&self) -> &[WordEntry] {
        &self.words
    }

    /// Subsampling keep probability per word id for rate `t`.
    pub fn keep_probabilities(&self, t: f64) -> Vec<f64> {
        self.words
            .iter()
            .map(|e| subsample_keep_probability(e.count, self.total_tokens, t))
            .collect()
    }

    /// Writes the `word<TAB>count` dump, descending count.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for entry in &self.words {
            writeln!(out, "{}\t{}", entry.word, entry.count).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    /// Reads a `word<TAB>count` dump back; ids follow line order.
    pub fn load(path: &Path) -> Result<Vocabulary> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut words = Vec::new();
        let mut index = HashMap::new();
        let mut total_tokens = 0u64;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let (word, count) = line.split_once('\t').ok_or_else(|| {
                Error::parse(
                    path,
                    format!("line {}: expected word<TAB>count", lineno + 1),
                )
            })?;
            let count: u64 = count.trim().parse().map_err(|_| {
                Error::parse(path, format!("line {}: bad count `{}`", lineno + 1, count))
            })?;
            index.insert(word.to_string(), words.len());
            words.push(WordEntry {
                word: word.to_string(),
                count,
            });
            total_tokens += count;
        }
        if words.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(Vocabulary {
            words,
            index,
            total_tokens,
        })
    }
}

/// Probability of keeping a token of a word with the given corpus count:
/// min(1, sqrt(t/f) + t/f) with f = count/total.
pub fn subsample_keep_probability(count: u64, total: u64, t: f64) -> f64 {
    let f = count as f64 / total as f64;
    let ratio = t / f;
    (ratio.sqrt() + ratio).min(1.0)
}

/// Emits skip-gram pairs for one sentence of word ids. For each position
/// a window size b is drawn uniformly from [1, window] and pairs
/// (target, context) are emitted for every other position within b.
pub fn generate_pairs<R: Rng>(sentence: &[usize], window: usize, rng: &mut R) -> Vec<TrainingPair> {
    let mut pairs = Vec::new();
    generate_pairs_into(sentence, window, rng, &mut pairs);
    pairs
}

/// Same as [`generate_pairs`] but appends into an existing buffer.
pub fn generate_pairs_into<R: Rng>(
    sentence: &[usize],
    window: usize,
    rng: &mut R,
    pairs: &mut Vec<TrainingPair>,
) {
    for (i, &target_id) in sentence.iter().enumerate() {
        let b = rng.gen_range(1..=window);
        let lo = i.saturating_sub(b);
        let hi = (i + b).min(sentence.len().saturating_sub(1));
        for (j, &context_id) in sentence.iter().enumerate().take(hi + 1).skip(lo) {
            if j != i {
                pairs.push(TrainingPair {
                    target_id,
                    context_id,
                });
            }
        }
    }
}

/// Maps a preprocessed token sequence to word ids, dropping
/// out-of-vocabulary tokens, and subsamples frequent words. One uniform
/// draw is consumed per in-vocabulary token.
pub fn subsampled_ids<R: Rng>(
    tokens: &[String],
    vocab: &Vocabulary,
    keep_probs: &[f64],
    rng: &mut R,
) -> Vec<usize> {
    let mut ids = Vec::with_capacity(tokens.len());
    for token in tokens {
        if let Some(id) = vocab.id(token) {
            if rng.gen::<f64>() < keep_probs[id] {
                ids.push(id);
            }
        }
    }
    ids
}
