//! Shared fixtures for integration tests: a deterministic synthetic
//! corpus with productive morphology, plus rule-derived segmentation
//! lexicons that stand in for external segmenter output.

#![allow(dead_code)]

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use subgram::config::{PipelineConfig, SegmenterKind};
use subgram::corpus::{preprocess_line, Vocabulary};
use subgram::segmentation::{
    train_bpe, MergeTable, SegmentationLexicon, SegmenterBackend, SubwordPipeline,
};

const FUNCTION_WORDS: &[&str] = &[
    "the", "and", "of", "to", "in", "is", "was", "for", "on", "with", "as", "by", "at", "from",
];
const PREFIXES: &[(&str, f64)] = &[("", 0.84), ("un", 0.10), ("re", 0.06)];
const SUFFIXES: &[(&str, f64)] = &[
    ("", 0.40),
    ("s", 0.14),
    ("ed", 0.11),
    ("ing", 0.10),
    ("ly", 0.10),
    ("er", 0.07),
    ("est", 0.04),
    ("ness", 0.04),
];

/// Deterministic pseudo-stems from an onset x nucleus x coda grid.
pub fn stems(n: usize) -> Vec<String> {
    let onsets = [
        "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "br", "dr", "fl", "gr",
        "pr", "st", "tr",
    ];
    let nuclei = ["a", "e", "i", "o", "u", "ai", "ea", "oo"];
    let codas = [
        "b", "d", "k", "l", "m", "n", "p", "r", "t", "sh", "st", "nd",
    ];
    let mut out = Vec::with_capacity(n);
    'outer: for step in 0.. {
        for (i, onset) in onsets.iter().enumerate() {
            if out.len() >= n {
                break 'outer;
            }
            let nucleus = nuclei[(i + step * 3) % nuclei.len()];
            let coda = codas[(i * 5 + step) % codas.len()];
            let stem = format!("{onset}{nucleus}{coda}");
            if !out.contains(&stem) {
                out.push(stem);
            }
        }
    }
    out
}

fn weighted<'a, R: Rng>(rng: &mut R, table: &[(&'a str, f64)]) -> &'a str {
    let mut u: f64 = rng.gen();
    for (item, w) in table {
        if u < *w {
            return item;
        }
        u -= w;
    }
    table.last().expect("non-empty table").0
}

/// Writes exactly `n_tokens` whitespace tokens of synthetic text: Zipfian
/// stems with prefixes/suffixes, function words, occasional capitalized
/// words and digit runs so preprocessing gets exercised.
pub fn write_corpus(path: &Path, n_tokens: usize, seed: u64) {
    let stems = stems(120);
    let zipf: Vec<f64> = (0..stems.len()).map(|i| 1.0 / (i as f64 + 1.5)).collect();
    let zipf_total: f64 = zipf.iter().sum();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let file = File::create(path).expect("create corpus");
    let mut out = BufWriter::new(file);
    let mut line_len = 0usize;
    let target_line = 12usize;
    for i in 0..n_tokens {
        let token = if rng.gen::<f64>() < 0.28 {
            FUNCTION_WORDS[rng.gen_range(0..FUNCTION_WORDS.len())].to_string()
        } else if rng.gen::<f64>() < 0.012 {
            let digits = rng.gen_range(1..=4);
            (0..digits)
                .map(|_| rng.gen_range(0..10).to_string())
                .collect()
        } else {
            let mut u = rng.gen::<f64>() * zipf_total;
            let mut stem_idx = 0;
            for (j, w) in zipf.iter().enumerate() {
                if u < *w {
                    stem_idx = j;
                    break;
                }
                u -= w;
            }
            let prefix = weighted(&mut rng, PREFIXES);
            let suffix = weighted(&mut rng, SUFFIXES);
            let mut word = format!("{prefix}{}{suffix}", stems[stem_idx]);
            if rng.gen::<f64>() < 0.04 {
                word = word[..1].to_uppercase() + &word[1..];
            }
            word
        };
        write!(out, "{token}").expect("write corpus");
        line_len += 1;
        if line_len >= target_line && i + 1 != n_tokens {
            writeln!(out).expect("write corpus");
            line_len = 0;
        } else if i + 1 != n_tokens {
            write!(out, " ").expect("write corpus");
        }
    }
    writeln!(out).expect("write corpus");
}

/// Splits a word into prefix/stem/suffix by the same affix inventory the
/// generator uses; the stand-in for a supervised segmenter.
pub fn rule_segment(word: &str) -> (Vec<String>, Vec<String>) {
    let mut rest = word;
    let mut parts: Vec<String> = Vec::new();
    let mut tags: Vec<String> = Vec::new();
    for prefix in ["un", "re"] {
        if let Some(tail) = rest.strip_prefix(prefix) {
            if tail.len() >= 3 {
                parts.push(prefix.to_string());
                tags.push("prefix".to_string());
                rest = tail;
                break;
            }
        }
    }
    let mut suffix_part: Option<&str> = None;
    for suffix in ["ness", "ing", "est", "ed", "er", "ly", "s"] {
        if let Some(head) = rest.strip_suffix(suffix) {
            if head.len() >= 3 {
                suffix_part = Some(suffix);
                rest = head;
                break;
            }
        }
    }
    parts.push(rest.to_string());
    tags.push("root".to_string());
    if let Some(suffix) = suffix_part {
        parts.push(suffix.to_string());
        tags.push("suffix".to_string());
    }
    (parts, tags)
}

/// Everything the end-to-end tests need for one corpus.
pub struct SmokeEnv {
    pub dir: tempfile::TempDir,
    pub corpus: PathBuf,
    pub vocab: Vocabulary,
    pub merges: MergeTable,
    pub supervised: SegmentationLexicon,
    pub unsupervised: SegmentationLexicon,
}

impl SmokeEnv {
    pub fn prepare(n_tokens: usize, seed: u64, min_count: u64, n_merges: usize) -> SmokeEnv {
        let dir = tempfile::tempdir().expect("tempdir");
        let corpus = dir.path().join("corpus.txt");
        write_corpus(&corpus, n_tokens, seed);
        let vocab = Vocabulary::from_corpus(&corpus, min_count).expect("vocab");

        let counts: HashMap<String, u64> = vocab
            .entries()
            .iter()
            .map(|e| (e.word.clone(), e.count))
            .collect();
        let merges = train_bpe(&counts, n_merges).expect("bpe");

        let supervised = SegmentationLexicon::from_entries(vocab.entries().iter().map(|e| {
            let (parts, tags) = rule_segment(&e.word);
            (e.word.clone(), parts, Some(tags))
        }))
        .expect("supervised lexicon");
        let unsupervised = SegmentationLexicon::from_entries(vocab.entries().iter().map(|e| {
            let (parts, _) = rule_segment(&e.word);
            (e.word.clone(), parts, None)
        }))
        .expect("unsupervised lexicon");

        SmokeEnv {
            dir,
            corpus,
            vocab,
            merges,
            supervised,
            unsupervised,
        }
    }

    pub fn backend(&self, kind: SegmenterKind, config: &PipelineConfig) -> SegmenterBackend {
        match kind {
            SegmenterKind::ExternalSupervised => SegmenterBackend::Lexicon(self.supervised.clone()),
            SegmenterKind::ExternalUnsupervised => {
                SegmenterBackend::Lexicon(self.unsupervised.clone())
            }
            SegmenterKind::Bpe => SegmenterBackend::Bpe(self.merges.clone()),
            SegmenterKind::CharNgram => SegmenterBackend::CharNgram {
                n_min: config.ngram_min,
                n_max: config.ngram_max,
            },
            SegmenterKind::WholeWord => SegmenterBackend::WholeWord,
        }
    }

    pub fn pipeline(&self, config: PipelineConfig) -> SubwordPipeline {
        let backend = self.backend(config.segmenter, &config);
        SubwordPipeline::build(config, backend, &self.vocab).expect("pipeline")
    }
}

/// Shrinks a configuration to integration-test scale.
pub fn small_dims(mut config: PipelineConfig) -> PipelineConfig {
    config.dim = 24;
    config.attention_hidden = 8;
    config.heads = 2;
    config.position_cap = 12;
    config
}

/// Sanity check that the generator emits what the tests assume.
#[test]
fn generator_is_deterministic_and_sized() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    write_corpus(&a, 5000, 9);
    write_corpus(&b, 5000, 9);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let text = std::fs::read_to_string(&a).unwrap();
    let tokens: usize = text.lines().map(|l| preprocess_line(l).len()).sum();
    assert_eq!(tokens, 5000);
}
