//! Segmentation backends and assembly of the final per-word subword
//! sequences under a pipeline configuration: optional word-token
//! insertion, `subword:tag` keying, and position/tag id assignment.

pub mod bpe;
pub mod lexicon;
pub mod ngram;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::config::{PipelineConfig, SegmenterKind, TagMode};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

pub use bpe::{apply_bpe, train_bpe, MergeTable, WORD_END};
pub use lexicon::{SegmentationLexicon, FALLBACK_TAG, WORD_TOKEN_TAG};
pub use ngram::char_ngrams;

/// Raw output of a segmentation backend before assembly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSegmentation {
    pub subwords: Vec<String>,
    pub tags: Option<Vec<String>>,
}

/// A concrete segmentation function.
#[derive(Debug, Clone)]
pub enum SegmenterBackend {
    WholeWord,
    Bpe(MergeTable),
    Lexicon(SegmentationLexicon),
    CharNgram { n_min: usize, n_max: usize },
}

impl SegmenterBackend {
    pub fn segment(&self, word: &str) -> RawSegmentation {
        match self {
            SegmenterBackend::WholeWord => RawSegmentation {
                subwords: vec![word.to_string()],
                tags: None,
            },
            SegmenterBackend::Bpe(table) => RawSegmentation {
                subwords: apply_bpe(word, table),
                tags: None,
            },
            SegmenterBackend::Lexicon(lexicon) => {
                let (subwords, tags) = lexicon.segment(word);
                RawSegmentation { subwords, tags }
            }
            SegmenterBackend::CharNgram { n_min, n_max } => RawSegmentation {
                subwords: char_ngrams(word, *n_min, *n_max),
                tags: None,
            },
        }
    }

    /// Checks the backend against the configured segmenter kind.
    pub fn matches_kind(&self, kind: SegmenterKind) -> bool {
        match (self, kind) {
            (SegmenterBackend::WholeWord, SegmenterKind::WholeWord) => true,
            (SegmenterBackend::Bpe(_), SegmenterKind::Bpe) => true,
            (SegmenterBackend::CharNgram { .. }, SegmenterKind::CharNgram) => true,
            (SegmenterBackend::Lexicon(lex), SegmenterKind::ExternalSupervised) => lex.is_tagged(),
            (SegmenterBackend::Lexicon(_), SegmenterKind::ExternalUnsupervised) => true,
            _ => false,
        }
    }
}

/// One word's assembled sequence of subword unit ids, with position ids
/// (absolute or tag-derived) and optional tag ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubwordSequence {
    pub unit_ids: Vec<usize>,
    pub tag_ids: Option<Vec<usize>>,
    pub position_ids: Vec<usize>,
    pub includes_word_token: bool,
}

impl SubwordSequence {
    pub fn len(&self) -> usize {
        self.unit_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unit_ids.is_empty()
    }
}

/// Dense string-keyed id table for subword units (`subword` or
/// `subword:tag` keys).
#[derive(Debug, Clone, Default)]
pub struct SubwordVocab {
    index: HashMap<String, usize>,
    keys: Vec<String>,
}

impl SubwordVocab {
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn key(&self, id: usize) -> &str {
        &self.keys[id]
    }

    fn intern(&mut self, key: &str) -> usize {
        if let Some(&id) = self.index.get(key) {
            return id;
        }
        let id = self.keys.len();
        self.keys.push(key.to_string());
        self.index.insert(key.to_string(), id);
        id
    }

    /// `key<TAB>id` per line, in id order.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        for (id, key) in self.keys.iter().enumerate() {
            writeln!(out, "{key}\t{id}").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<SubwordVocab> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let reader = BufReader::new(file);
        let mut vocab = SubwordVocab::default();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.is_empty() {
                continue;
            }
            let (key, id) = line.split_once('\t').ok_or_else(|| {
                Error::parse(path, format!("line {}: expected key<TAB>id", lineno + 1))
            })?;
            let id: usize = id
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, format!("line {}: bad id `{id}`", lineno + 1)))?;
            if id != vocab.keys.len() {
                return Err(Error::parse(
                    path,
                    format!("line {}: ids must be dense and in order", lineno + 1),
                ));
            }
            vocab.intern(key);
        }
        Ok(vocab)
    }
}

/// Small id table for morphotactic tags; doubles as the position id
/// space for supervised segmentation.
#[derive(Debug, Clone, Default)]
pub struct TagVocab {
    index: HashMap<String, usize>,
    tags: Vec<String>,
}

impl TagVocab {
    pub fn from_inventory(tags: &[String]) -> TagVocab {
        let mut vocab = TagVocab::default();
        for tag in tags {
            if !vocab.index.contains_key(tag) {
                vocab.index.insert(tag.clone(), vocab.tags.len());
                vocab.tags.push(tag.clone());
            }
        }
        vocab
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn get(&self, tag: &str) -> Option<usize> {
        self.index.get(tag).copied()
    }

    pub fn tag(&self, id: usize) -> &str {
        &self.tags[id]
    }
}

/// Key/tag/position layout of a word's units before id resolution.
#[derive(Debug, Clone)]
struct UnitLayout {
    keys: Vec<String>,
    tags: Option<Vec<String>>,
    /// Absolute positions clamped to the position cap.
    abs_positions: Vec<usize>,
    includes_word_token: bool,
}

fn layout_units(word: &str, raw: &RawSegmentation, config: &PipelineConfig) -> Result<UnitLayout> {
    // A segmentation that produced nothing (e.g. a word shorter than the
    // smallest n-gram) falls back to the whole word as one unit.
    let mut subwords = raw.subwords.clone();
    let mut tags = raw.tags.clone();
    if subwords.is_empty() {
        subwords = vec![word.to_string()];
        tags = raw.tags.as_ref().map(|_| vec![FALLBACK_TAG.to_string()]);
    }
    if config.uses_tags() && tags.is_none() {
        return Err(Error::MissingTags);
    }

    let raw_len = subwords.len();
    if config.word_token && raw_len > 1 {
        subwords.push(word.to_string());
        if let Some(tags) = tags.as_mut() {
            tags.push(WORD_TOKEN_TAG.to_string());
        }
    }

    let keys: Vec<String> = match config.tag_mode {
        TagMode::SubwordTag => {
            let tags = tags.as_ref().expect("checked above");
            subwords
                .iter()
                .zip(tags)
                .map(|(s, t)| format!("{s}:{t}"))
                .collect()
        }
        TagMode::Off => {
            if config.segmenter == SegmenterKind::CharNgram {
                match config.ngram_buckets {
                    // The word token (last unit, when present) keeps its
                    // surface key; only n-grams are hashed.
                    Some(buckets) => {
                        let word_token_at =
                            (config.word_token && raw_len > 1).then(|| subwords.len() - 1);
                        subwords
                            .iter()
                            .enumerate()
                            .map(|(i, s)| {
                                if Some(i) == word_token_at {
                                    s.clone()
                                } else {
                                    ngram::bucket_key(s, buckets)
                                }
                            })
                            .collect()
                    }
                    None => subwords,
                }
            } else {
                subwords
            }
        }
    };

    let cap = config.position_cap.max(1);
    let abs_positions = (0..keys.len()).map(|i| i.min(cap - 1)).collect();
    Ok(UnitLayout {
        keys,
        tags,
        abs_positions,
        includes_word_token: config.word_token && raw_len > 1,
    })
}

fn position_ids(
    layout: &UnitLayout,
    config: &PipelineConfig,
    tag_vocab: Option<&TagVocab>,
) -> Result<Vec<usize>> {
    if !config.uses_positions() {
        return Ok(layout.abs_positions.clone());
    }
    // Supervised segmentation encodes tags as positions; the other
    // backends use clamped absolute indices.
    if config.segmenter == SegmenterKind::ExternalSupervised {
        let tags = layout.tags.as_ref().ok_or(Error::MissingTags)?;
        let vocab = tag_vocab.ok_or(Error::MissingTags)?;
        tags.iter()
            .map(|t| {
                vocab.get(t).ok_or_else(|| {
                    Error::InvalidConfig(format!("tag `{t}` missing from tag vocabulary"))
                })
            })
            .collect()
    } else {
        Ok(layout.abs_positions.clone())
    }
}

/// Assembles one word's `SubwordSequence` against a frozen subword
/// vocabulary; units whose keys are unknown are dropped (OOV inference).
pub fn assemble_sequence(
    word: &str,
    raw: &RawSegmentation,
    config: &PipelineConfig,
    subwords: &SubwordVocab,
    tag_vocab: Option<&TagVocab>,
) -> Result<SubwordSequence> {
    let layout = layout_units(word, raw, config)?;
    let positions = position_ids(&layout, config, tag_vocab)?;
    let track_tags = layout.tags.is_some() && tag_vocab.is_some();
    let mut sequence = SubwordSequence {
        unit_ids: Vec::with_capacity(layout.keys.len()),
        tag_ids: track_tags.then(Vec::new),
        position_ids: Vec::with_capacity(layout.keys.len()),
        includes_word_token: false,
    };
    let word_token_at = layout.includes_word_token.then(|| layout.keys.len() - 1);
    for (i, key) in layout.keys.iter().enumerate() {
        let Some(id) = subwords.get(key) else {
            continue;
        };
        let tag_id = if track_tags {
            let tag = &layout.tags.as_ref().expect("tracked")[i];
            match tag_vocab.expect("tracked").get(tag) {
                Some(tid) => Some(tid),
                None => continue, // unit with an unknown tag is dropped
            }
        } else {
            None
        };
        sequence.unit_ids.push(id);
        sequence.position_ids.push(positions[i]);
        if let (Some(tag_ids), Some(tid)) = (sequence.tag_ids.as_mut(), tag_id) {
            tag_ids.push(tid);
        }
        if Some(i) == word_token_at {
            sequence.includes_word_token = true;
        }
    }
    Ok(sequence)
}

/// A full segmentation pipeline: backend, configuration, and the closed
/// subword/tag vocabularies built over a training word vocabulary.
#[derive(Debug, Clone)]
pub struct SubwordPipeline {
    pub config: PipelineConfig,
    pub backend: SegmenterBackend,
    pub subwords: SubwordVocab,
    pub tags: Option<TagVocab>,
}

impl SubwordPipeline {
    /// Builds the closed subword vocabulary by segmenting every training
    /// word in id order.
    pub fn build(
        config: PipelineConfig,
        backend: SegmenterBackend,
        vocab: &Vocabulary,
    ) -> Result<SubwordPipeline> {
        config.validate()?;
        if !backend.matches_kind(config.segmenter) {
            return Err(Error::InvalidConfig(format!(
                "segmentation backend does not provide `{}`",
                config.segmenter.label()
            )));
        }
        let tags = match &backend {
            SegmenterBackend::Lexicon(lex) if lex.is_tagged() => {
                Some(TagVocab::from_inventory(&lex.tag_inventory()))
            }
            _ => None,
        };
        if config.segmenter == SegmenterKind::ExternalSupervised {
            let n_tags = tags.as_ref().map_or(0, TagVocab::len);
            if config.uses_positions() && n_tags > config.position_cap {
                return Err(Error::InvalidConfig(format!(
                    "{n_tags} tags exceed the position cap {}",
                    config.position_cap
                )));
            }
        }

        let mut subwords = SubwordVocab::default();
        for entry in vocab.entries() {
            let raw = backend.segment(&entry.word);
            let layout = layout_units(&entry.word, &raw, &config)?;
            for key in &layout.keys {
                subwords.intern(key);
            }
        }
        Ok(SubwordPipeline {
            config,
            backend,
            subwords,
            tags,
        })
    }

    /// Restores a pipeline from a previously saved subword vocabulary.
    pub fn with_vocab(
        config: PipelineConfig,
        backend: SegmenterBackend,
        subwords: SubwordVocab,
    ) -> Result<SubwordPipeline> {
        config.validate()?;
        if !backend.matches_kind(config.segmenter) {
            return Err(Error::InvalidConfig(format!(
                "segmentation backend does not provide `{}`",
                config.segmenter.label()
            )));
        }
        let tags = match &backend {
            SegmenterBackend::Lexicon(lex) if lex.is_tagged() => {
                Some(TagVocab::from_inventory(&lex.tag_inventory()))
            }
            _ => None,
        };
        Ok(SubwordPipeline {
            config,
            backend,
            subwords,
            tags,
        })
    }

    /// Sequence for any word against the closed vocabulary. Unknown units
    /// are dropped; a fully unknown word yields an empty sequence.
    pub fn sequence(&self, word: &str) -> Result<SubwordSequence> {
        let raw = self.backend.segment(word);
        assemble_sequence(word, &raw, &self.config, &self.subwords, self.tags.as_ref())
    }

    /// Precomputed sequences for every training word, indexed by word id.
    pub fn training_sequences(&self, vocab: &Vocabulary) -> Result<Vec<SubwordSequence>> {
        vocab
            .entries()
            .iter()
            .map(|e| self.sequence(&e.word))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Composition, PositionMode};
    use proptest::prelude::*;
    use std::collections::HashMap as StdHashMap;

    fn supervised_lexicon() -> SegmentationLexicon {
        SegmentationLexicon::from_entries([
            (
                "dishonestly".to_string(),
                vec!["dis".into(), "honest".into(), "ly".into()],
                Some(vec!["prefix".into(), "root".into(), "suffix".into()]),
            ),
            (
                "honest".to_string(),
                vec!["honest".into()],
                Some(vec!["root".into()]),
            ),
        ])
        .unwrap()
    }

    fn vocab_of(words: &[&str]) -> Vocabulary {
        let counts: StdHashMap<String, u64> = words.iter().map(|w| (w.to_string(), 5u64)).collect();
        Vocabulary::from_counts(&counts, 1).unwrap()
    }

    fn config(segmenter: SegmenterKind) -> PipelineConfig {
        PipelineConfig {
            segmenter,
            dim: 4,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn supervised_word_token_gets_word_tag() {
        let mut cfg = config(SegmenterKind::ExternalSupervised);
        cfg.word_token = true;
        let backend = SegmenterBackend::Lexicon(supervised_lexicon());
        let vocab = vocab_of(&["dishonestly", "honest"]);
        let pipeline = SubwordPipeline::build(cfg, backend, &vocab).unwrap();
        let seq = pipeline.sequence("dishonestly").unwrap();
        assert_eq!(seq.len(), 4);
        assert!(seq.includes_word_token);
        let keys: Vec<&str> = seq
            .unit_ids
            .iter()
            .map(|&id| pipeline.subwords.key(id))
            .collect();
        assert_eq!(keys, vec!["dis", "honest", "ly", "dishonestly"]);
        let tag_vocab = pipeline.tags.as_ref().unwrap();
        let tags: Vec<&str> = seq
            .tag_ids
            .as_ref()
            .unwrap()
            .iter()
            .map(|&id| tag_vocab.tag(id))
            .collect();
        assert_eq!(tags, vec!["prefix", "root", "suffix", "word"]);
    }

    #[test]
    fn single_unit_blocks_word_token() {
        let mut cfg = config(SegmenterKind::Bpe);
        cfg.word_token = true;
        let backend = SegmenterBackend::Bpe(MergeTable::default());
        let vocab = vocab_of(&["a", "ab"]);
        let pipeline = SubwordPipeline::build(cfg, backend, &vocab).unwrap();
        let seq = pipeline.sequence("a").unwrap();
        assert_eq!(seq.len(), 1);
        assert!(!seq.includes_word_token);
    }

    #[test]
    fn unsupervised_word_token_positions_are_absolute() {
        let lex = SegmentationLexicon::from_entries([(
            "dishonestly".to_string(),
            vec!["dishonest".into(), "ly".into()],
            None,
        )])
        .unwrap();
        let mut cfg = config(SegmenterKind::ExternalUnsupervised);
        cfg.word_token = true;
        cfg.position_mode = PositionMode::Additive;
        let vocab = vocab_of(&["dishonestly"]);
        let pipeline = SubwordPipeline::build(cfg, SegmenterBackend::Lexicon(lex), &vocab).unwrap();
        let seq = pipeline.sequence("dishonestly").unwrap();
        let keys: Vec<&str> = seq
            .unit_ids
            .iter()
            .map(|&id| pipeline.subwords.key(id))
            .collect();
        assert_eq!(keys, vec!["dishonest", "ly", "dishonestly"]);
        assert_eq!(seq.position_ids, vec![0, 1, 2]);
    }

    #[test]
    fn supervised_positions_are_tag_ids() {
        let mut cfg = config(SegmenterKind::ExternalSupervised);
        cfg.position_mode = PositionMode::Multiplicative;
        let backend = SegmenterBackend::Lexicon(supervised_lexicon());
        let vocab = vocab_of(&["dishonestly", "honest"]);
        let pipeline = SubwordPipeline::build(cfg, backend, &vocab).unwrap();
        let tag_vocab = pipeline.tags.as_ref().unwrap();
        let seq = pipeline.sequence("dishonestly").unwrap();
        assert_eq!(
            seq.position_ids,
            vec![
                tag_vocab.get("prefix").unwrap(),
                tag_vocab.get("root").unwrap(),
                tag_vocab.get("suffix").unwrap(),
            ]
        );
    }

    #[test]
    fn st_mode_distinguishes_same_surface_different_tag() {
        let lex = SegmentationLexicon::from_entries([
            (
                "postwar".to_string(),
                vec!["post".into(), "war".into()],
                Some(vec!["prefix".into(), "root".into()]),
            ),
            (
                "post".to_string(),
                vec!["post".into()],
                Some(vec!["root".into()]),
            ),
        ])
        .unwrap();
        let mut cfg = config(SegmenterKind::ExternalSupervised);
        cfg.tag_mode = TagMode::SubwordTag;
        let vocab = vocab_of(&["postwar", "post"]);
        let pipeline = SubwordPipeline::build(cfg, SegmenterBackend::Lexicon(lex), &vocab).unwrap();
        let prefix_id = pipeline.subwords.get("post:prefix").unwrap();
        let root_id = pipeline.subwords.get("post:root").unwrap();
        assert_ne!(prefix_id, root_id);
    }

    #[test]
    fn tagged_mode_without_tags_errors() {
        let mut cfg = config(SegmenterKind::ExternalSupervised);
        cfg.tag_mode = TagMode::SubwordTag;
        let raw = RawSegmentation {
            subwords: vec!["ab".into(), "cd".into()],
            tags: None,
        };
        let err = layout_units("abcd", &raw, &cfg).unwrap_err();
        assert!(matches!(err, Error::MissingTags));
    }

    #[test]
    fn positions_clamp_to_cap() {
        let mut cfg = config(SegmenterKind::Bpe);
        cfg.position_mode = PositionMode::Additive;
        cfg.position_cap = 3;
        let backend = SegmenterBackend::Bpe(MergeTable::default());
        let vocab = vocab_of(&["abcdefgh"]);
        let pipeline = SubwordPipeline::build(cfg, backend, &vocab).unwrap();
        let seq = pipeline.sequence("abcdefgh").unwrap();
        assert_eq!(seq.position_ids, vec![0, 1, 2, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn unknown_units_are_dropped_at_inference() {
        let cfg = config(SegmenterKind::Bpe);
        let backend = SegmenterBackend::Bpe(MergeTable::default());
        let vocab = vocab_of(&["ab"]);
        let pipeline = SubwordPipeline::build(cfg, backend, &vocab).unwrap();
        // `b` and `z`: only `b` was seen in training.
        let seq = pipeline.sequence("bz").unwrap();
        let keys: Vec<&str> = seq
            .unit_ids
            .iter()
            .map(|&id| pipeline.subwords.key(id))
            .collect();
        assert_eq!(keys, vec!["b"]);
        assert_eq!(seq.position_ids, vec![0]);
        // Fully unknown word: empty sequence, caller decides.
        let seq = pipeline.sequence("zzzz").unwrap();
        assert!(seq.is_empty());
    }

    #[test]
    fn ngram_too_short_falls_back_to_whole_word() {
        let cfg = PipelineConfig {
            segmenter: SegmenterKind::CharNgram,
            ngram_min: 4,
            ngram_max: 6,
            dim: 4,
            ..PipelineConfig::default()
        };
        let backend = SegmenterBackend::CharNgram { n_min: 4, n_max: 6 };
        let vocab = vocab_of(&["a", "abcde"]);
        let pipeline = SubwordPipeline::build(cfg, backend, &vocab).unwrap();
        let seq = pipeline.sequence("a").unwrap();
        let keys: Vec<&str> = seq
            .unit_ids
            .iter()
            .map(|&id| pipeline.subwords.key(id))
            .collect();
        assert_eq!(keys, vec!["a"]);
    }

    #[test]
    fn ngram_hashing_buckets_grams_but_not_word_tokens() {
        let cfg = PipelineConfig {
            segmenter: SegmenterKind::CharNgram,
            word_token: true,
            ngram_min: 3,
            ngram_max: 4,
            ngram_buckets: Some(50),
            dim: 4,
            ..PipelineConfig::default()
        };
        let backend = SegmenterBackend::CharNgram { n_min: 3, n_max: 4 };
        let vocab = vocab_of(&["cat", "cart"]);
        let pipeline = SubwordPipeline::build(cfg, backend, &vocab).unwrap();
        let seq = pipeline.sequence("cat").unwrap();
        let keys: Vec<&str> = seq
            .unit_ids
            .iter()
            .map(|&id| pipeline.subwords.key(id))
            .collect();
        // Every n-gram key is a bucket, the appended word token is not.
        let (word_tokens, grams): (Vec<&&str>, Vec<&&str>) =
            keys.iter().partition(|k| **k == "cat");
        assert_eq!(word_tokens.len(), 1);
        assert!(!grams.is_empty());
        for gram in grams {
            assert!(gram.starts_with('#'), "bucketed key: {gram}");
            let bucket: usize = gram[1..].parse().unwrap();
            assert!(bucket < 50);
        }
        // The same gram hashes identically across words (shared bucket).
        let other = pipeline.sequence("cart").unwrap();
        assert!(other
            .unit_ids
            .iter()
            .any(|&id| { pipeline.subwords.key(id).starts_with('#') }));
    }

    #[test]
    fn subword_vocab_dump_round_trips() {
        let mut cfg = config(SegmenterKind::Bpe);
        cfg.word_token = true;
        cfg.composition = Composition::Attention;
        let table = train_bpe(
            &[("lowest", 5u64), ("lower", 4), ("low", 9)]
                .iter()
                .map(|(w, c)| (w.to_string(), *c))
                .collect(),
            6,
        )
        .unwrap();
        let vocab = vocab_of(&["lowest", "lower", "low"]);
        let pipeline = SubwordPipeline::build(cfg, SegmenterBackend::Bpe(table), &vocab).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("subwords.txt");
        pipeline.subwords.save(&path).unwrap();
        let loaded = SubwordVocab::load(&path).unwrap();
        assert_eq!(loaded.len(), pipeline.subwords.len());
        for id in 0..loaded.len() {
            assert_eq!(loaded.key(id), pipeline.subwords.key(id));
            assert_eq!(loaded.get(loaded.key(id)), Some(id));
        }
    }

    proptest! {
        /// The word token is never inserted for single-unit segmentations.
        #[test]
        fn no_word_token_for_single_unit(word in "[a-z]{1,12}") {
            let mut cfg = config(SegmenterKind::Bpe);
            cfg.word_token = true;
            let backend = SegmenterBackend::Bpe(MergeTable::default());
            let raw = backend.segment(&word);
            let layout = layout_units(&word, &raw, &cfg).unwrap();
            if raw.subwords.len() <= 1 {
                prop_assert!(!layout.includes_word_token);
                prop_assert_eq!(layout.keys.len(), raw.subwords.len());
            } else {
                prop_assert!(layout.includes_word_token);
            }
        }
    }
}
