//! Pipeline and training configuration, including the dotted
//! configuration labels (`sms.ww.pp.add` and friends) used on the
//! command line, in logs, and in run manifests.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Word segmentation backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SegmenterKind {
    /// External supervised segmenter output (label `sms`), subwords plus
    /// morphotactic tags consumed from a lexicon file.
    ExternalSupervised,
    /// External unsupervised segmenter output (label `morf`), subwords only.
    ExternalUnsupervised,
    /// Trainable byte pair encoding (label `bpe`).
    Bpe,
    /// Character n-grams with boundary markers (label `ngram`).
    CharNgram,
    /// No segmentation: the word itself is the only unit (label `word`).
    WholeWord,
}

impl SegmenterKind {
    pub fn label(self) -> &'static str {
        match self {
            SegmenterKind::ExternalSupervised => "sms",
            SegmenterKind::ExternalUnsupervised => "morf",
            SegmenterKind::Bpe => "bpe",
            SegmenterKind::CharNgram => "ngram",
            SegmenterKind::WholeWord => "word",
        }
    }

    pub fn from_flag(s: &str) -> Result<Self> {
        match s {
            "sms" => Ok(SegmenterKind::ExternalSupervised),
            "morf" => Ok(SegmenterKind::ExternalUnsupervised),
            "bpe" => Ok(SegmenterKind::Bpe),
            "ngram" => Ok(SegmenterKind::CharNgram),
            "word" => Ok(SegmenterKind::WholeWord),
            other => Err(Error::InvalidConfig(format!(
                "unknown segmenter `{other}` (expected sms, morf, bpe, ngram or word)"
            ))),
        }
    }
}

/// Whether each subword is keyed by its surface alone (`off`) or by
/// `surface:tag` (`st`, supervised segmentation only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TagMode {
    Off,
    SubwordTag,
}

/// How position embeddings interact with subword embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PositionMode {
    /// No position embeddings (`p-`).
    None,
    /// Additive (`pp`): r = s + p.
    Additive,
    /// Multiplicative (`mp`): r = s ⊙ p.
    Multiplicative,
}

impl PositionMode {
    pub fn label(self) -> &'static str {
        match self {
            PositionMode::None => "p-",
            PositionMode::Additive => "pp",
            PositionMode::Multiplicative => "mp",
        }
    }
}

/// Composition of subword vectors into one word vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Composition {
    /// Unweighted sum (`add`).
    Addition,
    /// Single-head self-attention (`att`).
    Attention,
    /// Multi-head self-attention with row-averaged weights (`mtx`).
    MultiHeadAttention,
}

impl Composition {
    pub fn label(self) -> &'static str {
        match self {
            Composition::Addition => "add",
            Composition::Attention => "att",
            Composition::MultiHeadAttention => "mtx",
        }
    }
}

/// One point in the configuration space: segmentation x word-token x
/// tag x position x composition, plus the model shape hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub segmenter: SegmenterKind,
    /// Insert the whole word as an extra unit when the segmentation has
    /// more than one unit (`ww` vs `w-`).
    pub word_token: bool,
    pub tag_mode: TagMode,
    pub position_mode: PositionMode,
    pub composition: Composition,
    /// Attention heads; only used by `mtx` (single-head uses 1).
    pub heads: usize,
    /// Hidden size of the attention scoring network.
    pub attention_hidden: usize,
    /// Embedding dimensionality.
    pub dim: usize,
    /// Number of distinct position ids; longer sequences reuse the last id.
    pub position_cap: usize,
    /// Character n-gram length range (ngram segmenter only).
    pub ngram_min: usize,
    pub ngram_max: usize,
    /// Optional hashing of n-grams into a fixed number of buckets.
    pub ngram_buckets: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            segmenter: SegmenterKind::Bpe,
            word_token: false,
            tag_mode: TagMode::Off,
            position_mode: PositionMode::None,
            composition: Composition::Addition,
            heads: 4,
            attention_hidden: 64,
            dim: 300,
            position_cap: 20,
            ngram_min: 3,
            ngram_max: 6,
            ngram_buckets: None,
        }
    }
}

impl PipelineConfig {
    /// Number of attention heads actually in play: 1 for `att`, `heads`
    /// for `mtx`, 0 for `add`.
    pub fn effective_heads(&self) -> usize {
        match self.composition {
            Composition::Addition => 0,
            Composition::Attention => 1,
            Composition::MultiHeadAttention => self.heads,
        }
    }

    pub fn uses_positions(&self) -> bool {
        self.position_mode != PositionMode::None
    }

    pub fn uses_tags(&self) -> bool {
        self.tag_mode == TagMode::SubwordTag
            || (self.segmenter == SegmenterKind::ExternalSupervised && self.uses_positions())
    }

    pub fn validate(&self) -> Result<()> {
        if self.tag_mode == TagMode::SubwordTag
            && self.segmenter != SegmenterKind::ExternalSupervised
        {
            return Err(Error::InvalidConfig(
                "`st` requires the supervised segmenter `sms`".into(),
            ));
        }
        if self.tag_mode == TagMode::SubwordTag && self.position_mode != PositionMode::None {
            return Err(Error::InvalidConfig(
                "`st` and position embeddings are mutually exclusive".into(),
            ));
        }
        if self.dim == 0 {
            return Err(Error::InvalidConfig(
                "embedding dimension must be > 0".into(),
            ));
        }
        if self.position_cap == 0 && self.uses_positions() {
            return Err(Error::InvalidConfig("position cap must be > 0".into()));
        }
        if self.composition == Composition::MultiHeadAttention && self.heads == 0 {
            return Err(Error::InvalidConfig("`mtx` needs at least one head".into()));
        }
        if self.composition != Composition::Addition && self.attention_hidden == 0 {
            return Err(Error::InvalidConfig(
                "attention hidden size must be > 0".into(),
            ));
        }
        if self.segmenter == SegmenterKind::CharNgram
            && (self.ngram_min == 0 || self.ngram_min > self.ngram_max)
        {
            return Err(Error::InvalidConfig(
                "n-gram range must satisfy 1 <= min <= max".into(),
            ));
        }
        Ok(())
    }

    /// Dotted label in the `seg.wordtoken.(st|pos).comp` grammar.
    pub fn label(&self) -> String {
        let third = match self.tag_mode {
            TagMode::SubwordTag => "st",
            TagMode::Off => self.position_mode.label(),
        };
        format!(
            "{}.{}.{}.{}",
            self.segmenter.label(),
            if self.word_token { "ww" } else { "w-" },
            third,
            self.composition.label()
        )
    }
}

/// Parses a dotted configuration label into a validated `PipelineConfig`
/// with default shape hyperparameters.
///
/// Only the 60 combinations over {sms,morf,bpe} x {w-,ww} x
/// ({st}|{p-,pp,mp}) x {add,att,mtx} are accepted; `st` is limited to
/// `sms` and excludes position embeddings.
pub fn parse_config_label(label: &str) -> Result<PipelineConfig> {
    let bad = |reason: &str| Error::InvalidLabel {
        label: label.to_string(),
        reason: reason.to_string(),
    };
    let parts: Vec<&str> = label.split('.').collect();
    if parts.len() != 4 {
        if parts.len() == 5 && parts[2] == "st" && matches!(parts[3], "p-" | "pp" | "mp") {
            return Err(bad("`st` and position embeddings are mutually exclusive"));
        }
        return Err(bad("expected 4 dot-separated components"));
    }
    let segmenter = match parts[0] {
        "sms" => SegmenterKind::ExternalSupervised,
        "morf" => SegmenterKind::ExternalUnsupervised,
        "bpe" => SegmenterKind::Bpe,
        other => return Err(bad(&format!("unknown segmentation `{other}`"))),
    };
    let word_token = match parts[1] {
        "w-" => false,
        "ww" => true,
        other => return Err(bad(&format!("unknown word-token option `{other}`"))),
    };
    let (tag_mode, position_mode) = match parts[2] {
        "st" => (TagMode::SubwordTag, PositionMode::None),
        "p-" => (TagMode::Off, PositionMode::None),
        "pp" => (TagMode::Off, PositionMode::Additive),
        "mp" => (TagMode::Off, PositionMode::Multiplicative),
        other => return Err(bad(&format!("unknown tag/position option `{other}`"))),
    };
    let composition = match parts[3] {
        "add" => Composition::Addition,
        "att" => Composition::Attention,
        "mtx" => Composition::MultiHeadAttention,
        other => return Err(bad(&format!("unknown composition `{other}`"))),
    };
    let config = PipelineConfig {
        segmenter,
        word_token,
        tag_mode,
        position_mode,
        composition,
        ..PipelineConfig::default()
    };
    config.validate().map_err(|e| bad(&e.to_string()))?;
    Ok(config)
}

/// All 60 valid configuration labels (24 for `sms`, 18 each for `morf`
/// and `bpe`).
pub fn valid_labels() -> Vec<String> {
    let mut labels = Vec::new();
    for seg in ["sms", "morf", "bpe"] {
        for wt in ["w-", "ww"] {
            let thirds: &[&str] = if seg == "sms" {
                &["st", "p-", "pp", "mp"]
            } else {
                &["p-", "pp", "mp"]
            };
            for third in thirds {
                for comp in ["add", "att", "mtx"] {
                    labels.push(format!("{seg}.{wt}.{third}.{comp}"));
                }
            }
        }
    }
    labels
}

/// Skip-gram training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub window: usize,
    pub negatives: usize,
    pub subsample_t: f64,
    pub lr0: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            window: 5,
            negatives: 5,
            subsample_t: 1e-5,
            lr0: 0.05,
            batch_size: 1024,
            seed: 1,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0
            || self.negatives == 0
            || self.batch_size == 0
            || self.workers == 0
            || self.subsample_t <= 0.0
            || self.lr0 <= 0.0
        {
            return Err(Error::InvalidConfig(
                "window, negatives, batch size, workers, subsample rate and learning rate must be positive"
                    .into(),
            ));
        }
        Ok(())
    }
}
