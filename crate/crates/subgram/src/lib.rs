//! Subword-informed word embedding toolkit.
//!
//! Words are segmented into subword units (BPE merges, external
//! morphological lexicons, character n-grams, or the whole word), the
//! subword embeddings are combined with optional position or tag
//! information, composed into a word vector by addition or self-attention,
//! and trained end-to-end with skip-gram negative sampling.

pub mod checkpoint;
pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod manifest;
pub mod model;
pub mod segmentation;
pub mod trainer;
pub mod vectors;

pub use config::{Composition, PipelineConfig, PositionMode, SegmenterKind, TagMode, TrainConfig};
pub use error::{Error, Result};
