//! Run manifests: one JSON document per training run recording the
//! configuration label, hyperparameters, corpus checksum and artifact
//! paths, plus the stage orchestration that executes a manifest.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checkpoint;
use crate::config::{PipelineConfig, SegmenterKind, TrainConfig};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::model::ModelParameters;
use crate::segmentation::{
    MergeTable, SegmentationLexicon, SegmenterBackend, SubwordPipeline, SubwordVocab,
};
use crate::trainer::{self, TrainOutcome};

/// Paths of everything a run reads and writes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifacts {
    pub vocab: PathBuf,
    pub merges: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub subword_vocab: PathBuf,
    pub checkpoint: PathBuf,
    pub vectors: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Dotted configuration label echoed in logs and reports.
    pub label: String,
    pub pipeline: PipelineConfig,
    pub train: TrainConfig,
    pub corpus: PathBuf,
    pub corpus_sha256: String,
    pub min_count: u64,
    pub artifacts: Artifacts,
    pub wall_clock_secs: f64,
}

impl RunManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::parse(path, format!("manifest serialization: {e}")))?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<RunManifest> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, format!("manifest: {e}")))
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

/// Builds the segmentation backend a manifest declares, loading merge
/// tables or lexicons from their recorded paths.
pub fn load_backend(manifest: &RunManifest) -> Result<SegmenterBackend> {
    match manifest.pipeline.segmenter {
        SegmenterKind::Bpe => {
            let path = manifest.artifacts.merges.as_ref().ok_or_else(|| {
                Error::InvalidConfig("bpe segmentation needs a merge table path".into())
            })?;
            Ok(SegmenterBackend::Bpe(MergeTable::load(path)?))
        }
        SegmenterKind::ExternalSupervised | SegmenterKind::ExternalUnsupervised => {
            let path = manifest.artifacts.lexicon.as_ref().ok_or_else(|| {
                Error::InvalidConfig("external segmentation needs a lexicon path".into())
            })?;
            let lexicon = SegmentationLexicon::load(path)?;
            if manifest.pipeline.segmenter == SegmenterKind::ExternalSupervised
                && !lexicon.is_tagged()
            {
                return Err(Error::InvalidConfig(format!(
                    "{}: `sms` needs a tagged lexicon",
                    path.display()
                )));
            }
            Ok(SegmenterBackend::Lexicon(lexicon))
        }
        SegmenterKind::CharNgram => Ok(SegmenterBackend::CharNgram {
            n_min: manifest.pipeline.ngram_min,
            n_max: manifest.pipeline.ngram_max,
        }),
        SegmenterKind::WholeWord => Ok(SegmenterBackend::WholeWord),
    }
}

/// Summary of an executed run.
pub struct RunSummary {
    pub outcome: TrainOutcome,
    pub vocab_size: usize,
    pub subword_vocab_size: usize,
}

/// Executes the declared stages: vocabulary (loaded from the dump if it
/// exists, otherwise built from the corpus), segmentation pipeline,
/// training, checkpoint, vector export, and the manifest itself.
/// Re-running the same manifest overwrites its outputs deterministically.
pub fn run_pipeline(manifest: &mut RunManifest, manifest_path: &Path) -> Result<RunSummary> {
    let started = Instant::now();
    manifest.pipeline.validate()?;
    manifest.train.validate()?;
    manifest.corpus_sha256 = sha256_file(&manifest.corpus)?;

    let vocab = if manifest.artifacts.vocab.exists() {
        Vocabulary::load(&manifest.artifacts.vocab)?
    } else {
        let vocab = Vocabulary::from_corpus(&manifest.corpus, manifest.min_count)?;
        vocab.save(&manifest.artifacts.vocab)?;
        vocab
    };

    let backend = load_backend(manifest)?;
    let pipeline = SubwordPipeline::build(manifest.pipeline.clone(), backend, &vocab)?;
    pipeline.subwords.save(&manifest.artifacts.subword_vocab)?;
    log::info!(
        "configuration {}: |V|={}, |S|={}",
        manifest.label,
        vocab.len(),
        pipeline.subwords.len()
    );

    let outcome = trainer::train(&manifest.corpus, &vocab, &pipeline, &manifest.train)?;
    checkpoint::save(
        &manifest.artifacts.checkpoint,
        &manifest.pipeline,
        &outcome.params,
    )?;
    trainer::export_vectors(
        &outcome.params,
        &vocab,
        &pipeline,
        &manifest.artifacts.vectors,
    )?;

    manifest.wall_clock_secs = started.elapsed().as_secs_f64();
    manifest.save(manifest_path)?;
    Ok(RunSummary {
        vocab_size: vocab.len(),
        subword_vocab_size: pipeline.subwords.len(),
        outcome,
    })
}

/// Loads everything needed to evaluate or export a finished run.
pub fn load_trained(
    manifest: &RunManifest,
) -> Result<(Vocabulary, SubwordPipeline, ModelParameters)> {
    let vocab = Vocabulary::load(&manifest.artifacts.vocab)?;
    let backend = load_backend(manifest)?;
    let subwords = SubwordVocab::load(&manifest.artifacts.subword_vocab)?;
    let (config, params) = checkpoint::load(&manifest.artifacts.checkpoint)?;
    if config != manifest.pipeline {
        return Err(Error::InvalidConfig(
            "checkpoint configuration differs from the manifest".into(),
        ));
    }
    if params.subword.nrows() != subwords.len() {
        return Err(Error::InvalidConfig(format!(
            "checkpoint has {} subword rows but the vocabulary has {}",
            params.subword.nrows(),
            subwords.len()
        )));
    }
    let pipeline = SubwordPipeline::with_vocab(config, backend, subwords)?;
    Ok((vocab, pipeline, params))
}
