//! Skip-gram negative-sampling training over composed word vectors:
//! negative sampling table, SGNS loss with exact gradients, AdaGrad with
//! a linearly decaying learning rate, and the batched training loop.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{Composition, TrainConfig};
use crate::corpus::{
    generate_pairs_into, preprocess_line, subsampled_ids, TrainingPair, Vocabulary,
};
use crate::error::{Error, Result};
use crate::model::{backward, compose_word, ModelParameters};
use crate::segmentation::{SubwordPipeline, SubwordSequence};
use crate::vectors;

const ADAGRAD_EPS: f64 = 1e-8;
const LR_FLOOR_FRACTION: f64 = 1e-4;
/// Stream salts so pair generation and negative sampling consume
/// independent deterministic random streams per epoch.
const PAIR_STREAM: u64 = 0x5041;
const NEG_STREAM: u64 = 0x4e45;

fn stream_rng(seed: u64, epoch: u64, stream: u64) -> ChaCha8Rng {
    let mixed = seed
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add((epoch + 1).wrapping_mul(0xd1b54a32d192ed03))
        ^ stream;
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Negative-sampling distribution over context word ids, proportional to
/// count^0.75 with support over the full vocabulary.
#[derive(Debug, Clone)]
pub struct NegativeTable {
    cdf: Vec<f64>,
}

impl NegativeTable {
    pub fn new(vocab: &Vocabulary) -> NegativeTable {
        let weights: Vec<f64> = vocab
            .entries()
            .iter()
            .map(|e| (e.count as f64).powf(0.75))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut cdf = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w / total;
            cdf.push(acc);
        }
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        NegativeTable { cdf }
    }

    pub fn probability(&self, id: usize) -> f64 {
        if id == 0 {
            self.cdf[0]
        } else {
            self.cdf[id] - self.cdf[id - 1]
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c <= u)
    }

    /// Samples a negative, resampling on collision with the positive
    /// context id.
    pub fn sample_excluding<R: Rng>(&self, rng: &mut R, excluded: usize) -> usize {
        if self.cdf.len() <= 1 {
            return 0;
        }
        for _ in 0..100 {
            let s = self.sample(rng);
            if s != excluded {
                return s;
            }
        }
        // The distribution is almost entirely on `excluded`; fall back to
        // a deterministic neighbor rather than spinning.
        (excluded + 1) % self.cdf.len()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// SGNS loss for one (target, context) pair with sampled negatives:
/// -log s(w.c+) - sum -log s(-w.c-), with exact gradients.
#[derive(Debug, Clone)]
pub struct SgnsLoss {
    pub loss: f64,
    pub grad_target: Array1<f64>,
    /// Per touched context row: gradient = coefficient * target vector.
    pub context_coefficients: Vec<(usize, f64)>,
}

impl SgnsLoss {
    /// Materialized gradients with respect to the touched context rows.
    pub fn context_grads(&self, target: ArrayView1<f64>) -> Vec<(usize, Array1<f64>)> {
        self.context_coefficients
            .iter()
            .map(|&(id, coef)| (id, &target * coef))
            .collect()
    }
}

pub fn sgns_loss(
    target: ArrayView1<f64>,
    context_id: usize,
    negative_ids: &[usize],
    context_matrix: ArrayView2<f64>,
) -> SgnsLoss {
    let mut grad_target = Array1::zeros(target.len());
    let mut context_coefficients = Vec::with_capacity(1 + negative_ids.len());

    let pos_row = context_matrix.row(context_id);
    let pos_score = target.dot(&pos_row);
    let mut loss = softplus(-pos_score);
    let pos_coef = sigmoid(pos_score) - 1.0;
    grad_target.scaled_add(pos_coef, &pos_row);
    context_coefficients.push((context_id, pos_coef));

    for &neg_id in negative_ids {
        let neg_row = context_matrix.row(neg_id);
        let neg_score = target.dot(&neg_row);
        loss += softplus(neg_score);
        let neg_coef = sigmoid(neg_score);
        grad_target.scaled_add(neg_coef, &neg_row);
        context_coefficients.push((neg_id, neg_coef));
    }

    SgnsLoss {
        loss,
        grad_target,
        context_coefficients,
    }
}

/// One AdaGrad step: acc += g^2 elementwise, then
/// param -= lr * g / (sqrt(acc) + 1e-8).
pub fn adagrad_update(
    mut param: ArrayViewMut1<f64>,
    grad: ArrayView1<f64>,
    mut acc: ArrayViewMut1<f64>,
    lr: f64,
) {
    Zip::from(&mut param)
        .and(&grad)
        .and(&mut acc)
        .for_each(|p, &g, a| {
            *a += g * g;
            *p -= lr * g / (a.sqrt() + ADAGRAD_EPS);
        });
}

/// Linearly decaying learning rate with a floor of 1e-4 * lr0.
pub fn lr_schedule(step: u64, total_steps: u64, lr0: f64) -> f64 {
    if total_steps == 0 {
        return lr0;
    }
    let remaining = 1.0 - step as f64 / total_steps as f64;
    lr0 * remaining.max(LR_FLOOR_FRACTION)
}

/// Gradients summed over a batch shard.
struct GradBuffer {
    subword: HashMap<usize, Array1<f64>>,
    position: HashMap<usize, Array1<f64>>,
    context: HashMap<usize, Array1<f64>>,
    attn_hidden: Option<Array2<f64>>,
    attn_heads: Option<Array2<f64>>,
    loss: f64,
    dim: usize,
}

impl GradBuffer {
    fn new(params: &ModelParameters, attention: bool) -> GradBuffer {
        GradBuffer {
            subword: HashMap::new(),
            position: HashMap::new(),
            context: HashMap::new(),
            attn_hidden: attention.then(|| Array2::zeros(params.attn_hidden.raw_dim())),
            attn_heads: attention.then(|| Array2::zeros(params.attn_heads.raw_dim())),
            loss: 0.0,
            dim: params.dim,
        }
    }

    fn accumulate_pair(
        &mut self,
        pair: &TrainingPair,
        negatives: &[usize],
        sequences: &[SubwordSequence],
        params: &ModelParameters,
        pipeline: &SubwordPipeline,
    ) -> Result<()> {
        let trace = compose_word(&sequences[pair.target_id], params, &pipeline.config, true)?;
        let sgns = sgns_loss(
            trace.word_vector.view(),
            pair.context_id,
            negatives,
            params.context.view(),
        );
        self.loss += sgns.loss;
        for (id, coef) in &sgns.context_coefficients {
            self.context
                .entry(*id)
                .or_insert_with(|| Array1::zeros(self.dim))
                .scaled_add(*coef, &trace.word_vector);
        }
        let grads = backward(&trace, sgns.grad_target.view(), params, &pipeline.config)?;
        for (id, grad) in grads.subword_rows {
            self.subword
                .entry(id)
                .or_insert_with(|| Array1::zeros(self.dim))
                .scaled_add(1.0, &grad);
        }
        for (id, grad) in grads.position_rows {
            self.position
                .entry(id)
                .or_insert_with(|| Array1::zeros(self.dim))
                .scaled_add(1.0, &grad);
        }
        if let (Some(acc), Some(grad)) = (self.attn_hidden.as_mut(), grads.attn_hidden) {
            acc.scaled_add(1.0, &grad);
        }
        if let (Some(acc), Some(grad)) = (self.attn_heads.as_mut(), grads.attn_heads) {
            acc.scaled_add(1.0, &grad);
        }
        Ok(())
    }

    fn merge(&mut self, other: GradBuffer) {
        self.loss += other.loss;
        for (id, grad) in other.subword {
            self.subword
                .entry(id)
                .or_insert_with(|| Array1::zeros(self.dim))
                .scaled_add(1.0, &grad);
        }
        for (id, grad) in other.position {
            self.position
                .entry(id)
                .or_insert_with(|| Array1::zeros(self.dim))
                .scaled_add(1.0, &grad);
        }
        for (id, grad) in other.context {
            self.context
                .entry(id)
                .or_insert_with(|| Array1::zeros(self.dim))
                .scaled_add(1.0, &grad);
        }
        if let (Some(acc), Some(grad)) = (self.attn_hidden.as_mut(), other.attn_hidden) {
            acc.scaled_add(1.0, &grad);
        }
        if let (Some(acc), Some(grad)) = (self.attn_heads.as_mut(), other.attn_heads) {
            acc.scaled_add(1.0, &grad);
        }
    }

    /// One AdaGrad step over everything the batch touched. Row updates
    /// are independent, so map iteration order does not affect the
    /// result.
    fn apply(self, params: &mut ModelParameters, lr: f64) {
        for (id, grad) in &self.subword {
            adagrad_update(
                params.subword.row_mut(*id),
                grad.view(),
                params.acc_subword.row_mut(*id),
                lr,
            );
        }
        for (id, grad) in &self.position {
            adagrad_update(
                params.position.row_mut(*id),
                grad.view(),
                params.acc_position.row_mut(*id),
                lr,
            );
        }
        for (id, grad) in &self.context {
            adagrad_update(
                params.context.row_mut(*id),
                grad.view(),
                params.acc_context.row_mut(*id),
                lr,
            );
        }
        if let Some(grad) = &self.attn_hidden {
            for (row, g) in grad.rows().into_iter().enumerate() {
                adagrad_update(
                    params.attn_hidden.row_mut(row),
                    g,
                    params.acc_attn_hidden.row_mut(row),
                    lr,
                );
            }
        }
        if let Some(grad) = &self.attn_heads {
            for (row, g) in grad.rows().into_iter().enumerate() {
                adagrad_update(
                    params.attn_heads.row_mut(row),
                    g,
                    params.acc_attn_heads.row_mut(row),
                    lr,
                );
            }
        }
    }
}

/// Result of a training run.
pub struct TrainOutcome {
    pub params: ModelParameters,
    /// Mean SGNS loss per epoch.
    pub epoch_losses: Vec<f64>,
    pub pairs_per_epoch: Vec<u64>,
    pub total_steps: u64,
}

/// Trains subword-composed embeddings with SGNS over the corpus file.
///
/// Within a batch, gradients are computed against read-only parameters
/// (in `workers` shards merged in shard order) and summed; one AdaGrad
/// step is taken per batch. Identical seeds and worker counts reproduce
/// bit-identical parameters.
pub fn train(
    corpus: &Path,
    vocab: &Vocabulary,
    pipeline: &SubwordPipeline,
    train_config: &TrainConfig,
) -> Result<TrainOutcome> {
    pipeline.config.validate()?;
    train_config.validate()?;
    let sequences = pipeline.training_sequences(vocab)?;
    let mut params = ModelParameters::init(
        &pipeline.config,
        pipeline.subwords.len(),
        vocab.len(),
        train_config.seed,
    )?;
    let negative_table = NegativeTable::new(vocab);
    let keep_probs = vocab.keep_probabilities(train_config.subsample_t);

    // Exact pre-count of optimizer steps: replay each epoch's pair stream
    // (same seeds as the training pass) so the linear decay knows its
    // horizon before the first update.
    let mut pairs_per_epoch = Vec::with_capacity(train_config.epochs);
    let mut total_steps = 0u64;
    for epoch in 0..train_config.epochs {
        let mut rng = stream_rng(train_config.seed, epoch as u64, PAIR_STREAM);
        let mut count = 0u64;
        let mut scratch = Vec::new();
        for_each_line(corpus, |line| {
            let tokens = preprocess_line(line);
            let ids = subsampled_ids(&tokens, vocab, &keep_probs, &mut rng);
            scratch.clear();
            generate_pairs_into(&ids, train_config.window, &mut rng, &mut scratch);
            count += scratch.len() as u64;
            Ok(())
        })?;
        pairs_per_epoch.push(count);
        total_steps += count.div_ceil(train_config.batch_size as u64);
    }

    let attention = pipeline.config.composition != Composition::Addition;
    let mut epoch_losses = Vec::with_capacity(train_config.epochs);
    let mut step = 0u64;
    for epoch in 0..train_config.epochs {
        let start = Instant::now();
        let mut rng_pairs = stream_rng(train_config.seed, epoch as u64, PAIR_STREAM);
        let mut rng_neg = stream_rng(train_config.seed, epoch as u64, NEG_STREAM);
        let mut pending: Vec<TrainingPair> = Vec::with_capacity(2 * train_config.batch_size);
        let mut epoch_loss = 0.0;
        let mut epoch_pairs = 0u64;
        let mut epoch_words = 0u64;

        for_each_line(corpus, |line| {
            let tokens = preprocess_line(line);
            let ids = subsampled_ids(&tokens, vocab, &keep_probs, &mut rng_pairs);
            epoch_words += ids.len() as u64;
            generate_pairs_into(&ids, train_config.window, &mut rng_pairs, &mut pending);
            while pending.len() >= train_config.batch_size {
                let batch: Vec<TrainingPair> = pending.drain(..train_config.batch_size).collect();
                epoch_loss += run_batch(
                    &batch,
                    &sequences,
                    &mut params,
                    pipeline,
                    &negative_table,
                    train_config,
                    &mut rng_neg,
                    lr_schedule(step, total_steps, train_config.lr0),
                    attention,
                )?;
                epoch_pairs += batch.len() as u64;
                step += 1;
            }
            Ok(())
        })?;
        if !pending.is_empty() {
            let batch = std::mem::take(&mut pending);
            epoch_loss += run_batch(
                &batch,
                &sequences,
                &mut params,
                pipeline,
                &negative_table,
                train_config,
                &mut rng_neg,
                lr_schedule(step, total_steps, train_config.lr0),
                attention,
            )?;
            epoch_pairs += batch.len() as u64;
            step += 1;
        }

        debug_assert_eq!(
            epoch_pairs, pairs_per_epoch[epoch],
            "pair stream replay drifted from the counting pass"
        );
        let mean_loss = if epoch_pairs > 0 {
            epoch_loss / epoch_pairs as f64
        } else {
            0.0
        };
        if !mean_loss.is_finite() {
            return Err(Error::NumericFailure(format!(
                "epoch {} mean loss",
                epoch + 1
            )));
        }
        let elapsed = start.elapsed().as_secs_f64().max(1e-9);
        log::info!(
            "epoch {}/{}: mean loss {:.6}, lr {:.6}, {:.0} words/sec",
            epoch + 1,
            train_config.epochs,
            mean_loss,
            lr_schedule(step, total_steps, train_config.lr0),
            epoch_words as f64 / elapsed,
        );
        epoch_losses.push(mean_loss);
    }
    params.check_finite()?;

    Ok(TrainOutcome {
        params,
        epoch_losses,
        pairs_per_epoch,
        total_steps,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_batch(
    batch: &[TrainingPair],
    sequences: &[SubwordSequence],
    params: &mut ModelParameters,
    pipeline: &SubwordPipeline,
    negative_table: &NegativeTable,
    train_config: &TrainConfig,
    rng_neg: &mut ChaCha8Rng,
    lr: f64,
    attention: bool,
) -> Result<f64> {
    // Negatives are drawn sequentially so the stream is independent of
    // the worker count.
    let negatives: Vec<usize> = batch
        .iter()
        .flat_map(|pair| {
            (0..train_config.negatives)
                .map(|_| negative_table.sample_excluding(rng_neg, pair.context_id))
                .collect::<Vec<_>>()
        })
        .collect();

    let k = train_config.negatives;
    let buffer = if train_config.workers <= 1 {
        let mut buffer = GradBuffer::new(params, attention);
        for (i, pair) in batch.iter().enumerate() {
            buffer.accumulate_pair(
                pair,
                &negatives[i * k..(i + 1) * k],
                sequences,
                params,
                pipeline,
            )?;
        }
        buffer
    } else {
        let chunk = batch.len().div_ceil(train_config.workers);
        let shards: Vec<Result<GradBuffer>> = batch
            .par_chunks(chunk)
            .enumerate()
            .map(|(ci, pairs)| {
                let mut shard = GradBuffer::new(params, attention);
                for (i, pair) in pairs.iter().enumerate() {
                    let at = ci * chunk + i;
                    shard.accumulate_pair(
                        pair,
                        &negatives[at * k..(at + 1) * k],
                        sequences,
                        params,
                        pipeline,
                    )?;
                }
                Ok(shard)
            })
            .collect();
        let mut merged = GradBuffer::new(params, attention);
        for shard in shards {
            merged.merge(shard?);
        }
        merged
    };

    let loss = buffer.loss;
    buffer.apply(params, lr);
    Ok(loss)
}

fn for_each_line(path: &Path, mut f: impl FnMut(&str) -> Result<()>) -> Result<()> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        f(&line)?;
    }
    Ok(())
}

/// Writes every vocabulary word's composed (inference-mode) embedding in
/// word2vec text format, in vocabulary id order.
pub fn export_vectors(
    params: &ModelParameters,
    vocab: &Vocabulary,
    pipeline: &SubwordPipeline,
    path: &Path,
) -> Result<()> {
    let mut rows: Vec<(String, Vec<f64>)> = Vec::with_capacity(vocab.len());
    for entry in vocab.entries() {
        let seq = pipeline.sequence(&entry.word)?;
        let vector = if seq.is_empty() {
            vec![0.0; params.dim]
        } else {
            compose_word(&seq, params, &pipeline.config, false)?
                .word_vector
                .to_vec()
        };
        rows.push((entry.word.clone(), vector));
    }
    vectors::write_text(
        path,
        params.dim,
        rows.iter().map(|(w, v)| (w.as_str(), v.as_slice())),
    )
}
