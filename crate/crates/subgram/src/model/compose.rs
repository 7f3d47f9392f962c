//! Composition of subword vectors into word vectors (addition or
//! self-attention), position/tag interaction, and the exact backward
//! passes used by the trainer.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::config::{Composition, PipelineConfig, PositionMode};
use crate::error::{Error, Result};
use crate::model::ModelParameters;
use crate::segmentation::SubwordSequence;

/// Combines a subword vector with its position vector.
pub fn interact_position(
    s: ArrayView1<f64>,
    p: ArrayView1<f64>,
    mode: PositionMode,
) -> Result<Array1<f64>> {
    if mode != PositionMode::None && s.len() != p.len() {
        return Err(Error::DimensionMismatch {
            expected: s.len(),
            got: p.len(),
        });
    }
    Ok(match mode {
        PositionMode::None => s.to_owned(),
        PositionMode::Additive => &s + &p,
        PositionMode::Multiplicative => &s * &p,
    })
}

/// Unweighted sum of the unit vectors (rows of `units`).
pub fn compose_add(units: ArrayView2<f64>) -> Result<Array1<f64>> {
    if units.nrows() == 0 {
        return Err(Error::EmptySequence);
    }
    Ok(units.sum_axis(Axis(0)))
}

/// Forward result of the self-attention composition.
#[derive(Debug, Clone)]
pub struct AttentionOutput {
    pub word_vector: Array1<f64>,
    /// Final weight per unit; nonnegative, sums to one.
    pub weights: Array1<f64>,
    /// tanh activations, hidden x n.
    pub hidden: Array2<f64>,
    /// Per-head weight rows, heads x n.
    pub weight_matrix: Array2<f64>,
}

/// Numerically stable softmax over one row.
fn softmax_row(row: &mut ndarray::ArrayViewMut1<f64>) {
    let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    row.mapv_inplace(|v| (v - max).exp());
    let sum = row.sum();
    row.mapv_inplace(|v| v / sum);
}

/// Self-attention pooling: scores every unit with a two-layer bias-free
/// network, softmaxes each head's scores over the units, averages the
/// heads, and returns the weighted sum of unit vectors.
pub fn compose_attention(
    units: ArrayView2<f64>,
    w_h1: ArrayView2<f64>,
    w_h2: ArrayView2<f64>,
) -> Result<AttentionOutput> {
    let n = units.nrows();
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    if w_h1.ncols() != units.ncols() {
        return Err(Error::DimensionMismatch {
            expected: units.ncols(),
            got: w_h1.ncols(),
        });
    }
    if w_h2.ncols() != w_h1.nrows() || w_h2.nrows() == 0 {
        return Err(Error::DimensionMismatch {
            expected: w_h1.nrows(),
            got: w_h2.ncols(),
        });
    }

    let hidden = w_h1.dot(&units.t()).mapv(f64::tanh);
    let mut weight_matrix = w_h2.dot(&hidden);
    for mut row in weight_matrix.rows_mut() {
        softmax_row(&mut row);
    }
    let weights = weight_matrix.mean_axis(Axis(0)).expect("at least one head");
    let word_vector = units.t().dot(&weights);
    Ok(AttentionOutput {
        word_vector,
        weights,
        hidden,
        weight_matrix,
    })
}

/// Forward-pass record; holds the intermediates needed by [`backward`]
/// when composed with retention enabled.
#[derive(Debug, Clone)]
pub struct CompositionTrace {
    pub word_vector: Array1<f64>,
    /// Attention weights over units (None for addition).
    pub attention: Option<Array1<f64>>,
    /// Final per-unit vectors after position interaction, n x d.
    pub unit_vectors: Array2<f64>,
    state: Option<TraceState>,
}

#[derive(Debug, Clone)]
struct TraceState {
    unit_ids: Vec<usize>,
    position_ids: Vec<usize>,
    subword_rows: Array2<f64>,
    hidden: Option<Array2<f64>>,
    weight_matrix: Option<Array2<f64>>,
}

/// Composes one word from its subword sequence: subword lookup, position
/// interaction, then the configured composition. `retain` keeps the
/// intermediates required for [`backward`].
pub fn compose_word(
    seq: &SubwordSequence,
    params: &ModelParameters,
    config: &PipelineConfig,
    retain: bool,
) -> Result<CompositionTrace> {
    let n = seq.unit_ids.len();
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    let d = params.dim;
    let mut subword_rows = Array2::zeros((n, d));
    for (i, &id) in seq.unit_ids.iter().enumerate() {
        subword_rows.row_mut(i).assign(&params.subword.row(id));
    }
    let unit_vectors = match config.position_mode {
        PositionMode::None => subword_rows.clone(),
        mode => {
            let mut r = subword_rows.clone();
            for (i, &pos) in seq.position_ids.iter().enumerate() {
                let interacted =
                    interact_position(subword_rows.row(i), params.position.row(pos), mode)?;
                r.row_mut(i).assign(&interacted);
            }
            r
        }
    };

    let (word_vector, attention, hidden, weight_matrix) = match config.composition {
        Composition::Addition => (compose_add(unit_vectors.view())?, None, None, None),
        Composition::Attention | Composition::MultiHeadAttention => {
            let out = compose_attention(
                unit_vectors.view(),
                params.attn_hidden.view(),
                params.attn_heads.view(),
            )?;
            (
                out.word_vector,
                Some(out.weights),
                Some(out.hidden),
                Some(out.weight_matrix),
            )
        }
    };

    let state = retain.then(|| TraceState {
        unit_ids: seq.unit_ids.clone(),
        position_ids: seq.position_ids.clone(),
        subword_rows,
        hidden,
        weight_matrix,
    });
    Ok(CompositionTrace {
        word_vector,
        attention,
        unit_vectors,
        state,
    })
}

/// Sparse row gradients for the embedding matrices plus dense gradients
/// for the attention weights. Row lists are sorted by id, with repeated
/// lookups of the same row already accumulated.
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    pub subword_rows: Vec<(usize, Array1<f64>)>,
    pub position_rows: Vec<(usize, Array1<f64>)>,
    pub attn_hidden: Option<Array2<f64>>,
    pub attn_heads: Option<Array2<f64>>,
}

/// Backpropagates `grad_word` through the composition recorded in
/// `trace`. Must be called with the same parameters the forward pass
/// used.
pub fn backward(
    trace: &CompositionTrace,
    grad_word: ArrayView1<f64>,
    params: &ModelParameters,
    config: &PipelineConfig,
) -> Result<Gradients> {
    let state = trace.state.as_ref().ok_or(Error::MissingIntermediates)?;
    let n = state.unit_ids.len();
    let d = params.dim;
    if grad_word.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: grad_word.len(),
        });
    }

    // Gradient with respect to the interacted unit vectors R (n x d).
    let (grad_units, attn_hidden_grad, attn_heads_grad) = match config.composition {
        Composition::Addition => {
            let mut grad_units = Array2::zeros((n, d));
            for mut row in grad_units.rows_mut() {
                row.assign(&grad_word);
            }
            (grad_units, None, None)
        }
        Composition::Attention | Composition::MultiHeadAttention => {
            let weights = trace
                .attention
                .as_ref()
                .ok_or(Error::MissingIntermediates)?;
            let hidden = state.hidden.as_ref().ok_or(Error::MissingIntermediates)?;
            let weight_matrix = state
                .weight_matrix
                .as_ref()
                .ok_or(Error::MissingIntermediates)?;
            let heads = weight_matrix.nrows() as f64;

            // w = R^T a: split into the direct path a_i * g and the path
            // through the weights.
            let grad_weights = trace.unit_vectors.dot(&grad_word); // n

            // Head-averaged weights: dL/dA[j,i] = grad_weights[i] / k.
            // Softmax backward per head row.
            let mut grad_scores = Array2::zeros(weight_matrix.raw_dim()); // k x n
            for (j, a_row) in weight_matrix.rows().into_iter().enumerate() {
                let upstream = &grad_weights / heads;
                let dot = upstream.dot(&a_row);
                let row = (&upstream - dot) * a_row;
                grad_scores.row_mut(j).assign(&row);
            }

            let grad_attn_heads = grad_scores.dot(&hidden.t()); // k x h
            let grad_hidden = params.attn_heads.t().dot(&grad_scores); // h x n
            let grad_pre_tanh = &grad_hidden * &hidden.mapv(|v| 1.0 - v * v);
            let grad_attn_hidden = grad_pre_tanh.dot(&trace.unit_vectors); // h x d

            let mut grad_units = params.attn_hidden.t().dot(&grad_pre_tanh).reversed_axes(); // n x d
            for (i, mut row) in grad_units.rows_mut().into_iter().enumerate() {
                row.scaled_add(weights[i], &grad_word);
            }
            (grad_units, Some(grad_attn_hidden), Some(grad_attn_heads))
        }
    };

    // Through the position interaction into the embedding rows.
    let mut subword_acc: BTreeMap<usize, Array1<f64>> = BTreeMap::new();
    let mut position_acc: BTreeMap<usize, Array1<f64>> = BTreeMap::new();
    for i in 0..n {
        let unit_id = state.unit_ids[i];
        let grad_r = grad_units.row(i);
        match config.position_mode {
            PositionMode::None => {
                accumulate(&mut subword_acc, unit_id, grad_r.to_owned(), d);
            }
            PositionMode::Additive => {
                accumulate(&mut subword_acc, unit_id, grad_r.to_owned(), d);
                accumulate(
                    &mut position_acc,
                    state.position_ids[i],
                    grad_r.to_owned(),
                    d,
                );
            }
            PositionMode::Multiplicative => {
                let pos_id = state.position_ids[i];
                let grad_s = &grad_r * &params.position.row(pos_id);
                let grad_p = &grad_r * &state.subword_rows.row(i);
                accumulate(&mut subword_acc, unit_id, grad_s, d);
                accumulate(&mut position_acc, pos_id, grad_p, d);
            }
        }
    }

    Ok(Gradients {
        subword_rows: subword_acc.into_iter().collect(),
        position_rows: position_acc.into_iter().collect(),
        attn_hidden: attn_hidden_grad,
        attn_heads: attn_heads_grad,
    })
}

fn accumulate(acc: &mut BTreeMap<usize, Array1<f64>>, id: usize, grad: Array1<f64>, d: usize) {
    acc.entry(id)
        .or_insert_with(|| Array1::zeros(d))
        .scaled_add(1.0, &grad);
}
