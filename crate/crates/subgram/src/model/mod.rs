//! Model parameters and the differentiable subword composition pipeline.

pub mod compose;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Composition, PipelineConfig, PositionMode};
use crate::error::{Error, Result};

pub use compose::{
    backward, compose_add, compose_attention, compose_word, interact_position, AttentionOutput,
    CompositionTrace, Gradients,
};

/// All trainable matrices plus their AdaGrad accumulators.
///
/// Shapes: subword embeddings |S| x d, position embeddings p x d (empty
/// unless the configuration uses positions), context word embeddings
/// |V| x d, attention scorer h x d and k x h (empty for addition).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    pub subword: Array2<f64>,
    pub position: Array2<f64>,
    pub context: Array2<f64>,
    pub attn_hidden: Array2<f64>,
    pub attn_heads: Array2<f64>,
    pub acc_subword: Array2<f64>,
    pub acc_position: Array2<f64>,
    pub acc_context: Array2<f64>,
    pub acc_attn_hidden: Array2<f64>,
    pub acc_attn_heads: Array2<f64>,
    pub dim: usize,
}

impl ModelParameters {
    /// Seeded initialization. Subword and context rows are uniform in
    /// [-0.5/d, 0.5/d]; position rows start at the interaction identity
    /// (zeros for additive, ones for multiplicative) so training starts
    /// from the position-free model; attention weights are uniform in
    /// [-1/sqrt(d), 1/sqrt(d)].
    pub fn init(
        config: &PipelineConfig,
        n_subwords: usize,
        n_words: usize,
        seed: u64,
    ) -> Result<ModelParameters> {
        config.validate()?;
        let d = config.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let embed_bound = 0.5 / d as f64;
        let attn_bound = 1.0 / (d as f64).sqrt();

        let mut uniform = |rows: usize, cols: usize, bound: f64| {
            Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..=bound))
        };

        let subword = uniform(n_subwords, d, embed_bound);
        let context = uniform(n_words, d, embed_bound);
        let (h, k) = match config.composition {
            Composition::Addition => (0, 0),
            _ => (config.attention_hidden, config.effective_heads()),
        };
        let attn_hidden = uniform(h, d, attn_bound);
        let attn_heads = uniform(k, h, attn_bound);
        let position = match config.position_mode {
            PositionMode::None => Array2::zeros((0, d)),
            PositionMode::Additive => Array2::zeros((config.position_cap, d)),
            PositionMode::Multiplicative => Array2::ones((config.position_cap, d)),
        };

        Ok(ModelParameters {
            acc_subword: Array2::zeros(subword.raw_dim()),
            acc_position: Array2::zeros(position.raw_dim()),
            acc_context: Array2::zeros(context.raw_dim()),
            acc_attn_hidden: Array2::zeros(attn_hidden.raw_dim()),
            acc_attn_heads: Array2::zeros(attn_heads.raw_dim()),
            subword,
            position,
            context,
            attn_hidden,
            attn_heads,
            dim: d,
        })
    }

    /// Errors if any matrix contains a NaN or infinity.
    pub fn check_finite(&self) -> Result<()> {
        let checks: [(&str, &Array2<f64>); 5] = [
            ("subword embeddings", &self.subword),
            ("position embeddings", &self.position),
            ("context embeddings", &self.context),
            ("attention hidden weights", &self.attn_hidden),
            ("attention head weights", &self.attn_heads),
        ];
        for (name, matrix) in checks {
            if matrix.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericFailure(name.to_string()));
            }
        }
        Ok(())
    }
}
