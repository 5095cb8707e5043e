//! The generative model: a text-conditioned feature generator trained
//! adversarially against a two-headed discriminator, with a visual-pivot
//! regularizer pulling per-class generated means toward the per-class
//! centroids of the real features.
//!
//! Submodules: [`net`] holds the network parameters and forward passes,
//! [`loss`] the loss constructions, and [`train`] the alternating training
//! loop and feature synthesis.

pub mod loss;
pub mod net;
pub mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{AdamConfig, AdamError, GraphError};
use crate::data::DataError;
use crate::text::TextError;
use crate::ClassId;

pub use loss::{
    compute_visual_pivots, discriminator_loss, generator_loss, vp_loss, VisualPivots,
};
pub use net::{Dense, DiscriminatorParams, GeneratorParams};
pub use train::{synthesize_features, train_model, train_model_with_progress, GanModel,
    LossRecord, TrainOutcome};

/// Negative-side slope of the generator's hidden activation. The value is a
/// widely used convention; nothing here is sensitive to it.
pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Error)]
pub enum GanError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Adam(#[from] AdamError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("invalid train config: {0}")]
    InvalidConfig(String),
    #[error("{context}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("empty batch passed to {0}")]
    EmptyBatch(&'static str),
    #[error("{context}: got {found} values for a batch of {expected}")]
    BatchMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("no visual pivot for class {class}")]
    MissingPivot { class: ClassId },
    #[error("seen class {class} has no training instances")]
    EmptyClass { class: ClassId },
    #[error("documents for classes {classes:?} encode to zero vectors; the generator cannot be conditioned on them")]
    ZeroTextClasses { classes: Vec<ClassId> },
    #[error("step {step}: {name} became non-finite ({value})")]
    NonFiniteLoss {
        step: usize,
        name: &'static str,
        value: f64,
    },
}

/// Which parts of the objective drive training. Used for the ablation study;
/// the full model is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AblationMode {
    /// Adversarial + classification + visual-pivot objectives.
    #[default]
    Full,
    /// Adversarial + classification only (pivot weight forced to zero).
    GanOnly,
    /// Visual-pivot regression only; the discriminator is never updated.
    VpOnly,
}

/// Everything that determines a training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Discriminator updates per outer loop.
    pub n_d: usize,
    /// Minibatch size for both players.
    pub batch_size: usize,
    /// Outer loop count.
    pub max_loops: usize,
    /// Adam step size and moment decays, shared by both players.
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Weight of the visual-pivot regularizer in the generator objective.
    pub lambda_p: f64,
    /// Weight of the gradient penalty in the discriminator objective.
    pub gp_coeff: f64,
    /// Noise input width.
    pub z_dim: usize,
    /// Width of the text-reduction layer output.
    pub d_text: usize,
    /// Generator hidden width.
    pub h_g: usize,
    /// Discriminator hidden width.
    pub h_d: usize,
    pub seed: u64,
    pub ablation: AblationMode,
    /// When false the text-reduction layer is replaced by the identity and
    /// the raw text vector feeds the hidden layer directly.
    pub use_text_fc: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            n_d: 5,
            batch_size: 32,
            max_loops: 400,
            alpha: 0.001,
            beta1: 0.5,
            beta2: 0.9,
            lambda_p: 1.0,
            gp_coeff: 10.0,
            z_dim: 100,
            d_text: 1000,
            h_g: 256,
            h_d: 256,
            seed: 0,
            ablation: AblationMode::Full,
            use_text_fc: true,
        }
    }
}

impl TrainConfig {
    /// Desk-scale preset sized for the synthetic benchmark: same objective,
    /// much smaller layers so a full run takes seconds.
    pub fn synthetic_benchmark() -> Self {
        TrainConfig {
            d_text: 32,
            z_dim: 16,
            h_g: 64,
            h_d: 64,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), GanError> {
        let bad = |msg: String| Err(GanError::InvalidConfig(msg));
        if self.n_d < 1 {
            return bad("n_d must be at least 1".into());
        }
        if self.batch_size < 1 {
            return bad("batch_size must be at least 1".into());
        }
        if self.z_dim < 1 || self.d_text < 1 || self.h_g < 1 || self.h_d < 1 {
            return bad("layer widths and z_dim must be at least 1".into());
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return bad(format!("alpha {} must be positive and finite", self.alpha));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return bad(format!("{name} {beta} must be in [0, 1)"));
            }
        }
        for (name, weight) in [("lambda_p", self.lambda_p), ("gp_coeff", self.gp_coeff)] {
            if !(weight >= 0.0) || !weight.is_finite() {
                return bad(format!("{name} {weight} must be non-negative and finite"));
            }
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            alpha: self.alpha,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: 1e-8,
        }
    }
}
