//! Minimal reverse-mode automatic differentiation on dense f64 tensors.
//!
//! Built for one job: training a feature GAN whose discriminator loss
//! contains a gradient penalty, which requires differentiating through a
//! gradient. See [`Graph::input_gradient`] for how that composes.

mod adam;
mod graph;
mod tensor;

pub use adam::{AdamConfig, AdamError, AdamState};
pub use graph::{Graph, GraphError, NodeId};
pub use tensor::Tensor;
