//! Zero-shot learning laboratory built around a text-conditioned feature GAN.
//!
//! The pieces fit together like this: [`text`] turns per-class descriptions
//! into TF-IDF vectors, [`gan`] trains a Wasserstein GAN with gradient
//! penalty, an auxiliary classifier head and a visual-pivot regularizer to
//! synthesize visual features from those vectors, and [`eval`] measures
//! zero-shot recognition, generalized zero-shot curves and retrieval quality
//! on the synthesized features. Everything numeric runs on the small
//! reverse-mode autodiff engine in [`autodiff`], which supports
//! gradient-of-gradient so the gradient penalty can be trained exactly.
//! [`data`] handles dataset serialization and ships a synthetic benchmark
//! generator so the whole pipeline runs at desk scale without any external
//! corpus.

pub mod artifact;
pub mod autodiff;
pub mod config;
pub mod data;
pub mod eval;
pub mod gan;
pub mod text;

/// Integer class identifier used across datasets, pivots and evaluation.
pub type ClassId = u32;
