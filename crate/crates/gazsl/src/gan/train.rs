//! The alternating training loop and post-training feature synthesis.
//!
//! One outer loop runs `n_d` discriminator updates followed by one generator
//! update. Every update builds a fresh graph over the current parameters:
//! discriminator steps treat the generated batch as a detached constant,
//! generator steps bind the discriminator parameters as constants and
//! differentiate only the generator's.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::autodiff::{AdamState, Graph, Tensor};
use crate::data::{DatasetBundle, FeatureScaler};
use crate::gan::loss::{compute_visual_pivots, discriminator_loss, generator_loss, vp_loss};
use crate::gan::net::{
    bind_discriminator, bind_generator, discriminator_forward_graph, generator_forward_graph,
    DiscriminatorParams, GeneratorParams,
};
use crate::gan::{AblationMode, GanError, TrainConfig};
use crate::text::{default_stoplist, encode_corpus, TfIdfVector};
use crate::ClassId;

/// Per-outer-loop loss snapshot. Losses that the active ablation does not
/// compute are recorded as NaN, which serializes as an empty CSV field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    /// Outer loop index, starting at 1.
    pub step: usize,
    /// Mean discriminator loss over the loop's n_d updates.
    pub l_d: f64,
    pub l_g: f64,
    pub l_e: f64,
    pub wall_ms: f64,
}

/// A trained model plus everything needed to apply it to new queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanModel {
    pub config: TrainConfig,
    pub x_dim: usize,
    /// Dense width of the TF-IDF input, equal to the training vocabulary size.
    pub text_dim: usize,
    /// Sorted; position in this list is the classifier head's logit index.
    pub seen_classes: Vec<ClassId>,
    pub scaler: FeatureScaler,
    /// Content hash of the training vocabulary. Evaluation re-encodes
    /// documents and refuses to run when its vocabulary hashes differently.
    pub vocab_hash: String,
    pub generator: GeneratorParams,
    pub discriminator: DiscriminatorParams,
}

/// Result of a training run.
#[derive(Debug)]
pub struct TrainOutcome {
    pub model: GanModel,
    pub history: Vec<LossRecord>,
    /// Total optimizer updates applied to each player; one outer loop adds
    /// exactly n_d and 1 respectively (zero for the discriminator in
    /// pivot-only mode).
    pub d_updates: u64,
    pub g_updates: u64,
    /// Feature dimensions that were constant across the training set.
    pub constant_dims: Vec<usize>,
}

/// Draw a minibatch of real rows with replacement. Returns the feature rows,
/// their class ids, their classifier indices, and the matching text rows.
fn sample_minibatch(
    rng: &mut ChaCha12Rng,
    features: &Tensor,
    labels: &[ClassId],
    class_index: &BTreeMap<ClassId, usize>,
    text_rows: &[Vec<f64>],
    m: usize,
) -> (Tensor, Vec<ClassId>, Vec<usize>, Tensor) {
    let x_dim = features.cols();
    let text_dim = text_rows[0].len();
    let mut x = Vec::with_capacity(m * x_dim);
    let mut text = Vec::with_capacity(m * text_dim);
    let mut classes = Vec::with_capacity(m);
    let mut indices = Vec::with_capacity(m);
    for _ in 0..m {
        let row = rng.random_range(0..features.rows());
        let class = labels[row];
        let idx = class_index[&class];
        x.extend_from_slice(features.row(row));
        text.extend_from_slice(&text_rows[idx]);
        classes.push(class);
        indices.push(idx);
    }
    (
        Tensor::matrix(m, x_dim, x).expect("counted"),
        classes,
        indices,
        Tensor::matrix(m, text_dim, text).expect("counted"),
    )
}

fn sample_noise(rng: &mut ChaCha12Rng, rows: usize, z_dim: usize) -> Tensor {
    let values: Vec<f64> = (0..rows * z_dim)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    Tensor::matrix(rows, z_dim, values).expect("counted")
}

fn ensure_finite(step: usize, name: &'static str, value: f64) -> Result<f64, GanError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(GanError::NonFiniteLoss { step, name, value })
    }
}

/// Train on the seen split of `bundle`. Rows of unseen classes are ignored;
/// evaluation uses them later. See [`train_model_with_progress`] to observe
/// per-loop records as they are produced.
pub fn train_model(bundle: &DatasetBundle, config: &TrainConfig) -> Result<TrainOutcome, GanError> {
    train_model_with_progress(bundle, config, |_| {})
}

pub fn train_model_with_progress(
    bundle: &DatasetBundle,
    config: &TrainConfig,
    mut on_record: impl FnMut(&LossRecord),
) -> Result<TrainOutcome, GanError> {
    config.validate()?;
    bundle.validate()?;

    let mut seen = bundle.split.seen.clone();
    seen.sort_unstable();
    let class_index: BTreeMap<ClassId, usize> =
        seen.iter().enumerate().map(|(i, &c)| (c, i)).collect();

    let seen_set = bundle.split.seen_set();
    let (raw_x, labels) = bundle.rows_where(|c| seen_set.contains(&c));
    for &class in &seen {
        if !labels.contains(&class) {
            return Err(GanError::EmptyClass { class });
        }
    }

    let (scaler, constant_dims) = FeatureScaler::fit(&raw_x)?;
    let (scaled, _) = scaler.apply(&raw_x);
    let x_dim = scaled.cols();

    let encoded = encode_corpus(&bundle.documents, &seen, &default_stoplist())?;
    let zero_seen: Vec<ClassId> = encoded
        .zero_vector_classes
        .iter()
        .copied()
        .filter(|c| seen_set.contains(c))
        .collect();
    if !zero_seen.is_empty() {
        return Err(GanError::ZeroTextClasses { classes: zero_seen });
    }
    let text_dim = encoded.vocabulary.len();
    let text_rows: Vec<Vec<f64>> = seen.iter().map(|c| encoded.vectors[c].to_dense()).collect();

    let (pivots, missing) = compute_visual_pivots(&scaled, &labels, &seen);
    debug_assert!(missing.is_empty(), "empty classes were checked above");

    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut gen = GeneratorParams::init(text_dim, x_dim, config, &mut rng);
    let mut disc = DiscriminatorParams::init(x_dim, seen.len(), config, &mut rng);
    let mut gen_flat = gen.to_named();
    let mut disc_flat = disc.to_named();
    let mut adam_g = AdamState::new(config.adam(), &gen_flat);
    let mut adam_d = AdamState::new(config.adam(), &disc_flat);

    let m = config.batch_size;
    let train_disc = config.ablation != AblationMode::VpOnly;
    let mut history = Vec::with_capacity(config.max_loops);

    for step in 1..=config.max_loops {
        let start = Instant::now();

        let l_d = if train_disc {
            let mut total = 0.0;
            for _ in 0..config.n_d {
                let (real, _, class_idx, text) =
                    sample_minibatch(&mut rng, &scaled, &labels, &class_index, &text_rows, m);
                let z = sample_noise(&mut rng, m, config.z_dim);
                let fake = gen.forward(&text, &z)?;
                let eps: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();

                let mut graph = Graph::new();
                let dn = bind_discriminator(&mut graph, &disc);
                let real_node = graph.input(real);
                let fake_node = graph.input(fake);
                let loss = discriminator_loss(
                    &mut graph,
                    &dn,
                    real_node,
                    fake_node,
                    &class_idx,
                    &eps,
                    config.gp_coeff,
                )?;
                let value = ensure_finite(step, "L_D", graph.value(loss).scalar_value()?)?;
                let grads = graph.backward(loss, &dn.params())?;
                adam_d.step(&mut disc_flat, &grads)?;
                disc.write_back(&disc_flat);
                total += value;
            }
            total / config.n_d as f64
        } else {
            f64::NAN
        };

        let (_, class_ids, class_idx, text) =
            sample_minibatch(&mut rng, &scaled, &labels, &class_index, &text_rows, m);
        let z = sample_noise(&mut rng, m, config.z_dim);
        let mut graph = Graph::new();
        let gn = bind_generator(&mut graph, &gen);
        let text_node = graph.input(text);
        let z_node = graph.input(z);
        let fake = generator_forward_graph(&mut graph, &gn, text_node, z_node)?;

        let (l_g, l_e, objective) = match config.ablation {
            AblationMode::Full => {
                let dn = bind_discriminator(&mut graph, &disc);
                let (scores, logits) = discriminator_forward_graph(&mut graph, &dn, fake)?;
                let l_g = generator_loss(&mut graph, scores, logits, &class_idx)?;
                let l_e = vp_loss(&mut graph, fake, &class_ids, &pivots)?;
                let weighted = graph.scale(l_e, config.lambda_p);
                let objective = graph.add(l_g, weighted)?;
                (
                    ensure_finite(step, "L_G", graph.value(l_g).scalar_value()?)?,
                    ensure_finite(step, "L_e", graph.value(l_e).scalar_value()?)?,
                    objective,
                )
            }
            AblationMode::GanOnly => {
                let dn = bind_discriminator(&mut graph, &disc);
                let (scores, logits) = discriminator_forward_graph(&mut graph, &dn, fake)?;
                let l_g = generator_loss(&mut graph, scores, logits, &class_idx)?;
                (
                    ensure_finite(step, "L_G", graph.value(l_g).scalar_value()?)?,
                    f64::NAN,
                    l_g,
                )
            }
            AblationMode::VpOnly => {
                let l_e = vp_loss(&mut graph, fake, &class_ids, &pivots)?;
                (
                    f64::NAN,
                    ensure_finite(step, "L_e", graph.value(l_e).scalar_value()?)?,
                    l_e,
                )
            }
        };
        let grads = graph.backward(objective, &gn.params())?;
        adam_g.step(&mut gen_flat, &grads)?;
        gen.write_back(&gen_flat);

        let record = LossRecord {
            step,
            l_d,
            l_g,
            l_e,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        };
        on_record(&record);
        history.push(record);
    }

    let model = GanModel {
        config: config.clone(),
        x_dim,
        text_dim,
        seen_classes: seen,
        scaler,
        vocab_hash: encoded.vocabulary.content_hash(),
        generator: gen,
        discriminator: disc,
    };
    Ok(TrainOutcome {
        model,
        history,
        d_updates: adam_d.step_count(),
        g_updates: adam_g.step_count(),
        constant_dims,
    })
}

/// Generate `n` feature vectors (in the scaler's normalized space) for one
/// text description, drawing noise from a dedicated seeded stream.
pub fn synthesize_features(
    model: &GanModel,
    text: &TfIdfVector,
    n: usize,
    seed: u64,
) -> Result<Tensor, GanError> {
    if n == 0 {
        return Err(GanError::EmptyBatch("synthesize_features"));
    }
    if text.dimension() != model.text_dim {
        return Err(GanError::DimensionMismatch {
            context: "synthesize_features text",
            expected: model.text_dim,
            found: text.dimension(),
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let z = sample_noise(&mut rng, n, model.config.z_dim);
    let dense = text.to_dense();
    let mut rows = Vec::with_capacity(n * dense.len());
    for _ in 0..n {
        rows.extend_from_slice(&dense);
    }
    let text_mat = Tensor::matrix(n, dense.len(), rows).expect("counted");
    model.generator.forward(&text_mat, &z)
}
