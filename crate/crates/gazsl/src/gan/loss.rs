//! Loss constructions for both players.
//!
//! Everything here builds graph nodes, so each loss is differentiable to the
//! order the training step needs. The gradient penalty in particular embeds
//! the critic's input gradient as graph nodes; backpropagating the penalty
//! through the critic parameters is then a second differentiation of the
//! same graph, which the engine supports natively.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, NodeId, Tensor};
use crate::gan::net::{discriminator_forward_graph, DiscriminatorNodes};
use crate::gan::GanError;
use crate::ClassId;

/// Per-class centroids of real features, the regression targets of the
/// visual-pivot regularizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisualPivots {
    pub x_dim: usize,
    pub pivots: BTreeMap<ClassId, Vec<f64>>,
}

impl VisualPivots {
    pub fn get(&self, class: ClassId) -> Option<&[f64]> {
        self.pivots.get(&class).map(Vec::as_slice)
    }
}

/// Arithmetic mean of the feature rows of each class in `expected`. Classes
/// with no instances are omitted from the pivots and returned as the second
/// element for the caller to report.
pub fn compute_visual_pivots(
    features: &Tensor,
    labels: &[ClassId],
    expected: &[ClassId],
) -> (VisualPivots, Vec<ClassId>) {
    assert_eq!(
        features.rows(),
        labels.len(),
        "labels must align with feature rows"
    );
    let x_dim = features.cols();
    let mut sums: BTreeMap<ClassId, (Vec<f64>, usize)> = BTreeMap::new();
    for (row, &class) in labels.iter().enumerate() {
        let (sum, count) = sums
            .entry(class)
            .or_insert_with(|| (vec![0.0; x_dim], 0));
        for (d, &x) in features.row(row).iter().enumerate() {
            sum[d] += x;
        }
        *count += 1;
    }
    let mut pivots = BTreeMap::new();
    let mut missing = Vec::new();
    for &class in expected {
        match sums.get(&class) {
            Some((sum, count)) => {
                let mean = sum.iter().map(|s| s / *count as f64).collect();
                pivots.insert(class, mean);
            }
            None => missing.push(class),
        }
    }
    (VisualPivots { x_dim, pivots }, missing)
}

/// Generator objective: negated mean critic score of the fake batch plus the
/// auxiliary classification loss on the conditioning labels.
pub fn generator_loss(
    g: &mut Graph,
    fake_scores: NodeId,
    fake_logits: NodeId,
    labels: &[usize],
) -> Result<NodeId, GanError> {
    if labels.is_empty() {
        return Err(GanError::EmptyBatch("generator_loss"));
    }
    let mean_score = g.mean_all(fake_scores);
    let wass = g.neg(mean_score);
    let cls = g.softmax_cross_entropy(fake_logits, labels)?;
    Ok(g.add(wass, cls)?)
}

/// Discriminator objective: Wasserstein critic difference, gradient penalty
/// on per-pair interpolates, and the averaged real/fake classification loss.
///
/// `real` and `fake` are `m x x_dim` batch nodes (the fake batch is expected
/// to be a detached constant during discriminator updates); `eps` holds the
/// per-pair interpolation weights in [0, 1], injectable so tests can pin
/// them.
pub fn discriminator_loss(
    g: &mut Graph,
    disc: &DiscriminatorNodes,
    real: NodeId,
    fake: NodeId,
    labels: &[usize],
    eps: &[f64],
    gp_coeff: f64,
) -> Result<NodeId, GanError> {
    let m = g.value(real).rows();
    if m == 0 {
        return Err(GanError::EmptyBatch("discriminator_loss"));
    }
    if g.value(fake).rows() != m {
        return Err(GanError::BatchMismatch {
            context: "discriminator_loss fake batch",
            expected: m,
            found: g.value(fake).rows(),
        });
    }
    if labels.len() != m || eps.len() != m {
        return Err(GanError::BatchMismatch {
            context: "discriminator_loss labels/eps",
            expected: m,
            found: if labels.len() != m { labels.len() } else { eps.len() },
        });
    }
    let x_dim = g.value(real).cols();

    let (real_scores, real_logits) = discriminator_forward_graph(g, disc, real)?;
    let (fake_scores, fake_logits) = discriminator_forward_graph(g, disc, fake)?;
    let mean_fake = g.mean_all(fake_scores);
    let mean_real = g.mean_all(real_scores);
    let wass = g.sub(mean_fake, mean_real)?;

    // Interpolates: x_hat_i = eps_i * real_i + (1 - eps_i) * fake_i.
    let eps_col = g.input(Tensor::matrix(m, 1, eps.to_vec()).expect("len checked"));
    let eps_mat = g.broadcast_cols(eps_col, x_dim)?;
    let one_minus = {
        let neg = g.neg(eps_mat);
        g.add_scalar(neg, 1.0)
    };
    let real_part = g.mul(eps_mat, real)?;
    let fake_part = g.mul(one_minus, fake)?;
    let x_hat = g.add(real_part, fake_part)?;

    // The critic's gradient at the interpolates, as differentiable nodes.
    // Rows of the batch are independent, so the adjoint of x_hat under the
    // summed scores is exactly the per-row input gradient.
    let (hat_scores, _) = discriminator_forward_graph(g, disc, x_hat)?;
    let score_sum = g.sum_all(hat_scores);
    let grad = g.input_gradient(score_sum, x_hat)?;
    let norms = g.row_l2_norm(grad)?;
    let shifted = g.add_scalar(norms, -1.0);
    let squared = g.mul(shifted, shifted)?;
    let penalty_mean = g.mean_all(squared);
    let penalty = g.scale(penalty_mean, gp_coeff);

    let ce_real = g.softmax_cross_entropy(real_logits, labels)?;
    let ce_fake = g.softmax_cross_entropy(fake_logits, labels)?;
    let ce_sum = g.add(ce_real, ce_fake)?;
    let cls = g.scale(ce_sum, 0.5);

    let partial = g.add(wass, penalty)?;
    Ok(g.add(partial, cls)?)
}

/// Visual-pivot regularizer: mean over the classes present in the batch of
/// the squared distance between the class's generated mean and its pivot.
///
/// `fake` is the `m x x_dim` generated batch and `labels` its conditioning
/// classes; classes absent from the batch contribute nothing.
pub fn vp_loss(
    g: &mut Graph,
    fake: NodeId,
    labels: &[ClassId],
    pivots: &VisualPivots,
) -> Result<NodeId, GanError> {
    let m = g.value(fake).rows();
    if m == 0 || labels.is_empty() {
        return Err(GanError::EmptyBatch("vp_loss"));
    }
    if labels.len() != m {
        return Err(GanError::BatchMismatch {
            context: "vp_loss labels",
            expected: m,
            found: labels.len(),
        });
    }
    let x_dim = g.value(fake).cols();
    let mut members: BTreeMap<ClassId, Vec<usize>> = BTreeMap::new();
    for (row, &class) in labels.iter().enumerate() {
        members.entry(class).or_default().push(row);
    }
    let classes: Vec<ClassId> = members.keys().copied().collect();
    let c_present = classes.len();

    // One averaging-mask row per present class turns the grouped means into
    // a single matmul, keeping the whole term inside the graph.
    let mut mask = vec![0.0; c_present * m];
    let mut pivot_rows = Vec::with_capacity(c_present * x_dim);
    for (i, class) in classes.iter().enumerate() {
        let rows = &members[class];
        for &row in rows {
            mask[i * m + row] = 1.0 / rows.len() as f64;
        }
        let pivot = pivots
            .get(*class)
            .ok_or(GanError::MissingPivot { class: *class })?;
        if pivot.len() != x_dim {
            return Err(GanError::DimensionMismatch {
                context: "vp_loss pivot",
                expected: x_dim,
                found: pivot.len(),
            });
        }
        pivot_rows.extend_from_slice(pivot);
    }
    let mask_node = g.input(Tensor::matrix(c_present, m, mask).expect("counted"));
    let pivot_node = g.input(Tensor::matrix(c_present, x_dim, pivot_rows).expect("counted"));
    let means = g.matmul(mask_node, fake)?;
    let diff = g.sub(means, pivot_node)?;
    let total = g.squared_l2_norm(diff)?;
    Ok(g.scale(total, 1.0 / c_present as f64))
}
