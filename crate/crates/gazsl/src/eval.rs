//! Recognition, generalized recognition, and retrieval metrics.
//!
//! Everything here is a pure function over immutable inputs. Queries are
//! classified by Euclidean distance against a [`SynthBank`] of generated
//! features, either to the nearest single vector (instance mode) or to the
//! nearest per-class mean (pivot mode). The generalized setting sweeps a
//! calibration value that penalizes seen-class scores and integrates the
//! resulting seen/unseen accuracy trade-off curve.
//!
//! All inputs are expected in the model's normalized feature space; apply the
//! persisted scaler before calling into this module.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::Tensor;
use crate::gan::{synthesize_features, GanError, GanModel};
use crate::text::TfIdfVector;
use crate::ClassId;

/// Bank size used when nothing else is requested: sixty generated vectors
/// per class, mirroring typical per-class counts in the fine-grained
/// benchmarks this pipeline imitates.
pub const DEFAULT_SYNTH_PER_CLASS: usize = 60;

/// Number of calibration values in the default sweep before saturation
/// points are appended.
pub const DEFAULT_GRID_POINTS: usize = 201;

/// Grid size for the brute-force dense sweep used to cross-check the
/// default grid's area.
pub const DENSE_GRID_POINTS: usize = 10_001;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Gan(#[from] GanError),
    #[error("synthesized bank has no classes")]
    EmptyBank,
    #[error("bank class {class} has no vectors")]
    EmptyBankClass { class: ClassId },
    #[error("{context}: expected dimension {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("predictions and ground truth differ in length ({predictions} vs {truth})")]
    LengthMismatch { predictions: usize, truth: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("labels cover {labels} rows but the feature matrix has {rows}")]
    LabelCountMismatch { labels: usize, rows: usize },
    #[error("no pivot for class {class} in the synthesized bank")]
    MissingClass { class: ClassId },
    #[error("no text vector for class {class}")]
    MissingText { class: ClassId },
    #[error("gallery has no instances of class {class}")]
    MissingGalleryClass { class: ClassId },
    #[error("retrieval ratio must lie in (0, 1], got {0}")]
    InvalidRatio(f64),
    #[error(
        "documents encode to a different vocabulary than the model was trained on \
         (hash {found} vs {expected}); evaluate against the training corpus"
    )]
    VocabularyMismatch { expected: String, found: String },
    #[error(transparent)]
    Text(#[from] crate::text::TextError),
}

/// How a query is matched against the bank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NnMode {
    /// Nearest single synthesized vector wins.
    #[default]
    Instance,
    /// Nearest per-class mean wins. Required for the generalized curve and
    /// for retrieval.
    Pivot,
}

impl fmt::Display for NnMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NnMode::Instance => "instance",
            NnMode::Pivot => "pivot",
        })
    }
}

impl FromStr for NnMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "instance" => Ok(NnMode::Instance),
            "pivot" => Ok(NnMode::Pivot),
            other => Err(format!(
                "unknown nearest-neighbor mode {other:?} (expected \"instance\" or \"pivot\")"
            )),
        }
    }
}

/// Generated feature vectors grouped by class, plus each class's pivot (the
/// arithmetic mean of its vectors). Construction guarantees at least one
/// class, at least one vector per class, and a consistent dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthBank {
    dim: usize,
    vectors: BTreeMap<ClassId, Vec<Vec<f64>>>,
    pivots: BTreeMap<ClassId, Vec<f64>>,
}

impl SynthBank {
    pub fn new(per_class: BTreeMap<ClassId, Tensor>) -> Result<Self, EvalError> {
        let mut dim = None;
        let mut vectors = BTreeMap::new();
        let mut pivots = BTreeMap::new();
        for (class, tensor) in per_class {
            if tensor.rows() == 0 {
                return Err(EvalError::EmptyBankClass { class });
            }
            let cols = tensor.cols();
            match dim {
                None => dim = Some(cols),
                Some(d) if d != cols => {
                    return Err(EvalError::DimensionMismatch {
                        context: "bank class vectors",
                        expected: d,
                        found: cols,
                    })
                }
                Some(_) => {}
            }
            let mut pivot = vec![0.0; cols];
            let mut rows = Vec::with_capacity(tensor.rows());
            for r in 0..tensor.rows() {
                let row = tensor.row(r);
                for (p, v) in pivot.iter_mut().zip(row) {
                    *p += v;
                }
                rows.push(row.to_vec());
            }
            let n = rows.len() as f64;
            for p in &mut pivot {
                *p /= n;
            }
            vectors.insert(class, rows);
            pivots.insert(class, pivot);
        }
        let dim = dim.ok_or(EvalError::EmptyBank)?;
        Ok(SynthBank {
            dim,
            vectors,
            pivots,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> Vec<ClassId> {
        self.pivots.keys().copied().collect()
    }

    pub fn pivot(&self, class: ClassId) -> Option<&[f64]> {
        self.pivots.get(&class).map(Vec::as_slice)
    }

    pub fn pivots(&self) -> &BTreeMap<ClassId, Vec<f64>> {
        &self.pivots
    }

    pub fn vectors(&self) -> &BTreeMap<ClassId, Vec<Vec<f64>>> {
        &self.vectors
    }
}

/// Each class's noise stream is keyed off the base seed so banks are
/// reproducible regardless of which subset of classes is synthesized.
fn class_seed(seed: u64, class: ClassId) -> u64 {
    seed ^ (u64::from(class) + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Build a bank by generating `per_class` vectors for every class in
/// `classes` from its text vector.
pub fn synthesize_bank(
    model: &GanModel,
    texts: &BTreeMap<ClassId, TfIdfVector>,
    classes: &[ClassId],
    per_class: usize,
    seed: u64,
) -> Result<SynthBank, EvalError> {
    if classes.is_empty() {
        return Err(EvalError::EmptyBank);
    }
    let mut per_class_features = BTreeMap::new();
    for &class in classes {
        let text = texts
            .get(&class)
            .ok_or(EvalError::MissingText { class })?;
        let features = synthesize_features(model, text, per_class, class_seed(seed, class))?;
        per_class_features.insert(class, features);
    }
    SynthBank::new(per_class_features)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Classify one query. Ties go to the lowest class id; the bank's map
/// iterates in ascending class order, so keeping the first strict minimum
/// implements that rule.
pub fn classify_nn(query: &[f64], bank: &SynthBank, mode: NnMode) -> Result<ClassId, EvalError> {
    if query.len() != bank.dim {
        return Err(EvalError::DimensionMismatch {
            context: "query",
            expected: bank.dim,
            found: query.len(),
        });
    }
    let mut best: Option<(f64, ClassId)> = None;
    match mode {
        NnMode::Instance => {
            for (&class, rows) in &bank.vectors {
                for row in rows {
                    let d = squared_distance(query, row);
                    if best.is_none_or(|(b, _)| d < b) {
                        best = Some((d, class));
                    }
                }
            }
        }
        NnMode::Pivot => {
            for (&class, pivot) in &bank.pivots {
                let d = squared_distance(query, pivot);
                if best.is_none_or(|(b, _)| d < b) {
                    best = Some((d, class));
                }
            }
        }
    }
    Ok(best.expect("bank construction guarantees at least one class").1)
}

/// Classify every row of `queries`.
pub fn classify_batch(
    queries: &Tensor,
    bank: &SynthBank,
    mode: NnMode,
) -> Result<Vec<ClassId>, EvalError> {
    (0..queries.rows())
        .map(|r| classify_nn(queries.row(r), bank, mode))
        .collect()
}

pub fn top1_accuracy(predictions: &[ClassId], truth: &[ClassId]) -> Result<f64, EvalError> {
    if predictions.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    if predictions.is_empty() {
        return Err(EvalError::Empty("top1_accuracy"));
    }
    let hits = predictions
        .iter()
        .zip(truth)
        .filter(|(p, t)| p == t)
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// One sweep position: the calibration value and the two accuracies it
/// produces when all queries are classified over the union of classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SucPoint {
    pub lambda: f64,
    pub seen_accuracy: f64,
    pub unseen_accuracy: f64,
}

/// Seen-unseen accuracy curve, ordered by ascending calibration value, with
/// the area under it (integrated over the seen-accuracy axis).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SUCCurve {
    pub points: Vec<SucPoint>,
    pub ausuc: f64,
}

/// Trapezoidal area under the (seen, unseen) accuracy points, sorted by the
/// seen axis. Duplicated points contribute zero-width trapezoids, so they
/// never change the result.
pub fn area_under_curve(points: &[SucPoint]) -> f64 {
    let mut sorted: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.seen_accuracy, p.unseen_accuracy))
        .collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut area = 0.0;
    for pair in sorted.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        area += (x1 - x0) * (y0 + y1) / 2.0;
    }
    area
}

/// Scores of every query against every bank class: negative Euclidean
/// distance, so larger is closer.
struct ScoreTable {
    /// Row per query, column per class in `classes` order.
    scores: Vec<Vec<f64>>,
    classes: Vec<ClassId>,
    seen_mask: Vec<bool>,
}

impl ScoreTable {
    fn build(
        queries: &Tensor,
        bank: &SynthBank,
        seen: &BTreeSet<ClassId>,
        context: &'static str,
    ) -> Result<ScoreTable, EvalError> {
        if queries.cols() != bank.dim {
            return Err(EvalError::DimensionMismatch {
                context,
                expected: bank.dim,
                found: queries.cols(),
            });
        }
        let classes: Vec<ClassId> = bank.pivots.keys().copied().collect();
        let seen_mask: Vec<bool> = classes.iter().map(|c| seen.contains(c)).collect();
        let scores = (0..queries.rows())
            .map(|r| {
                let q = queries.row(r);
                classes
                    .iter()
                    .map(|c| -squared_distance(q, &bank.pivots[c]).sqrt())
                    .collect()
            })
            .collect();
        Ok(ScoreTable {
            scores,
            classes,
            seen_mask,
        })
    }

    /// Predict with `lambda` subtracted from every seen-class score. Classes
    /// iterate in ascending id order and only strictly better scores replace
    /// the incumbent, so ties resolve to the lowest class id.
    fn predict(&self, row: usize, lambda: f64) -> ClassId {
        let mut best = f64::NEG_INFINITY;
        let mut best_class = self.classes[0];
        for (i, &class) in self.classes.iter().enumerate() {
            let mut s = self.scores[row][i];
            if self.seen_mask[i] {
                s -= lambda;
            }
            if s > best {
                best = s;
                best_class = class;
            }
        }
        best_class
    }

    fn accuracy(&self, truth: &[ClassId], lambda: f64) -> f64 {
        let hits = (0..self.scores.len())
            .filter(|&r| self.predict(r, lambda) == truth[r])
            .count();
        hits as f64 / self.scores.len() as f64
    }

    fn score_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in &self.scores {
            for &s in row {
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        (lo, hi)
    }
}

fn validate_curve_inputs(
    seen_queries: &Tensor,
    seen_truth: &[ClassId],
    unseen_queries: &Tensor,
    unseen_truth: &[ClassId],
    bank: &SynthBank,
    seen_classes: &[ClassId],
) -> Result<BTreeSet<ClassId>, EvalError> {
    if seen_queries.rows() == 0 {
        return Err(EvalError::Empty("seen queries"));
    }
    if unseen_queries.rows() == 0 {
        return Err(EvalError::Empty("unseen queries"));
    }
    if seen_truth.len() != seen_queries.rows() {
        return Err(EvalError::LabelCountMismatch {
            labels: seen_truth.len(),
            rows: seen_queries.rows(),
        });
    }
    if unseen_truth.len() != unseen_queries.rows() {
        return Err(EvalError::LabelCountMismatch {
            labels: unseen_truth.len(),
            rows: unseen_queries.rows(),
        });
    }
    let seen: BTreeSet<ClassId> = seen_classes.iter().copied().collect();
    if seen.is_empty() {
        return Err(EvalError::Empty("seen class list"));
    }
    if bank.pivots.keys().all(|c| seen.contains(c)) {
        return Err(EvalError::Empty("unseen side of the bank"));
    }
    for &class in seen_truth.iter().chain(unseen_truth) {
        if !bank.pivots.contains_key(&class) {
            return Err(EvalError::MissingClass { class });
        }
    }
    Ok(seen)
}

/// Default calibration sweep: evenly spaced values spanning twice the
/// observed score range in both directions.
pub fn default_calibration_grid(
    seen_queries: &Tensor,
    unseen_queries: &Tensor,
    bank: &SynthBank,
) -> Result<Vec<f64>, EvalError> {
    calibration_grid(seen_queries, unseen_queries, bank, DEFAULT_GRID_POINTS)
}

/// Evenly spaced calibration values spanning [-2Δ, 2Δ] where Δ is the full
/// score range over both query sets. `points` must be at least 2.
pub fn calibration_grid(
    seen_queries: &Tensor,
    unseen_queries: &Tensor,
    bank: &SynthBank,
    points: usize,
) -> Result<Vec<f64>, EvalError> {
    if points < 2 {
        return Err(EvalError::Empty("calibration grid"));
    }
    let all: BTreeSet<ClassId> = bank.pivots.keys().copied().collect();
    let s = ScoreTable::build(seen_queries, bank, &all, "seen queries")?;
    let u = ScoreTable::build(unseen_queries, bank, &all, "unseen queries")?;
    let (lo_s, hi_s) = s.score_bounds();
    let (lo_u, hi_u) = u.score_bounds();
    let delta = hi_s.max(hi_u) - lo_s.min(lo_u);
    if delta <= 0.0 {
        return Ok(vec![0.0]);
    }
    Ok((0..points)
        .map(|i| -2.0 * delta + 4.0 * delta * i as f64 / (points - 1) as f64)
        .collect())
}

/// Re-encodes per-class documents against the model's training classes and
/// refuses to continue when the resulting vocabulary differs from the one
/// the model was trained on. All evaluation paths go through this guard so a
/// model is never silently fed vectors from a foreign vocabulary.
pub fn encode_for_model(
    model: &GanModel,
    documents: &BTreeMap<ClassId, String>,
) -> Result<crate::text::EncodedCorpus, EvalError> {
    let encoded = crate::text::encode_corpus(
        documents,
        &model.seen_classes,
        &crate::text::default_stoplist(),
    )?;
    let found = encoded.vocabulary.content_hash();
    if found != model.vocab_hash {
        return Err(EvalError::VocabularyMismatch {
            expected: model.vocab_hash.clone(),
            found,
        });
    }
    Ok(encoded)
}

/// Sweep the calibration value over `grid` (plus saturation values appended
/// at both ends so the curve reaches both axes), classifying every query
/// over the union of all bank classes.
pub fn gzsl_curve(
    seen_queries: &Tensor,
    seen_truth: &[ClassId],
    unseen_queries: &Tensor,
    unseen_truth: &[ClassId],
    bank: &SynthBank,
    seen_classes: &[ClassId],
    grid: &[f64],
) -> Result<SUCCurve, EvalError> {
    if grid.is_empty() {
        return Err(EvalError::Empty("calibration grid"));
    }
    let seen = validate_curve_inputs(
        seen_queries,
        seen_truth,
        unseen_queries,
        unseen_truth,
        bank,
        seen_classes,
    )?;
    let s_table = ScoreTable::build(seen_queries, bank, &seen, "seen queries")?;
    let u_table = ScoreTable::build(unseen_queries, bank, &seen, "unseen queries")?;

    // Beyond these values the comparison between any seen and any unseen
    // score is decided, so the accuracies stop moving and the curve has
    // reached both axis intercepts.
    let (s_lo, s_hi) = {
        let (a_lo, a_hi) = s_table.score_bounds();
        let (b_lo, b_hi) = u_table.score_bounds();
        (a_lo.min(b_lo), a_hi.max(b_hi))
    };
    let saturation = (s_hi - s_lo) + 1.0;
    let mut lambdas: Vec<f64> = grid.to_vec();
    lambdas.push(saturation);
    lambdas.push(-saturation);
    lambdas.sort_by(f64::total_cmp);

    let points: Vec<SucPoint> = lambdas
        .iter()
        .map(|&lambda| SucPoint {
            lambda,
            seen_accuracy: s_table.accuracy(seen_truth, lambda),
            unseen_accuracy: u_table.accuracy(unseen_truth, lambda),
        })
        .collect();
    let ausuc = area_under_curve(&points);
    Ok(SUCCurve { points, ausuc })
}

/// Two-column CSV of the curve for external plotting.
pub fn suc_curve_csv(curve: &SUCCurve) -> String {
    let mut out = String::from("seen_accuracy,unseen_accuracy\n");
    for p in &curve.points {
        out.push_str(&format!("{},{}\n", p.seen_accuracy, p.unseen_accuracy));
    }
    out
}

/// Number of items retrieved for a class with `n` gallery instances:
/// round-half-up of `ratio * n`, never less than one.
pub fn retrieval_count(ratio: f64, n: usize) -> usize {
    (((ratio * n as f64) + 0.5).floor() as usize).max(1)
}

/// Average precision over a ranked relevance list truncated to `k`:
/// precision at each relevant rank, averaged over the relevant items
/// actually retrieved. No relevant item in the top `k` gives zero.
pub fn average_precision(relevance: &[bool], k: usize) -> f64 {
    let mut hits = 0usize;
    let mut precision_sum = 0.0;
    for (i, &rel) in relevance.iter().take(k).enumerate() {
        if rel {
            hits += 1;
            precision_sum += hits as f64 / (i + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        precision_sum / hits as f64
    }
}

/// Mean average precision of retrieving each bank class's gallery instances
/// by distance to its pivot. Gallery rows are ranked by ascending distance
/// with ties broken by gallery index.
pub fn retrieval_map(
    bank: &SynthBank,
    gallery: &Tensor,
    labels: &[ClassId],
    ratio: f64,
) -> Result<f64, EvalError> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(EvalError::InvalidRatio(ratio));
    }
    if gallery.rows() == 0 {
        return Err(EvalError::Empty("gallery"));
    }
    if labels.len() != gallery.rows() {
        return Err(EvalError::LabelCountMismatch {
            labels: labels.len(),
            rows: gallery.rows(),
        });
    }
    if gallery.cols() != bank.dim {
        return Err(EvalError::DimensionMismatch {
            context: "gallery",
            expected: bank.dim,
            found: gallery.cols(),
        });
    }

    let mut class_counts: BTreeMap<ClassId, usize> = BTreeMap::new();
    for &label in labels {
        *class_counts.entry(label).or_default() += 1;
    }

    let mut ap_sum = 0.0;
    for (&class, pivot) in &bank.pivots {
        let n_c = *class_counts
            .get(&class)
            .ok_or(EvalError::MissingGalleryClass { class })?;
        let mut order: Vec<usize> = (0..gallery.rows()).collect();
        let distances: Vec<f64> = (0..gallery.rows())
            .map(|r| squared_distance(gallery.row(r), pivot))
            .collect();
        order.sort_by(|&a, &b| distances[a].total_cmp(&distances[b]).then(a.cmp(&b)));
        let relevance: Vec<bool> = order.iter().map(|&r| labels[r] == class).collect();
        ap_sum += average_precision(&relevance, retrieval_count(ratio, n_c));
    }
    Ok(ap_sum / bank.pivots.len() as f64)
}

/// Summary of an evaluation run, serialized as the JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Per-split top-1 accuracy, keyed by a split label such as "unseen".
    pub top1: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ausuc: Option<f64>,
    /// Mean average precision keyed by the retrieval ratio, e.g. "0.25".
    pub map_at: BTreeMap<String, f64>,
    pub config_digest: String,
}
