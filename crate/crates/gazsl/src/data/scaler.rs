//! Affine feature scaling into the generator's output range.
//!
//! The generator ends in Tanh, so real features must live strictly inside
//! (-1, 1) for the critic comparison to be fair. The scaler maps each
//! dimension of the seen-class features onto [-0.95, 0.95]; the margin keeps
//! targets away from the saturated tail where gradients vanish.

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::data::DataError;

/// Half-width of the target interval.
const LIMIT: f64 = 0.95;

/// Per-dimension affine map `scaled = scale * x + offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    offset: Vec<f64>,
    scale: Vec<f64>,
}

impl FeatureScaler {
    /// Fits the map so each dimension's observed [min, max] lands on
    /// [-0.95, 0.95]. Returns the indices of constant dimensions, which get
    /// scale 1 and are centered to 0; callers should surface those as a
    /// warning since a constant dimension carries no signal.
    pub fn fit(features: &Tensor) -> Result<(FeatureScaler, Vec<usize>), DataError> {
        let (n, dim) = (features.rows(), features.cols());
        if n == 0 || dim == 0 {
            return Err(DataError::EmptyFeatures);
        }
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for r in 0..n {
            for (d, &x) in features.row(r).iter().enumerate() {
                lo[d] = lo[d].min(x);
                hi[d] = hi[d].max(x);
            }
        }
        let mut offset = vec![0.0; dim];
        let mut scale = vec![0.0; dim];
        let mut constant = Vec::new();
        for d in 0..dim {
            if hi[d] > lo[d] {
                scale[d] = 2.0 * LIMIT / (hi[d] - lo[d]);
                offset[d] = -LIMIT - scale[d] * lo[d];
            } else {
                scale[d] = 1.0;
                offset[d] = -lo[d];
                constant.push(d);
            }
        }
        Ok((FeatureScaler { offset, scale }, constant))
    }

    pub fn dimension(&self) -> usize {
        self.scale.len()
    }

    /// Applies the map, clamping anything that falls outside [-0.95, 0.95].
    /// Returns the number of clamped entries; nonzero counts are expected for
    /// unseen-class features, which the scaler was never fit on.
    pub fn apply(&self, features: &Tensor) -> (Tensor, usize) {
        assert_eq!(features.cols(), self.dimension(), "scaler dimension mismatch");
        let mut out = Vec::with_capacity(features.len());
        let mut clamped = 0;
        for r in 0..features.rows() {
            for (d, &x) in features.row(r).iter().enumerate() {
                let y = self.scale[d] * x + self.offset[d];
                if y < -LIMIT || y > LIMIT {
                    clamped += 1;
                    out.push(y.clamp(-LIMIT, LIMIT));
                } else {
                    out.push(y);
                }
            }
        }
        (
            Tensor::new(vec![features.rows(), features.cols()], out).expect("shape preserved"),
            clamped,
        )
    }

    /// Maps scaled features back to the original units.
    pub fn invert(&self, scaled: &Tensor) -> Tensor {
        assert_eq!(scaled.cols(), self.dimension(), "scaler dimension mismatch");
        let mut out = Vec::with_capacity(scaled.len());
        for r in 0..scaled.rows() {
            for (d, &y) in scaled.row(r).iter().enumerate() {
                out.push((y - self.offset[d]) / self.scale[d]);
            }
        }
        Tensor::new(vec![scaled.rows(), scaled.cols()], out).expect("shape preserved")
    }
}
