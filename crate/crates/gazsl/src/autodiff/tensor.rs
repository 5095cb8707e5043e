//! Dense row-major f64 tensor. Rank 1 and rank 2 are the only shapes the
//! graph ops produce, but the container itself is rank-agnostic.

use serde::{Deserialize, Deserializer, Serialize};

use super::GraphError;

/// Immutable dense array of `f64` values with an explicit shape.
///
/// Tensors are plain value types: graph nodes own one and never mutate it
/// after construction, which is what makes re-evaluation of a graph pure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl<'de> Deserialize<'de> for Tensor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            shape: Vec<usize>,
            values: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Tensor::new(raw.shape, raw.values).map_err(serde::de::Error::custom)
    }
}

impl Tensor {
    /// Build a tensor, checking that the value count matches the shape. The
    /// product is computed with overflow checks so hostile shapes from
    /// deserialized input cannot wrap around to a plausible count.
    pub fn new(shape: Vec<usize>, values: Vec<f64>) -> Result<Self, GraphError> {
        let expected = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d));
        if expected != Some(values.len()) {
            return Err(GraphError::ShapeValueMismatch {
                shape,
                values: values.len(),
            });
        }
        Ok(Self { shape, values })
    }

    /// Single-element tensor with shape `[1]`.
    pub fn scalar(value: f64) -> Self {
        Self {
            shape: vec![1],
            values: vec![value],
        }
    }

    /// Rank-1 tensor from a slice.
    pub fn vector(values: &[f64]) -> Self {
        Self {
            shape: vec![values.len()],
            values: values.to_vec(),
        }
    }

    /// Rank-2 tensor from a flat row-major buffer.
    pub fn matrix(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, GraphError> {
        Self::new(vec![rows, cols], values)
    }

    /// Rank-2 tensor of zeros.
    pub fn zeros(shape: &[usize]) -> Self {
        let n: usize = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            values: vec![0.0; n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Total number of elements.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True when the tensor holds exactly one value, whatever the rank.
    pub fn is_scalar(&self) -> bool {
        self.values.len() == 1
    }

    /// The single value of a scalar tensor.
    pub fn scalar_value(&self) -> Result<f64, GraphError> {
        if self.is_scalar() {
            Ok(self.values[0])
        } else {
            Err(GraphError::NotScalar {
                shape: self.shape.clone(),
            })
        }
    }

    /// Row count / column count for rank-2 tensors; rank-1 counts as one row.
    pub fn rows(&self) -> usize {
        match self.shape.len() {
            2 => self.shape[0],
            _ => 1,
        }
    }

    pub fn cols(&self) -> usize {
        match self.shape.len() {
            2 => self.shape[1],
            1 => self.shape[0],
            _ => self.values.len(),
        }
    }

    /// Borrow row `r` of a rank-2 tensor (or the whole rank-1 tensor).
    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.values[r * c..(r + 1) * c]
    }

    /// True when every element is finite.
    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_mismatch_is_rejected() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::new(vec![2, 3], vec![0.0; 6]).is_ok());
    }

    #[test]
    fn row_access() {
        let t = Tensor::matrix(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(t.row(1), &[4.0, 5.0, 6.0]);
        assert_eq!(t.rows(), 2);
        assert_eq!(t.cols(), 3);
    }

    #[test]
    fn scalar_value() {
        assert_eq!(Tensor::scalar(4.5).scalar_value().unwrap(), 4.5);
        assert!(Tensor::vector(&[1.0, 2.0]).scalar_value().is_err());
    }
}
