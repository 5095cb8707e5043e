//! Append-only computation graph with reverse-mode differentiation.
//!
//! The graph is define-by-run: each builder method validates shapes, computes
//! the forward value eagerly and appends a node. Node ids are handed out in
//! construction order, so the vector of nodes is always a valid topological
//! order and the backward sweep is a single reverse scan that visits each
//! node once.
//!
//! The key property is that `backward` does not compute raw buffers: every
//! vector-Jacobian product is itself built out of graph nodes. The adjoint of
//! any node is therefore an ordinary node, which is what `input_gradient`
//! exposes, and differentiating an expression that contains such an adjoint
//! (double backprop, as needed by a gradient penalty) requires no extra
//! machinery.

use super::tensor::Tensor;
use thiserror::Error;

/// Handle to a node in a [`Graph`]. Ids are only meaningful within the graph
/// that issued them.
pub type NodeId = usize;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("shape {shape:?} does not hold {values} values")]
    ShapeValueMismatch { shape: Vec<usize>, values: usize },
    #[error("{op}: operand shapes {lhs:?} and {rhs:?} are incompatible")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("{op}: operand shape {shape:?} is invalid ({expected})")]
    InvalidOperand {
        op: &'static str,
        shape: Vec<usize>,
        expected: &'static str,
    },
    #[error("{op}: index {index} out of range for bound {bound}")]
    IndexOutOfRange {
        op: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("tensor of shape {shape:?} is not a scalar")]
    NotScalar { shape: Vec<usize> },
    #[error("backward requires a scalar output, got shape {shape:?}")]
    NonScalarOutput { shape: Vec<usize> },
    #[error("node {wrt} is not an ancestor of output node {output}")]
    NotAnAncestor { output: NodeId, wrt: NodeId },
    #[error("{op}: batch is empty")]
    EmptyBatch { op: &'static str },
}

/// Every operation the graph can record. Forward values are computed
/// eagerly at construction, so variants carry only the attributes their
/// backward pass consults.
#[derive(Debug, Clone)]
enum Op {
    Input,
    Add,
    Sub,
    Mul,
    Neg,
    Scale(f64),
    AddScalar,
    MatMul,
    Transpose,
    SumAll,
    SumRows,
    SumCols,
    BroadcastRows,
    BroadcastCols,
    BroadcastAll,
    Tanh,
    LeakyRelu(f64),
    /// Pointwise slope of leaky ReLU (1 above zero, `slope` elsewhere).
    /// Treated as locally constant: it propagates no gradient, which encodes
    /// the almost-everywhere second derivative of the activation.
    LeakyMask,
    /// 1/x where x > 0, else 0. The guard makes the L2-norm gradient at the
    /// origin well defined (zero) instead of singular.
    RecipOrZero,
    RowL2Norm,
    SoftmaxRows,
    LogSumExpRows,
    GatherCols(Vec<usize>),
    ScatterCols(Vec<usize>),
    ConcatCols,
    SliceCols { start: usize },
    PadCols { start: usize },
}

#[derive(Debug)]
struct Node {
    op: Op,
    inputs: Vec<NodeId>,
    value: Tensor,
}

/// Computation graph. One graph per training step is the intended usage:
/// build, differentiate, read gradients, drop.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of nodes currently recorded.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Forward value of a node.
    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id].value
    }

    fn push(&mut self, op: Op, inputs: Vec<NodeId>, value: Tensor) -> NodeId {
        self.nodes.push(Node { op, inputs, value });
        self.nodes.len() - 1
    }

    /// Leaf node holding externally supplied data (an input, parameter or
    /// constant; the graph does not distinguish).
    pub fn input(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Input, vec![], value)
    }

    /// Leaf scalar.
    pub fn scalar(&mut self, value: f64) -> NodeId {
        self.input(Tensor::scalar(value))
    }

    fn require_same_shape(
        &self,
        op: &'static str,
        a: NodeId,
        b: NodeId,
    ) -> Result<(), GraphError> {
        let (sa, sb) = (self.value(a).shape(), self.value(b).shape());
        if sa != sb {
            return Err(GraphError::ShapeMismatch {
                op,
                lhs: sa.to_vec(),
                rhs: sb.to_vec(),
            });
        }
        Ok(())
    }

    fn require_rank2(&self, op: &'static str, a: NodeId) -> Result<(usize, usize), GraphError> {
        let s = self.value(a).shape();
        if s.len() != 2 {
            return Err(GraphError::InvalidOperand {
                op,
                shape: s.to_vec(),
                expected: "rank-2 tensor",
            });
        }
        Ok((s[0], s[1]))
    }

    // --- elementwise -----------------------------------------------------

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        self.require_same_shape("add", a, b)?;
        let v = zip_map(self.value(a), self.value(b), |x, y| x + y);
        Ok(self.push(Op::Add, vec![a, b], v))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        self.require_same_shape("sub", a, b)?;
        let v = zip_map(self.value(a), self.value(b), |x, y| x - y);
        Ok(self.push(Op::Sub, vec![a, b], v))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        self.require_same_shape("mul", a, b)?;
        let v = zip_map(self.value(a), self.value(b), |x, y| x * y);
        Ok(self.push(Op::Mul, vec![a, b], v))
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        let v = map(self.value(a), |x| -x);
        self.push(Op::Neg, vec![a], v)
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = map(self.value(a), |x| c * x);
        self.push(Op::Scale(c), vec![a], v)
    }

    pub fn add_scalar(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = map(self.value(a), |x| x + c);
        self.push(Op::AddScalar, vec![a], v)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let v = map(self.value(a), f64::tanh);
        self.push(Op::Tanh, vec![a], v)
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        self.leaky_relu(a, 0.0)
    }

    pub fn leaky_relu(&mut self, a: NodeId, slope: f64) -> NodeId {
        let v = map(self.value(a), |x| if x > 0.0 { x } else { slope * x });
        self.push(Op::LeakyRelu(slope), vec![a], v)
    }

    fn leaky_mask(&mut self, a: NodeId, slope: f64) -> NodeId {
        let v = map(self.value(a), |x| if x > 0.0 { 1.0 } else { slope });
        self.push(Op::LeakyMask, vec![a], v)
    }

    /// Guarded reciprocal: `1/x` for positive `x`, `0` otherwise.
    pub fn recip_or_zero(&mut self, a: NodeId) -> NodeId {
        let v = map(self.value(a), |x| if x > 0.0 { 1.0 / x } else { 0.0 });
        self.push(Op::RecipOrZero, vec![a], v)
    }

    // --- linear algebra ---------------------------------------------------

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        let (m, ka) = self.require_rank2("matmul", a)?;
        let (kb, n) = self.require_rank2("matmul", b)?;
        if ka != kb {
            return Err(GraphError::ShapeMismatch {
                op: "matmul",
                lhs: self.value(a).shape().to_vec(),
                rhs: self.value(b).shape().to_vec(),
            });
        }
        let av = self.value(a).values();
        let bv = self.value(b).values();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for k in 0..ka {
                let aik = av[i * ka + k];
                if aik == 0.0 {
                    continue;
                }
                let brow = &bv[k * n..(k + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for (o, &bj) in orow.iter_mut().zip(brow) {
                    *o += aik * bj;
                }
            }
        }
        let v = Tensor::matrix(m, n, out).expect("matmul output shape");
        Ok(self.push(Op::MatMul, vec![a, b], v))
    }

    pub fn transpose(&mut self, a: NodeId) -> Result<NodeId, GraphError> {
        let (m, n) = self.require_rank2("transpose", a)?;
        let av = self.value(a).values();
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[j * m + i] = av[i * n + j];
            }
        }
        let v = Tensor::matrix(n, m, out).expect("transpose output shape");
        Ok(self.push(Op::Transpose, vec![a], v))
    }

    // --- reductions and broadcasts ---------------------------------------

    /// Sum of all elements, yielding a `[1]` scalar.
    pub fn sum_all(&mut self, a: NodeId) -> NodeId {
        let s: f64 = self.value(a).values().iter().sum();
        self.push(Op::SumAll, vec![a], Tensor::scalar(s))
    }

    /// Column sums: `[n, c]` -> `[1, c]`.
    pub fn sum_rows(&mut self, a: NodeId) -> Result<NodeId, GraphError> {
        let (n, c) = self.require_rank2("sum_rows", a)?;
        let av = self.value(a).values();
        let mut out = vec![0.0; c];
        for i in 0..n {
            for j in 0..c {
                out[j] += av[i * c + j];
            }
        }
        let v = Tensor::matrix(1, c, out).expect("sum_rows output shape");
        Ok(self.push(Op::SumRows, vec![a], v))
    }

    /// Row sums: `[n, c]` -> `[n, 1]`.
    pub fn sum_cols(&mut self, a: NodeId) -> Result<NodeId, GraphError> {
        let (n, c) = self.require_rank2("sum_cols", a)?;
        let av = self.value(a).values();
        let out: Vec<f64> = (0..n).map(|i| av[i * c..(i + 1) * c].iter().sum()).collect();
        let v = Tensor::matrix(n, 1, out).expect("sum_cols output shape");
        Ok(self.push(Op::SumCols, vec![a], v))
    }

    /// Repeat a `[1, c]` row `n` times into `[n, c]`.
    pub fn broadcast_rows(&mut self, a: NodeId, n: usize) -> Result<NodeId, GraphError> {
        let (r, c) = self.require_rank2("broadcast_rows", a)?;
        if r != 1 {
            return Err(GraphError::InvalidOperand {
                op: "broadcast_rows",
                shape: self.value(a).shape().to_vec(),
                expected: "single-row tensor [1, c]",
            });
        }
        let row = self.value(a).values().to_vec();
        let mut out = Vec::with_capacity(n * c);
        for _ in 0..n {
            out.extend_from_slice(&row);
        }
        let v = Tensor::matrix(n, c, out).expect("broadcast_rows output shape");
        Ok(self.push(Op::BroadcastRows, vec![a], v))
    }

    /// Repeat a `[n, 1]` column `c` times into `[n, c]`.
    pub fn broadcast_cols(&mut self, a: NodeId, c: usize) -> Result<NodeId, GraphError> {
        let (n, w) = self.require_rank2("broadcast_cols", a)?;
        if w != 1 {
            return Err(GraphError::InvalidOperand {
                op: "broadcast_cols",
                shape: self.value(a).shape().to_vec(),
                expected: "single-column tensor [n, 1]",
            });
        }
        let av = self.value(a).values();
        let mut out = Vec::with_capacity(n * c);
        for i in 0..n {
            out.extend(std::iter::repeat(av[i]).take(c));
        }
        let v = Tensor::matrix(n, c, out).expect("broadcast_cols output shape");
        Ok(self.push(Op::BroadcastCols, vec![a], v))
    }

    /// Fill an arbitrary shape with a scalar's value.
    pub fn broadcast_all(&mut self, a: NodeId, shape: &[usize]) -> Result<NodeId, GraphError> {
        let x = self.value(a).scalar_value()?;
        let n: usize = shape.iter().product();
        let v = Tensor::new(shape.to_vec(), vec![x; n])?;
        Ok(self.push(Op::BroadcastAll, vec![a], v))
    }

    // --- rowwise structured ops -------------------------------------------

    /// Euclidean norm of each row: `[n, c]` -> `[n, 1]`.
    pub fn row_l2_norm(&mut self, a: NodeId) -> Result<NodeId, GraphError> {
        let (n, c) = self.require_rank2("row_l2_norm", a)?;
        let av = self.value(a).values();
        let out: Vec<f64> = (0..n)
            .map(|i| av[i * c..(i + 1) * c].iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        let v = Tensor::matrix(n, 1, out).expect("row_l2_norm output shape");
        Ok(self.push(Op::RowL2Norm, vec![a], v))
    }

    /// Numerically stable rowwise softmax.
    pub fn softmax_rows(&mut self, a: NodeId) -> Result<NodeId, GraphError> {
        let (n, c) = self.require_rank2("softmax_rows", a)?;
        let av = self.value(a).values();
        let mut out = vec![0.0; n * c];
        for i in 0..n {
            let row = &av[i * c..(i + 1) * c];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let orow = &mut out[i * c..(i + 1) * c];
            let mut sum = 0.0;
            for (o, &x) in orow.iter_mut().zip(row) {
                *o = (x - max).exp();
                sum += *o;
            }
            for o in orow.iter_mut() {
                *o /= sum;
            }
        }
        let v = Tensor::matrix(n, c, out).expect("softmax output shape");
        Ok(self.push(Op::SoftmaxRows, vec![a], v))
    }

    /// Numerically stable rowwise log-sum-exp: `[n, c]` -> `[n, 1]`.
    pub fn logsumexp_rows(&mut self, a: NodeId) -> Result<NodeId, GraphError> {
        let (n, c) = self.require_rank2("logsumexp_rows", a)?;
        let av = self.value(a).values();
        let out: Vec<f64> = (0..n)
            .map(|i| {
                let row = &av[i * c..(i + 1) * c];
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                max + row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
            })
            .collect();
        let v = Tensor::matrix(n, 1, out).expect("logsumexp output shape");
        Ok(self.push(Op::LogSumExpRows, vec![a], v))
    }

    /// Pick one column per row: `out[i] = a[i, indices[i]]`, `[n, c]` -> `[n, 1]`.
    pub fn gather_cols(&mut self, a: NodeId, indices: &[usize]) -> Result<NodeId, GraphError> {
        let (n, c) = self.require_rank2("gather_cols", a)?;
        if indices.len() != n {
            return Err(GraphError::IndexOutOfRange {
                op: "gather_cols",
                index: indices.len(),
                bound: n,
            });
        }
        if let Some(&bad) = indices.iter().find(|&&ix| ix >= c) {
            return Err(GraphError::IndexOutOfRange {
                op: "gather_cols",
                index: bad,
                bound: c,
            });
        }
        let av = self.value(a).values();
        let out: Vec<f64> = indices.iter().enumerate().map(|(i, &ix)| av[i * c + ix]).collect();
        let v = Tensor::matrix(n, 1, out).expect("gather_cols output shape");
        Ok(self.push(Op::GatherCols(indices.to_vec()), vec![a], v))
    }

    /// Inverse of `gather_cols`: place a `[n, 1]` column into a zero `[n, width]`
    /// matrix at per-row positions.
    pub fn scatter_cols(
        &mut self,
        a: NodeId,
        indices: &[usize],
        width: usize,
    ) -> Result<NodeId, GraphError> {
        let (n, w) = self.require_rank2("scatter_cols", a)?;
        if w != 1 || indices.len() != n {
            return Err(GraphError::InvalidOperand {
                op: "scatter_cols",
                shape: self.value(a).shape().to_vec(),
                expected: "single-column tensor [n, 1] with one index per row",
            });
        }
        if let Some(&bad) = indices.iter().find(|&&ix| ix >= width) {
            return Err(GraphError::IndexOutOfRange {
                op: "scatter_cols",
                index: bad,
                bound: width,
            });
        }
        let av = self.value(a).values();
        let mut out = vec![0.0; n * width];
        for (i, &ix) in indices.iter().enumerate() {
            out[i * width + ix] = av[i];
        }
        let v = Tensor::matrix(n, width, out).expect("scatter_cols output shape");
        Ok(self.push(Op::ScatterCols(indices.to_vec()), vec![a], v))
    }

    /// Concatenate two matrices along the feature axis.
    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        let (na, ca) = self.require_rank2("concat_cols", a)?;
        let (nb, cb) = self.require_rank2("concat_cols", b)?;
        if na != nb {
            return Err(GraphError::ShapeMismatch {
                op: "concat_cols",
                lhs: self.value(a).shape().to_vec(),
                rhs: self.value(b).shape().to_vec(),
            });
        }
        let av = self.value(a).values();
        let bv = self.value(b).values();
        let mut out = Vec::with_capacity(na * (ca + cb));
        for i in 0..na {
            out.extend_from_slice(&av[i * ca..(i + 1) * ca]);
            out.extend_from_slice(&bv[i * cb..(i + 1) * cb]);
        }
        let v = Tensor::matrix(na, ca + cb, out).expect("concat_cols output shape");
        Ok(self.push(Op::ConcatCols, vec![a, b], v))
    }

    /// Contiguous column slice: `[n, c]` -> `[n, len]` starting at `start`.
    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId, GraphError> {
        let (n, c) = self.require_rank2("slice_cols", a)?;
        if start + len > c {
            return Err(GraphError::IndexOutOfRange {
                op: "slice_cols",
                index: start + len,
                bound: c,
            });
        }
        let av = self.value(a).values();
        let mut out = Vec::with_capacity(n * len);
        for i in 0..n {
            out.extend_from_slice(&av[i * c + start..i * c + start + len]);
        }
        let v = Tensor::matrix(n, len, out).expect("slice_cols output shape");
        Ok(self.push(Op::SliceCols { start }, vec![a], v))
    }

    /// Inverse of `slice_cols`: embed `[n, len]` into a zero `[n, width]`
    /// matrix at column offset `start`.
    pub fn pad_cols(&mut self, a: NodeId, start: usize, width: usize) -> Result<NodeId, GraphError> {
        let (n, len) = self.require_rank2("pad_cols", a)?;
        if start + len > width {
            return Err(GraphError::IndexOutOfRange {
                op: "pad_cols",
                index: start + len,
                bound: width,
            });
        }
        let av = self.value(a).values();
        let mut out = vec![0.0; n * width];
        for i in 0..n {
            out[i * width + start..i * width + start + len]
                .copy_from_slice(&av[i * len..(i + 1) * len]);
        }
        let v = Tensor::matrix(n, width, out).expect("pad_cols output shape");
        Ok(self.push(Op::PadCols { start }, vec![a], v))
    }

    // --- composites --------------------------------------------------------

    /// Mean of all elements, as a scalar node.
    pub fn mean_all(&mut self, a: NodeId) -> NodeId {
        let n = self.value(a).len().max(1);
        let s = self.sum_all(a);
        self.scale(s, 1.0 / n as f64)
    }

    /// Column means: `[n, c]` -> `[1, c]`.
    pub fn mean_rows(&mut self, a: NodeId) -> Result<NodeId, GraphError> {
        let (n, _) = self.require_rank2("mean_rows", a)?;
        if n == 0 {
            return Err(GraphError::EmptyBatch { op: "mean_rows" });
        }
        let s = self.sum_rows(a)?;
        Ok(self.scale(s, 1.0 / n as f64))
    }

    /// Squared Euclidean norm of all elements, as a scalar node.
    pub fn squared_l2_norm(&mut self, a: NodeId) -> Result<NodeId, GraphError> {
        let sq = self.mul(a, a)?;
        Ok(self.sum_all(sq))
    }

    /// Dense layer application: `x @ w + b` with the bias row broadcast over
    /// the batch.
    pub fn affine(&mut self, x: NodeId, w: NodeId, b: NodeId) -> Result<NodeId, GraphError> {
        let xw = self.matmul(x, w)?;
        let n = self.value(xw).rows();
        let bb = self.broadcast_rows(b, n)?;
        self.add(xw, bb)
    }

    /// Mean softmax cross-entropy over a batch of logit rows against integer
    /// targets. Stable for large logits via log-sum-exp.
    pub fn softmax_cross_entropy(
        &mut self,
        logits: NodeId,
        targets: &[usize],
    ) -> Result<NodeId, GraphError> {
        let (n, _) = self.require_rank2("softmax_cross_entropy", logits)?;
        if n == 0 || targets.is_empty() {
            return Err(GraphError::EmptyBatch {
                op: "softmax_cross_entropy",
            });
        }
        if targets.len() != n {
            return Err(GraphError::IndexOutOfRange {
                op: "softmax_cross_entropy",
                index: targets.len(),
                bound: n,
            });
        }
        let lse = self.logsumexp_rows(logits)?;
        let picked = self.gather_cols(logits, targets)?;
        let per_row = self.sub(lse, picked)?;
        Ok(self.mean_all(per_row))
    }

    // --- differentiation ---------------------------------------------------

    /// Node ids of all ancestors of `output` (inclusive).
    fn ancestors(&self, output: NodeId) -> Vec<bool> {
        let mut seen = vec![false; output + 1];
        let mut stack = vec![output];
        seen[output] = true;
        while let Some(id) = stack.pop() {
            for &input in &self.nodes[id].inputs {
                if !seen[input] {
                    seen[input] = true;
                    stack.push(input);
                }
            }
        }
        seen
    }

    /// Build adjoint nodes for every ancestor of a scalar `output`.
    /// Returns `adj[id] = Some(node)` where the node holds dOutput/dNode.
    fn adjoints(&mut self, output: NodeId) -> Result<Vec<Option<NodeId>>, GraphError> {
        let out_val = self.value(output);
        if !out_val.is_scalar() {
            return Err(GraphError::NonScalarOutput {
                shape: out_val.shape().to_vec(),
            });
        }
        let seed_shape = out_val.shape().to_vec();
        let reachable = self.ancestors(output);
        let mut adj: Vec<Option<NodeId>> = vec![None; output + 1];
        let ones: usize = seed_shape.iter().product();
        adj[output] = Some(self.input(Tensor::new(seed_shape, vec![1.0; ones])?));

        for id in (0..=output).rev() {
            if !reachable[id] {
                continue;
            }
            let Some(grad) = adj[id] else { continue };
            let op = self.nodes[id].op.clone();
            let inputs = self.nodes[id].inputs.clone();
            for (slot, contribution) in self.vjp(&op, &inputs, id, grad)? {
                let input_id = inputs[slot];
                adj[input_id] = Some(match adj[input_id] {
                    Some(existing) => self.add(existing, contribution)?,
                    None => contribution,
                });
            }
        }
        Ok(adj)
    }

    /// Vector-Jacobian products for one node, expressed as new graph nodes.
    /// Returns `(input_slot, contribution)` pairs; inputs that receive no
    /// gradient (masks) are simply absent.
    fn vjp(
        &mut self,
        op: &Op,
        inputs: &[NodeId],
        node: NodeId,
        grad: NodeId,
    ) -> Result<Vec<(usize, NodeId)>, GraphError> {
        let out = match op {
            Op::Input => vec![],
            Op::Add => vec![(0, grad), (1, grad)],
            Op::Sub => vec![(0, grad), (1, self.neg(grad))],
            Op::Mul => {
                let da = self.mul(grad, inputs[1])?;
                let db = self.mul(grad, inputs[0])?;
                vec![(0, da), (1, db)]
            }
            Op::Neg => vec![(0, self.neg(grad))],
            Op::Scale(c) => vec![(0, self.scale(grad, *c))],
            Op::AddScalar => vec![(0, grad)],
            Op::MatMul => {
                let bt = self.transpose(inputs[1])?;
                let da = self.matmul(grad, bt)?;
                let at = self.transpose(inputs[0])?;
                let db = self.matmul(at, grad)?;
                vec![(0, da), (1, db)]
            }
            Op::Transpose => vec![(0, self.transpose(grad)?)],
            Op::SumAll => {
                let shape = self.value(inputs[0]).shape().to_vec();
                vec![(0, self.broadcast_all(grad, &shape)?)]
            }
            Op::SumRows => {
                let n = self.value(inputs[0]).rows();
                vec![(0, self.broadcast_rows(grad, n)?)]
            }
            Op::SumCols => {
                let c = self.value(inputs[0]).cols();
                vec![(0, self.broadcast_cols(grad, c)?)]
            }
            Op::BroadcastRows => vec![(0, self.sum_rows(grad)?)],
            Op::BroadcastCols => vec![(0, self.sum_cols(grad)?)],
            Op::BroadcastAll => vec![(0, self.sum_all(grad))],
            Op::Tanh => {
                // d tanh = 1 - tanh^2, written via the already computed output
                // so double backprop differentiates through it.
                let y2 = self.mul(node, node)?;
                let neg = self.neg(y2);
                let one_minus = self.add_scalar(neg, 1.0);
                vec![(0, self.mul(grad, one_minus)?)]
            }
            Op::LeakyRelu(slope) => {
                let mask = self.leaky_mask(inputs[0], *slope);
                vec![(0, self.mul(grad, mask)?)]
            }
            Op::LeakyMask => vec![],
            Op::RecipOrZero => {
                // d(1/x) = -1/x^2; the guard keeps the derivative zero
                // wherever the forward value was clamped to zero.
                let r2 = self.mul(node, node)?;
                let m = self.mul(grad, r2)?;
                vec![(0, self.neg(m))]
            }
            Op::RowL2Norm => {
                // d||a_i|| / da_i = a_i / ||a_i||, zero where the norm is zero.
                let c = self.value(inputs[0]).cols();
                let inv = self.recip_or_zero(node);
                let scaled = self.mul(grad, inv)?;
                let wide = self.broadcast_cols(scaled, c)?;
                vec![(0, self.mul(wide, inputs[0])?)]
            }
            Op::SoftmaxRows => {
                // ds = s * (g - rowsum(g * s))
                let c = self.value(node).cols();
                let gs = self.mul(grad, node)?;
                let rowsum = self.sum_cols(gs)?;
                let wide = self.broadcast_cols(rowsum, c)?;
                let centered = self.sub(grad, wide)?;
                vec![(0, self.mul(node, centered)?)]
            }
            Op::LogSumExpRows => {
                let c = self.value(inputs[0]).cols();
                let soft = self.softmax_rows(inputs[0])?;
                let wide = self.broadcast_cols(grad, c)?;
                vec![(0, self.mul(wide, soft)?)]
            }
            Op::GatherCols(indices) => {
                let c = self.value(inputs[0]).cols();
                vec![(0, self.scatter_cols(grad, &indices.clone(), c)?)]
            }
            Op::ScatterCols(indices) => {
                vec![(0, self.gather_cols(grad, &indices.clone())?)]
            }
            Op::ConcatCols => {
                let ca = self.value(inputs[0]).cols();
                let cb = self.value(inputs[1]).cols();
                let da = self.slice_cols(grad, 0, ca)?;
                let db = self.slice_cols(grad, ca, cb)?;
                vec![(0, da), (1, db)]
            }
            Op::SliceCols { start } => {
                let c = self.value(inputs[0]).cols();
                vec![(0, self.pad_cols(grad, *start, c)?)]
            }
            Op::PadCols { start } => {
                let len = self.value(inputs[0]).cols();
                vec![(0, self.slice_cols(grad, *start, len)?)]
            }
        };
        Ok(out)
    }

    /// Reverse-mode gradients of a scalar `output` with respect to each node
    /// in `wrt`. Nodes the output does not depend on receive zero gradients.
    pub fn backward(&mut self, output: NodeId, wrt: &[NodeId]) -> Result<Vec<Tensor>, GraphError> {
        let adj = self.adjoints(output)?;
        Ok(wrt
            .iter()
            .map(|&id| match adj.get(id).copied().flatten() {
                Some(g) => self.value(g).clone(),
                None => Tensor::zeros(self.value(id).shape()),
            })
            .collect())
    }

    /// Gradient of a scalar `output` with respect to `wrt`, returned as a
    /// graph node so it can appear inside further expressions and be
    /// differentiated again (double backprop).
    ///
    /// Errors unless `wrt` is an ancestor of `output`. If the dependency is
    /// only through gradient-blocking masks the result is a zero node.
    pub fn input_gradient(&mut self, output: NodeId, wrt: NodeId) -> Result<NodeId, GraphError> {
        if wrt > output || !self.ancestors(output)[wrt] {
            return Err(GraphError::NotAnAncestor { output, wrt });
        }
        let adj = self.adjoints(output)?;
        Ok(match adj[wrt] {
            Some(g) => g,
            None => {
                let z = Tensor::zeros(self.value(wrt).shape());
                self.input(z)
            }
        })
    }
}

fn map(t: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor::new(t.shape().to_vec(), t.values().iter().map(|&x| f(x)).collect())
        .expect("map preserves shape")
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(&x, &y)| f(x, y))
        .collect();
    Tensor::new(a.shape().to_vec(), values).expect("zip_map preserves shape")
}
