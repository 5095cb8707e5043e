//! Network parameters and forward passes for both players.
//!
//! Parameters live in plain structs; each training step binds them into a
//! fresh graph as input nodes, so the same tensors serve value-level
//! inference and differentiable training without duplication.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, GraphError, NodeId, Tensor};
use crate::gan::{GanError, TrainConfig, LEAKY_SLOPE};

/// One dense layer: weights `in x out`, bias `1 x out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub w: Tensor,
    pub b: Tensor,
}

impl Dense {
    /// Uniform initialization in [-s, s] with s = sqrt(6 / (fan_in +
    /// fan_out)); biases start at zero.
    pub fn init(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Dense {
        let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let w: Vec<f64> = (0..fan_in * fan_out)
            .map(|_| rng.random_range(-s..s))
            .collect();
        Dense {
            w: Tensor::matrix(fan_in, fan_out, w).expect("counted exactly"),
            b: Tensor::matrix(1, fan_out, vec![0.0; fan_out]).expect("counted exactly"),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn output_dim(&self) -> usize {
        self.w.cols()
    }
}

/// Node ids of one bound dense layer.
#[derive(Debug, Clone, Copy)]
pub struct DenseNodes {
    pub w: NodeId,
    pub b: NodeId,
}

fn bind_dense(g: &mut Graph, layer: &Dense) -> DenseNodes {
    DenseNodes {
        w: g.input(layer.w.clone()),
        b: g.input(layer.b.clone()),
    }
}

/// Generator parameters: an optional linear text-reduction layer, a hidden
/// layer with a leaky rectifier, and a Tanh output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    /// `None` replaces the reduction with the identity (the "w/o FC"
    /// ablation); the raw text vector then feeds the hidden layer directly.
    pub fc_text: Option<Dense>,
    pub fc_hidden: Dense,
    pub fc_out: Dense,
    /// Width of the noise part of the hidden input. Stored because in
    /// identity-text mode the text/noise split of `fc_hidden` is not
    /// recoverable from shapes alone.
    pub z_dim: usize,
}

impl GeneratorParams {
    pub fn init(text_dim: usize, x_dim: usize, config: &TrainConfig, rng: &mut impl Rng) -> Self {
        let (fc_text, reduced) = if config.use_text_fc {
            (Some(Dense::init(text_dim, config.d_text, rng)), config.d_text)
        } else {
            (None, text_dim)
        };
        GeneratorParams {
            fc_text,
            fc_hidden: Dense::init(reduced + config.z_dim, config.h_g, rng),
            fc_out: Dense::init(config.h_g, x_dim, rng),
            z_dim: config.z_dim,
        }
    }

    pub fn text_dim(&self) -> usize {
        match &self.fc_text {
            Some(layer) => layer.input_dim(),
            None => self.fc_hidden.input_dim() - self.z_dim,
        }
    }

    pub fn x_dim(&self) -> usize {
        self.fc_out.output_dim()
    }

    /// Flat parameter list in the fixed order used by the optimizer.
    pub fn to_named(&self) -> Vec<(String, Tensor)> {
        let mut named = Vec::new();
        if let Some(fc_text) = &self.fc_text {
            named.push(("gen.fc_text.w".to_string(), fc_text.w.clone()));
            named.push(("gen.fc_text.b".to_string(), fc_text.b.clone()));
        }
        named.push(("gen.fc_hidden.w".to_string(), self.fc_hidden.w.clone()));
        named.push(("gen.fc_hidden.b".to_string(), self.fc_hidden.b.clone()));
        named.push(("gen.fc_out.w".to_string(), self.fc_out.w.clone()));
        named.push(("gen.fc_out.b".to_string(), self.fc_out.b.clone()));
        named
    }

    /// Overwrite the parameters from a flat list produced by [`to_named`].
    pub fn write_back(&mut self, named: &[(String, Tensor)]) {
        let mut it = named.iter();
        let mut next = |expected: &str| {
            let (name, tensor) = it.next().expect("parameter list too short");
            assert_eq!(name, expected, "parameter order drifted");
            tensor.clone()
        };
        if let Some(fc_text) = &mut self.fc_text {
            fc_text.w = next("gen.fc_text.w");
            fc_text.b = next("gen.fc_text.b");
        }
        self.fc_hidden.w = next("gen.fc_hidden.w");
        self.fc_hidden.b = next("gen.fc_hidden.b");
        self.fc_out.w = next("gen.fc_out.w");
        self.fc_out.b = next("gen.fc_out.b");
        assert!(it.next().is_none(), "parameter list too long");
    }

    /// Deterministic value-level forward pass for a batch: `text` is
    /// `m x text_dim`, `z` is `m x z_dim`, output is `m x x_dim` in (-1, 1).
    pub fn forward(&self, text: &Tensor, z: &Tensor) -> Result<Tensor, GanError> {
        if text.cols() != self.text_dim() {
            return Err(GanError::DimensionMismatch {
                context: "generator text input",
                expected: self.text_dim(),
                found: text.cols(),
            });
        }
        if z.cols() != self.z_dim {
            return Err(GanError::DimensionMismatch {
                context: "generator noise input",
                expected: self.z_dim,
                found: z.cols(),
            });
        }
        if text.rows() != z.rows() {
            return Err(GanError::BatchMismatch {
                context: "generator noise input",
                expected: text.rows(),
                found: z.rows(),
            });
        }
        let mut g = Graph::new();
        let nodes = bind_generator(&mut g, self);
        let text_node = g.input(text.clone());
        let z_node = g.input(z.clone());
        let out = generator_forward_graph(&mut g, &nodes, text_node, z_node)?;
        Ok(g.value(out).clone())
    }
}

/// Node ids of a bound generator.
#[derive(Debug, Clone)]
pub struct GeneratorNodes {
    pub fc_text: Option<DenseNodes>,
    pub fc_hidden: DenseNodes,
    pub fc_out: DenseNodes,
}

impl GeneratorNodes {
    /// Parameter nodes in [`GeneratorParams::to_named`] order.
    pub fn params(&self) -> Vec<NodeId> {
        let mut ids = Vec::new();
        if let Some(fc_text) = &self.fc_text {
            ids.push(fc_text.w);
            ids.push(fc_text.b);
        }
        for layer in [&self.fc_hidden, &self.fc_out] {
            ids.push(layer.w);
            ids.push(layer.b);
        }
        ids
    }
}

/// Insert every generator parameter as a graph input.
pub fn bind_generator(g: &mut Graph, params: &GeneratorParams) -> GeneratorNodes {
    GeneratorNodes {
        fc_text: params.fc_text.as_ref().map(|layer| bind_dense(g, layer)),
        fc_hidden: bind_dense(g, &params.fc_hidden),
        fc_out: bind_dense(g, &params.fc_out),
    }
}

/// Differentiable generator forward pass.
pub fn generator_forward_graph(
    g: &mut Graph,
    nodes: &GeneratorNodes,
    text: NodeId,
    z: NodeId,
) -> Result<NodeId, GraphError> {
    let reduced = match nodes.fc_text {
        Some(fc_text) => g.affine(text, fc_text.w, fc_text.b)?,
        None => text,
    };
    let joined = g.concat_cols(reduced, z)?;
    let pre = g.affine(joined, nodes.fc_hidden.w, nodes.fc_hidden.b)?;
    let hidden = g.leaky_relu(pre, LEAKY_SLOPE);
    let out = g.affine(hidden, nodes.fc_out.w, nodes.fc_out.b)?;
    Ok(g.tanh(out))
}

/// Discriminator parameters: a shared rectified layer feeding a scalar
/// realness head and a seen-class logit head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorParams {
    pub fc_shared: Dense,
    pub head_real: Dense,
    pub head_cls: Dense,
}

impl DiscriminatorParams {
    pub fn init(x_dim: usize, class_count: usize, config: &TrainConfig, rng: &mut impl Rng) -> Self {
        DiscriminatorParams {
            fc_shared: Dense::init(x_dim, config.h_d, rng),
            head_real: Dense::init(config.h_d, 1, rng),
            head_cls: Dense::init(config.h_d, class_count, rng),
        }
    }

    pub fn x_dim(&self) -> usize {
        self.fc_shared.input_dim()
    }

    pub fn class_count(&self) -> usize {
        self.head_cls.output_dim()
    }

    pub fn to_named(&self) -> Vec<(String, Tensor)> {
        vec![
            ("disc.fc_shared.w".to_string(), self.fc_shared.w.clone()),
            ("disc.fc_shared.b".to_string(), self.fc_shared.b.clone()),
            ("disc.head_real.w".to_string(), self.head_real.w.clone()),
            ("disc.head_real.b".to_string(), self.head_real.b.clone()),
            ("disc.head_cls.w".to_string(), self.head_cls.w.clone()),
            ("disc.head_cls.b".to_string(), self.head_cls.b.clone()),
        ]
    }

    pub fn write_back(&mut self, named: &[(String, Tensor)]) {
        let mut it = named.iter();
        let mut next = |expected: &str| {
            let (name, tensor) = it.next().expect("parameter list too short");
            assert_eq!(name, expected, "parameter order drifted");
            tensor.clone()
        };
        self.fc_shared.w = next("disc.fc_shared.w");
        self.fc_shared.b = next("disc.fc_shared.b");
        self.head_real.w = next("disc.head_real.w");
        self.head_real.b = next("disc.head_real.b");
        self.head_cls.w = next("disc.head_cls.w");
        self.head_cls.b = next("disc.head_cls.b");
        assert!(it.next().is_none(), "parameter list too long");
    }

    /// Value-level forward pass: returns (realness scores `m x 1`, class
    /// logits `m x C`).
    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, Tensor), GanError> {
        if x.cols() != self.x_dim() {
            return Err(GanError::DimensionMismatch {
                context: "discriminator input",
                expected: self.x_dim(),
                found: x.cols(),
            });
        }
        let mut g = Graph::new();
        let nodes = bind_discriminator(&mut g, self);
        let x_node = g.input(x.clone());
        let (score, logits) = discriminator_forward_graph(&mut g, &nodes, x_node)?;
        Ok((g.value(score).clone(), g.value(logits).clone()))
    }
}

/// Node ids of a bound discriminator.
#[derive(Debug, Clone, Copy)]
pub struct DiscriminatorNodes {
    pub fc_shared: DenseNodes,
    pub head_real: DenseNodes,
    pub head_cls: DenseNodes,
}

impl DiscriminatorNodes {
    /// Parameter nodes in [`DiscriminatorParams::to_named`] order.
    pub fn params(&self) -> Vec<NodeId> {
        vec![
            self.fc_shared.w,
            self.fc_shared.b,
            self.head_real.w,
            self.head_real.b,
            self.head_cls.w,
            self.head_cls.b,
        ]
    }
}

/// Insert every discriminator parameter as a graph input.
pub fn bind_discriminator(g: &mut Graph, params: &DiscriminatorParams) -> DiscriminatorNodes {
    DiscriminatorNodes {
        fc_shared: bind_dense(g, &params.fc_shared),
        head_real: bind_dense(g, &params.head_real),
        head_cls: bind_dense(g, &params.head_cls),
    }
}

/// Differentiable discriminator forward pass.
pub fn discriminator_forward_graph(
    g: &mut Graph,
    nodes: &DiscriminatorNodes,
    x: NodeId,
) -> Result<(NodeId, NodeId), GraphError> {
    let pre = g.affine(x, nodes.fc_shared.w, nodes.fc_shared.b)?;
    let hidden = g.relu(pre);
    let score = g.affine(hidden, nodes.head_real.w, nodes.head_real.b)?;
    let logits = g.affine(hidden, nodes.head_cls.w, nodes.head_cls.b)?;
    Ok((score, logits))
}
