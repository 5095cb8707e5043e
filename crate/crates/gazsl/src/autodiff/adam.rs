//! Adam optimizer over named parameter tensors.

use super::tensor::Tensor;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdamError {
    #[error("non-finite gradient for parameter '{param}'")]
    NonFiniteGradient { param: String },
    #[error("gradient shape {got:?} does not match parameter '{param}' shape {expected:?}")]
    GradientShapeMismatch {
        param: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("unknown parameter '{param}'")]
    UnknownParameter { param: String },
}

/// Adam hyperparameters. The defaults are the ones the training loop uses:
/// a low beta1 of 0.5 stabilizes adversarial updates.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            alpha: 0.001,
            beta1: 0.5,
            beta2: 0.9,
            epsilon: 1e-8,
        }
    }
}

struct Slot {
    name: String,
    m: Vec<f64>,
    v: Vec<f64>,
}

/// First/second moment buffers plus a shared step counter, one slot per
/// named parameter.
pub struct AdamState {
    config: AdamConfig,
    slots: Vec<Slot>,
    step: u64,
}

impl AdamState {
    /// Allocate zeroed moment buffers for the given `(name, tensor)` pairs.
    pub fn new(config: AdamConfig, params: &[(String, Tensor)]) -> Self {
        let slots = params
            .iter()
            .map(|(name, t)| Slot {
                name: name.clone(),
                m: vec![0.0; t.len()],
                v: vec![0.0; t.len()],
            })
            .collect();
        Self {
            config,
            slots,
            step: 0,
        }
    }

    /// Number of updates applied so far.
    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Apply one bias-corrected Adam update to every parameter in place.
    /// `grads` must be ordered like the parameter list used at construction.
    pub fn step(
        &mut self,
        params: &mut [(String, Tensor)],
        grads: &[Tensor],
    ) -> Result<(), AdamError> {
        assert_eq!(params.len(), self.slots.len(), "parameter set changed size");
        assert_eq!(grads.len(), self.slots.len(), "one gradient per parameter");
        for ((name, tensor), grad) in params.iter().zip(grads) {
            let slot = self
                .slots
                .iter()
                .find(|s| &s.name == name)
                .ok_or_else(|| AdamError::UnknownParameter { param: name.clone() })?;
            let _ = slot;
            if grad.shape() != tensor.shape() {
                return Err(AdamError::GradientShapeMismatch {
                    param: name.clone(),
                    expected: tensor.shape().to_vec(),
                    got: grad.shape().to_vec(),
                });
            }
            if !grad.all_finite() {
                return Err(AdamError::NonFiniteGradient { param: name.clone() });
            }
        }

        self.step += 1;
        let t = self.step as f64;
        let c = self.config;
        let bias1 = 1.0 - c.beta1.powf(t);
        let bias2 = 1.0 - c.beta2.powf(t);

        for (slot, ((_, tensor), grad)) in self.slots.iter_mut().zip(params.iter_mut().zip(grads)) {
            let mut values = tensor.values().to_vec();
            for (i, (&g, x)) in grad.values().iter().zip(values.iter_mut()).enumerate() {
                slot.m[i] = c.beta1 * slot.m[i] + (1.0 - c.beta1) * g;
                slot.v[i] = c.beta2 * slot.v[i] + (1.0 - c.beta2) * g * g;
                let m_hat = slot.m[i] / bias1;
                let v_hat = slot.v[i] / bias2;
                *x -= c.alpha * m_hat / (v_hat.sqrt() + c.epsilon);
            }
            *tensor = Tensor::new(tensor.shape().to_vec(), values).expect("shape unchanged");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_alpha_for_unit_gradient() {
        // Bias correction makes m_hat = v_hat = 1 on step one, so the update
        // magnitude is alpha regardless of the betas (up to epsilon).
        let mut params = vec![("w".to_string(), Tensor::scalar(1.0))];
        let mut state = AdamState::new(AdamConfig::default(), &params);
        state.step(&mut params, &[Tensor::scalar(1.0)]).unwrap();
        let moved = 1.0 - params[0].1.values()[0];
        assert!((moved - 0.001).abs() < 1e-6, "moved {moved}");
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn non_finite_gradient_names_the_parameter() {
        let mut params = vec![
            ("gen.fc_out.w".to_string(), Tensor::scalar(0.0)),
            ("gen.fc_out.b".to_string(), Tensor::scalar(0.0)),
        ];
        let mut state = AdamState::new(AdamConfig::default(), &params);
        let err = state
            .step(
                &mut params,
                &[Tensor::scalar(0.0), Tensor::scalar(f64::NAN)],
            )
            .unwrap_err();
        assert!(err.to_string().contains("gen.fc_out.b"), "{err}");
        // The failed step must not count or mutate anything.
        assert_eq!(state.step_count(), 0);
        assert_eq!(params[0].1.values(), &[0.0]);
    }

    #[test]
    fn descends_a_quadratic() {
        // Minimize (x - 3)^2 by feeding the analytic gradient.
        let mut params = vec![("x".to_string(), Tensor::scalar(0.0))];
        let mut state = AdamState::new(
            AdamConfig {
                alpha: 0.05,
                ..AdamConfig::default()
            },
            &params,
        );
        for _ in 0..500 {
            let x = params[0].1.values()[0];
            let grad = Tensor::scalar(2.0 * (x - 3.0));
            state.step(&mut params, &[grad]).unwrap();
        }
        let x = params[0].1.values()[0];
        assert!((x - 3.0).abs() < 0.05, "converged to {x}");
    }
}
