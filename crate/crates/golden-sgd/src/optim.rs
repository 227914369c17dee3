//! SGD with momentum and Adam, stepping over named parameter tensors.
//!
//! The SGD update is
//!
//! ```text
//! Δw(t) = −η·g + α·Δw(t−1),    w ← w + Δw(t)
//! ```
//!
//! with the velocity Δw(−1) = 0, so the first step is momentum-free.
//! [`make_theoretical_sgd`] fills in the derived constants η = (1−α)² and
//! α = √2·φ. Adam follows the usual first/second-moment update with bias
//! correction; the grid's momentum axis maps onto β₁ and β₂ stays at 0.999.

use crate::bayes;
use crate::nn::checkpoint::{CheckpointEntry, CheckpointError};
use crate::nn::Tensor;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OptimError {
    #[error("non-finite gradient in parameter `{param}`")]
    NonFiniteGradient { param: String },
    #[error("optimizer state mismatch: {0}")]
    StateMismatch(String),
}

/// Default β₂ for every Adam run.
pub const ADAM_BETA2: f64 = 0.999;
/// Default ε for every Adam run.
pub const ADAM_EPSILON: f64 = 1e-8;

/// Per-parameter velocity buffers plus the two SGD hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdState {
    pub eta: f64,
    pub alpha: f64,
    velocity: Vec<Vec<f64>>,
}

impl SgdState {
    pub fn new(eta: f64, alpha: f64, params: &[(String, &Tensor)]) -> SgdState {
        assert!(eta > 0.0, "learning rate must be positive");
        assert!((0.0..1.0).contains(&alpha), "momentum must lie in [0,1)");
        SgdState {
            eta,
            alpha,
            velocity: params.iter().map(|(_, t)| vec![0.0; t.numel()]).collect(),
        }
    }

    pub fn velocity(&self) -> &[Vec<f64>] {
        &self.velocity
    }

    /// Serialize hyperparameters and velocities as checkpoint entries.
    pub fn to_entries(&self, names: &[String]) -> Vec<CheckpointEntry> {
        assert_eq!(names.len(), self.velocity.len());
        let mut out = vec![
            CheckpointEntry::new("sgd.eta", &[1], vec![self.eta]),
            CheckpointEntry::new("sgd.alpha", &[1], vec![self.alpha]),
        ];
        for (name, v) in names.iter().zip(&self.velocity) {
            out.push(CheckpointEntry::new(
                format!("sgd.velocity.{name}"),
                &[v.len()],
                v.clone(),
            ));
        }
        out
    }

    pub fn from_entries(entries: &[CheckpointEntry]) -> Result<SgdState, CheckpointError> {
        let scalar = |name: &str| -> Result<f64, CheckpointError> {
            entries
                .iter()
                .find(|e| e.name == name)
                .and_then(|e| e.values.first().copied())
                .ok_or_else(|| CheckpointError::Format(format!("missing entry `{name}`")))
        };
        let velocity = entries
            .iter()
            .filter(|e| e.name.starts_with("sgd.velocity."))
            .map(|e| e.values.clone())
            .collect();
        Ok(SgdState {
            eta: scalar("sgd.eta")?,
            alpha: scalar("sgd.alpha")?,
            velocity,
        })
    }
}

/// SGD with the theoretically derived hyperparameters:
/// η = (1 − √2·φ)² ≈ 0.0158679 and α = √2·φ ≈ 0.8740320.
pub fn make_theoretical_sgd(params: &[(String, &Tensor)]) -> SgdState {
    SgdState::new(bayes::learning_eta(), bayes::momentum_alpha(), params)
}

/// One SGD-with-momentum step over all parameters. Gradients are validated
/// before any update, so a fault leaves parameters untouched.
pub fn sgd_step(
    params: &mut [(String, &mut Tensor)],
    state: &mut SgdState,
) -> Result<(), OptimError> {
    check_state_layout(params, &state.velocity, "velocity")?;
    check_finite(params)?;
    for ((_, tensor), vel) in params.iter_mut().zip(state.velocity.iter_mut()) {
        let (data, grad) = tensor.data_and_grad_mut();
        for ((w, &g), v) in data.iter_mut().zip(grad.iter()).zip(vel.iter_mut()) {
            let delta = -state.eta * g + state.alpha * *v;
            *w += delta;
            *v = delta;
        }
    }
    Ok(())
}

/// First/second-moment buffers plus Adam hyperparameters and step count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub eta: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(eta: f64, beta1: f64, params: &[(String, &Tensor)]) -> AdamState {
        Self::with_all(eta, beta1, ADAM_BETA2, ADAM_EPSILON, params)
    }

    pub fn with_all(
        eta: f64,
        beta1: f64,
        beta2: f64,
        epsilon: f64,
        params: &[(String, &Tensor)],
    ) -> AdamState {
        assert!(eta > 0.0, "learning rate must be positive");
        assert!((0.0..1.0).contains(&beta1), "beta1 must lie in [0,1)");
        assert!((0.0..1.0).contains(&beta2), "beta2 must lie in [0,1)");
        assert!(epsilon > 0.0, "epsilon must be positive");
        let zeros: Vec<Vec<f64>> = params.iter().map(|(_, t)| vec![0.0; t.numel()]).collect();
        AdamState {
            eta,
            beta1,
            beta2,
            epsilon,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn to_entries(&self, names: &[String]) -> Vec<CheckpointEntry> {
        assert_eq!(names.len(), self.m.len());
        let mut out = vec![
            CheckpointEntry::new("adam.eta", &[1], vec![self.eta]),
            CheckpointEntry::new("adam.beta1", &[1], vec![self.beta1]),
            CheckpointEntry::new("adam.beta2", &[1], vec![self.beta2]),
            CheckpointEntry::new("adam.epsilon", &[1], vec![self.epsilon]),
            CheckpointEntry::new("adam.t", &[1], vec![self.t as f64]),
        ];
        for (name, m) in names.iter().zip(&self.m) {
            out.push(CheckpointEntry::new(
                format!("adam.m.{name}"),
                &[m.len()],
                m.clone(),
            ));
        }
        for (name, v) in names.iter().zip(&self.v) {
            out.push(CheckpointEntry::new(
                format!("adam.v.{name}"),
                &[v.len()],
                v.clone(),
            ));
        }
        out
    }

    pub fn from_entries(entries: &[CheckpointEntry]) -> Result<AdamState, CheckpointError> {
        let scalar = |name: &str| -> Result<f64, CheckpointError> {
            entries
                .iter()
                .find(|e| e.name == name)
                .and_then(|e| e.values.first().copied())
                .ok_or_else(|| CheckpointError::Format(format!("missing entry `{name}`")))
        };
        let collect = |prefix: &str| -> Vec<Vec<f64>> {
            entries
                .iter()
                .filter(|e| e.name.starts_with(prefix))
                .map(|e| e.values.clone())
                .collect()
        };
        Ok(AdamState {
            eta: scalar("adam.eta")?,
            beta1: scalar("adam.beta1")?,
            beta2: scalar("adam.beta2")?,
            epsilon: scalar("adam.epsilon")?,
            t: scalar("adam.t")? as u64,
            m: collect("adam.m."),
            v: collect("adam.v."),
        })
    }
}

/// One Adam step with bias correction over all parameters.
pub fn adam_step(
    params: &mut [(String, &mut Tensor)],
    state: &mut AdamState,
) -> Result<(), OptimError> {
    check_state_layout(params, &state.m, "moment")?;
    check_finite(params)?;
    state.t += 1;
    let bc1 = 1.0 - state.beta1.powi(state.t as i32);
    let bc2 = 1.0 - state.beta2.powi(state.t as i32);
    for (i, (_, tensor)) in params.iter_mut().enumerate() {
        let (data, grad) = tensor.data_and_grad_mut();
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for (((w, &g), m), v) in data
            .iter_mut()
            .zip(grad.iter())
            .zip(m.iter_mut())
            .zip(v.iter_mut())
        {
            *m = state.beta1 * *m + (1.0 - state.beta1) * g;
            *v = state.beta2 * *v + (1.0 - state.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *w -= state.eta * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}

fn check_state_layout(
    params: &[(String, &mut Tensor)],
    buffers: &[Vec<f64>],
    what: &str,
) -> Result<(), OptimError> {
    if params.len() != buffers.len() {
        return Err(OptimError::StateMismatch(format!(
            "{} {what} buffers for {} parameters",
            buffers.len(),
            params.len()
        )));
    }
    for ((name, t), b) in params.iter().zip(buffers) {
        if t.numel() != b.len() {
            return Err(OptimError::StateMismatch(format!(
                "{what} buffer for `{name}` holds {} values, parameter has {}",
                b.len(),
                t.numel()
            )));
        }
    }
    Ok(())
}

fn check_finite(params: &[(String, &mut Tensor)]) -> Result<(), OptimError> {
    for (name, t) in params {
        if !t.grad_all_finite() {
            return Err(OptimError::NonFiniteGradient {
                param: name.clone(),
            });
        }
    }
    Ok(())
}
