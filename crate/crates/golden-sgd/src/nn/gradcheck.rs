//! Central-difference verification of analytic gradients.

use super::model::Model;
use super::layers::NnError;
use super::tensor::Tensor;
use crate::rng::Rng;

/// |a − n| / max(1, |a| + |n|).
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1.0_f64.max(analytic.abs() + numeric.abs())
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub params_checked: usize,
}

/// Compare the model's analytic gradients on one batch against central
/// finite differences of the evaluation-mode loss (dropout disabled, so the
/// objective is deterministic).
///
/// `sample_per_tensor` bounds how many entries of each parameter tensor are
/// probed; `None` checks every entry, which is only tractable for small
/// models. Sampled indices come from `rng`.
pub fn grad_check_model(
    model: &mut Model,
    x: &Tensor,
    labels: &[usize],
    epsilon: f64,
    sample_per_tensor: Option<usize>,
    rng: &mut Rng,
) -> Result<GradCheckReport, NnError> {
    let mut unused = Rng::new(0);
    model.loss_and_backward(x, labels, &mut unused, false)?;
    let analytic: Vec<Vec<f64>> = model
        .params()
        .iter()
        .map(|(_, t)| t.grad().to_vec())
        .collect();
    grad_check_against(model, x, labels, &analytic, epsilon, sample_per_tensor, rng)
}

/// Same numeric probe, but against caller-provided analytic gradients
/// (lets a test corrupt them to prove the detector fires).
pub fn grad_check_against(
    model: &mut Model,
    x: &Tensor,
    labels: &[usize],
    analytic: &[Vec<f64>],
    epsilon: f64,
    sample_per_tensor: Option<usize>,
    rng: &mut Rng,
) -> Result<GradCheckReport, NnError> {
    let n_tensors = model.params().len();
    assert_eq!(analytic.len(), n_tensors, "analytic gradient layout mismatch");
    let mut max_rel_err = 0.0f64;
    let mut params_checked = 0usize;
    for (ti, grads) in analytic.iter().enumerate() {
        let numel = model.params()[ti].1.numel();
        let indices: Vec<usize> = match sample_per_tensor {
            Some(k) if k < numel => rng.sample_indices(numel, k),
            _ => (0..numel).collect(),
        };
        for i in indices {
            let orig = model.params()[ti].1.data()[i];
            model.params_mut()[ti].1.data_mut()[i] = orig + epsilon;
            let plus = model.loss(x, labels)?;
            model.params_mut()[ti].1.data_mut()[i] = orig - epsilon;
            let minus = model.loss(x, labels)?;
            model.params_mut()[ti].1.data_mut()[i] = orig;
            let numeric = (plus - minus) / (2.0 * epsilon);
            max_rel_err = max_rel_err.max(relative_error(grads[i], numeric));
            params_checked += 1;
        }
    }
    Ok(GradCheckReport {
        max_rel_err,
        params_checked,
    })
}
