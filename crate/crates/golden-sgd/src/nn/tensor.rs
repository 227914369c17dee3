//! Dense n-dimensional f64 array with a paired gradient buffer.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ShapeError {
    #[error("shape mismatch: {0}")]
    Mismatch(String),
    #[error("data length {len} does not match shape {shape:?}")]
    Length { len: usize, shape: Vec<usize> },
}

/// Row-major value buffer plus a same-shape gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    grad: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Tensor {
        let n: usize = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; n],
            grad: vec![0.0; n],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Tensor, ShapeError> {
        let n: usize = shape.iter().product();
        if data.len() != n {
            return Err(ShapeError::Length {
                len: data.len(),
                shape: shape.to_vec(),
            });
        }
        let grad = vec![0.0; n];
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
            grad,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn grad_mut(&mut self) -> &mut [f64] {
        &mut self.grad
    }

    /// Simultaneous access to values and gradients (optimizer steps).
    pub fn data_and_grad_mut(&mut self) -> (&mut [f64], &[f64]) {
        (&mut self.data, &self.grad)
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn grad_all_finite(&self) -> bool {
        self.grad.iter().all(|v| v.is_finite())
    }
}
