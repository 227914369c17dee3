//! Layer-list model specification and the runtime that trains it.

use super::layers::{
    dropout, dropout_backward, maxpool2x2, maxpool2x2_backward, relu, relu_backward,
    softmax_cross_entropy, Conv2d, Dense, NnError, PoolIndices,
};
use super::tensor::{ShapeError, Tensor};
use crate::rng::Rng;

/// One layer of a [`ModelSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    Conv {
        c_in: usize,
        c_out: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    Relu,
    MaxPool2,
    Flatten,
    Dropout { rate: f64 },
    Dense { inputs: usize, outputs: usize },
}

/// Ordered layer list with a single softmax cross-entropy head over
/// `classes` outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub layers: Vec<LayerSpec>,
    pub classes: usize,
}

impl ModelSpec {
    /// The 11-layer digit-classification network:
    /// conv(1→16) → relu → pool → conv(16→32) → relu → pool → flatten
    /// → dropout(0.25) → dense(1568→128) → relu → dense(128→10).
    pub fn mnist_cnn() -> ModelSpec {
        ModelSpec {
            layers: vec![
                LayerSpec::Conv {
                    c_in: 1,
                    c_out: 16,
                    kernel: 3,
                    stride: 1,
                    padding: 1,
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool2,
                LayerSpec::Conv {
                    c_in: 16,
                    c_out: 32,
                    kernel: 3,
                    stride: 1,
                    padding: 1,
                },
                LayerSpec::Relu,
                LayerSpec::MaxPool2,
                LayerSpec::Flatten,
                LayerSpec::Dropout { rate: 0.25 },
                LayerSpec::Dense {
                    inputs: 1568,
                    outputs: 128,
                },
                LayerSpec::Relu,
                LayerSpec::Dense {
                    inputs: 128,
                    outputs: 10,
                },
            ],
            classes: 10,
        }
    }

    /// Walk the layer list with a (channels, h, w) input and verify that
    /// consecutive shapes are compatible and the head width matches.
    pub fn validate(&self, input: (usize, usize, usize)) -> Result<(), NnError> {
        enum S {
            Chw(usize, usize, usize),
            Flat(usize),
        }
        let mut s = S::Chw(input.0, input.1, input.2);
        for (i, layer) in self.layers.iter().enumerate() {
            s = match (layer, s) {
                (
                    LayerSpec::Conv {
                        c_in,
                        c_out,
                        kernel,
                        stride,
                        padding,
                    },
                    S::Chw(c, h, w),
                ) => {
                    if *c_in != c {
                        return Err(ShapeError::Mismatch(format!(
                            "layer {i}: conv expects {c_in} channels, input has {c}"
                        ))
                        .into());
                    }
                    if h + 2 * padding < *kernel || w + 2 * padding < *kernel {
                        return Err(ShapeError::Mismatch(format!(
                            "layer {i}: kernel does not fit {h}x{w}"
                        ))
                        .into());
                    }
                    S::Chw(
                        *c_out,
                        (h + 2 * padding - kernel) / stride + 1,
                        (w + 2 * padding - kernel) / stride + 1,
                    )
                }
                (LayerSpec::MaxPool2, S::Chw(c, h, w)) => {
                    if h % 2 != 0 || w % 2 != 0 {
                        return Err(ShapeError::Mismatch(format!(
                            "layer {i}: pooling odd spatial dims {h}x{w}"
                        ))
                        .into());
                    }
                    S::Chw(c, h / 2, w / 2)
                }
                (LayerSpec::Flatten, S::Chw(c, h, w)) => S::Flat(c * h * w),
                (LayerSpec::Dense { inputs, outputs }, S::Flat(f)) => {
                    if *inputs != f {
                        return Err(ShapeError::Mismatch(format!(
                            "layer {i}: dense expects {inputs} inputs, got {f}"
                        ))
                        .into());
                    }
                    S::Flat(*outputs)
                }
                (LayerSpec::Relu, s) | (LayerSpec::Dropout { .. }, s) => s,
                (LayerSpec::Dense { .. }, S::Chw(..)) => {
                    return Err(ShapeError::Mismatch(format!(
                        "layer {i}: dense applied before flatten"
                    ))
                    .into())
                }
                (_, S::Flat(_)) => {
                    return Err(ShapeError::Mismatch(format!(
                        "layer {i}: spatial layer applied after flatten"
                    ))
                    .into())
                }
            };
        }
        match s {
            S::Flat(f) if f == self.classes => Ok(()),
            S::Flat(f) => Err(ShapeError::Mismatch(format!(
                "head produces {f} outputs, expected {} classes",
                self.classes
            ))
            .into()),
            S::Chw(..) => Err(ShapeError::Mismatch("model never flattens".into()).into()),
        }
    }
}

#[derive(Debug, Clone)]
enum Layer {
    Conv(Conv2d),
    Relu,
    MaxPool2,
    Flatten,
    Dropout(f64),
    Dense(Dense),
}

/// A built model: initialized parameters plus the forward/backward driver.
#[derive(Debug, Clone)]
pub struct Model {
    layers: Vec<Layer>,
    names: Vec<String>,
    spec: ModelSpec,
}

struct FwdCache {
    inputs: Vec<Tensor>,
    pools: Vec<Option<PoolIndices>>,
    masks: Vec<Option<Vec<f64>>>,
}

impl Model {
    /// Initialize parameters from `rng`; equal seeds give bit-identical
    /// parameters.
    pub fn build(spec: &ModelSpec, rng: &mut Rng) -> Result<Model, NnError> {
        let mut layers = Vec::with_capacity(spec.layers.len());
        let mut names = Vec::new();
        let (mut n_conv, mut n_dense) = (0usize, 0usize);
        for l in &spec.layers {
            let (layer, name) = match *l {
                LayerSpec::Conv {
                    c_in,
                    c_out,
                    kernel,
                    stride,
                    padding,
                } => {
                    n_conv += 1;
                    (
                        Layer::Conv(Conv2d::new(rng, c_in, c_out, kernel, stride, padding)?),
                        format!("conv{n_conv}"),
                    )
                }
                LayerSpec::Relu => (Layer::Relu, String::new()),
                LayerSpec::MaxPool2 => (Layer::MaxPool2, String::new()),
                LayerSpec::Flatten => (Layer::Flatten, String::new()),
                LayerSpec::Dropout { rate } => (Layer::Dropout(rate), String::new()),
                LayerSpec::Dense { inputs, outputs } => {
                    n_dense += 1;
                    (
                        Layer::Dense(Dense::new(rng, inputs, outputs)?),
                        format!("fc{n_dense}"),
                    )
                }
            };
            layers.push(layer);
            names.push(name);
        }
        Ok(Model {
            layers,
            names,
            spec: spec.clone(),
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|(_, t)| t.numel()).sum()
    }

    /// Named parameter tensors in layer order (weight before bias).
    pub fn params(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (layer, name) in self.layers.iter().zip(&self.names) {
            match layer {
                Layer::Conv(c) => {
                    out.push((format!("{name}.weight"), &c.weight));
                    out.push((format!("{name}.bias"), &c.bias));
                }
                Layer::Dense(d) => {
                    out.push((format!("{name}.weight"), &d.weight));
                    out.push((format!("{name}.bias"), &d.bias));
                }
                _ => {}
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<(String, &mut Tensor)> {
        let mut out = Vec::new();
        for (layer, name) in self.layers.iter_mut().zip(&self.names) {
            match layer {
                Layer::Conv(c) => {
                    out.push((format!("{name}.weight"), &mut c.weight));
                    out.push((format!("{name}.bias"), &mut c.bias));
                }
                Layer::Dense(d) => {
                    out.push((format!("{name}.weight"), &mut d.weight));
                    out.push((format!("{name}.bias"), &mut d.bias));
                }
                _ => {}
            }
        }
        out
    }

    pub fn zero_grad(&mut self) {
        for (_, t) in self.params_mut() {
            t.zero_grad();
        }
    }

    /// Copy of all parameter values, for best-epoch snapshots.
    pub fn snapshot(&self) -> Vec<Vec<f64>> {
        self.params().iter().map(|(_, t)| t.data().to_vec()).collect()
    }

    pub fn restore(&mut self, snapshot: &[Vec<f64>]) {
        let mut params = self.params_mut();
        assert_eq!(params.len(), snapshot.len(), "snapshot layout mismatch");
        for ((_, t), saved) in params.iter_mut().zip(snapshot) {
            t.data_mut().copy_from_slice(saved);
        }
    }

    fn forward_inner(
        &self,
        x: &Tensor,
        training: bool,
        rng: Option<&mut Rng>,
        mut cache: Option<&mut FwdCache>,
    ) -> Result<Tensor, NnError> {
        let mut rng = rng;
        let mut cur = x.clone();
        for layer in &self.layers {
            let (next, pool, mask) = match layer {
                Layer::Conv(conv) => (conv.forward(&cur)?, None, None),
                Layer::Relu => (relu(&cur), None, None),
                Layer::MaxPool2 => {
                    let (y, idx) = maxpool2x2(&cur)?;
                    (y, Some(idx), None)
                }
                Layer::Flatten => {
                    let n = cur.shape()[0];
                    let flat = cur.numel() / n;
                    (
                        Tensor::from_vec(&[n, flat], cur.data().to_vec())
                            .map_err(NnError::from)?,
                        None,
                        None,
                    )
                }
                Layer::Dropout(rate) => {
                    let (y, mask) = if training {
                        let r = rng
                            .as_deref_mut()
                            .expect("training forward needs an rng for dropout");
                        dropout(&cur, *rate, r, true)?
                    } else {
                        dropout(&cur, *rate, &mut Rng::new(0), false)?
                    };
                    (y, None, mask)
                }
                Layer::Dense(dense) => (dense.forward(&cur)?, None, None),
            };
            if let Some(c) = cache.as_deref_mut() {
                // layer inputs move into the cache; only the final logits
                // stay on the forward path
                c.inputs.push(std::mem::replace(&mut cur, next));
                c.pools.push(pool);
                c.masks.push(mask);
            } else {
                cur = next;
            }
        }
        Ok(cur)
    }

    /// Evaluation-mode logits.
    pub fn logits(&self, x: &Tensor) -> Result<Tensor, NnError> {
        self.forward_inner(x, false, None, None)
    }

    /// Argmax class per batch row.
    pub fn predict(&self, x: &Tensor) -> Result<Vec<usize>, NnError> {
        let logits = self.logits(x)?;
        let classes = logits.shape()[1];
        Ok(logits
            .data()
            .chunks(classes)
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                        if v > bv {
                            (i, v)
                        } else {
                            (bi, bv)
                        }
                    })
                    .0
            })
            .collect())
    }

    /// Evaluation-mode mean cross-entropy.
    pub fn loss(&self, x: &Tensor, labels: &[usize]) -> Result<f64, NnError> {
        let logits = self.logits(x)?;
        Ok(softmax_cross_entropy(&logits, labels)?.0)
    }

    /// One full training step's worth of gradients: zero grads, forward
    /// (dropout active when `training`), backward. Returns the batch loss.
    pub fn loss_and_backward(
        &mut self,
        x: &Tensor,
        labels: &[usize],
        rng: &mut Rng,
        training: bool,
    ) -> Result<f64, NnError> {
        self.zero_grad();
        let mut cache = FwdCache {
            inputs: Vec::with_capacity(self.layers.len()),
            pools: Vec::with_capacity(self.layers.len()),
            masks: Vec::with_capacity(self.layers.len()),
        };
        let logits = self.forward_inner(x, training, Some(rng), Some(&mut cache))?;
        let (loss, dlogits) = softmax_cross_entropy(&logits, labels)?;
        let mut grad = dlogits;
        for i in (0..self.layers.len()).rev() {
            let input = &cache.inputs[i];
            grad = match &mut self.layers[i] {
                Layer::Conv(conv) => conv.backward(input, &grad)?,
                Layer::Relu => relu_backward(input, &grad),
                Layer::MaxPool2 => {
                    maxpool2x2_backward(cache.pools[i].as_ref().expect("pool cache"), &grad)
                }
                Layer::Flatten => Tensor::from_vec(input.shape(), grad.data().to_vec())
                    .map_err(NnError::from)?,
                Layer::Dropout(_) => dropout_backward(cache.masks[i].as_ref(), &grad),
                Layer::Dense(dense) => dense.backward(input, &grad)?,
            };
        }
        Ok(loss)
    }
}

/// Build the initialized 11-layer digit CNN.
pub fn build_mnist_cnn(rng: &mut Rng) -> Model {
    let spec = ModelSpec::mnist_cnn();
    spec.validate((1, 28, 28)).expect("builtin spec is valid");
    Model::build(&spec, rng).expect("builtin spec builds")
}
