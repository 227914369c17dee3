//! Forward/backward implementations of the individual network layers.
//!
//! There is no autodiff graph: each layer exposes an explicit `forward` and
//! `backward`, and the model driver wires them together. Convolutions run
//! through im2col + the GEMM kernels; the brute-force reference convolution
//! lives in the tests, not here.

use super::gemm::{gemm, gemm_abt, gemm_atb};
use super::tensor::{ShapeError, Tensor};
use crate::rng::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NnError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Kaiming uniform initialization (ReLU gain): values drawn uniformly from
/// [−√(6/fan_in), +√(6/fan_in)], gradient zeroed.
pub fn kaiming_uniform_init(
    rng: &mut Rng,
    fan_in: usize,
    shape: &[usize],
) -> Result<Tensor, NnError> {
    if fan_in == 0 {
        return Err(NnError::Domain("fan_in must be at least 1".into()));
    }
    let bound = (6.0 / fan_in as f64).sqrt();
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = rng.uniform(-bound, bound);
    }
    Ok(t)
}

fn dims4(x: &Tensor) -> Result<(usize, usize, usize, usize), ShapeError> {
    match *x.shape() {
        [n, c, h, w] => Ok((n, c, h, w)),
        _ => Err(ShapeError::Mismatch(format!(
            "expected NCHW tensor, got shape {:?}",
            x.shape()
        ))),
    }
}

/// 2-D convolution over NCHW input. Weight layout (c_out, c_in, k, k).
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub weight: Tensor,
    pub bias: Tensor,
    pub stride: usize,
    pub padding: usize,
    c_in: usize,
    c_out: usize,
    kernel: usize,
}

impl Conv2d {
    pub fn new(
        rng: &mut Rng,
        c_in: usize,
        c_out: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Result<Conv2d, NnError> {
        let weight = kaiming_uniform_init(rng, c_in * kernel * kernel, &[c_out, c_in, kernel, kernel])?;
        Ok(Conv2d {
            weight,
            bias: Tensor::zeros(&[c_out]),
            stride,
            padding,
            c_in,
            c_out,
            kernel,
        })
    }

    pub fn out_spatial(&self, h: usize, w: usize) -> Result<(usize, usize), ShapeError> {
        let k = self.kernel;
        if h + 2 * self.padding < k || w + 2 * self.padding < k {
            return Err(ShapeError::Mismatch(format!(
                "kernel {k} larger than padded input {h}x{w}"
            )));
        }
        Ok((
            (h + 2 * self.padding - k) / self.stride + 1,
            (w + 2 * self.padding - k) / self.stride + 1,
        ))
    }

    /// Gather the receptive fields of one image into `cols`,
    /// laid out (c_in·k·k, oh·ow). Out-of-bounds taps read zero.
    fn im2col(&self, img: &[f64], h: usize, w: usize, oh: usize, ow: usize, cols: &mut [f64]) {
        let k = self.kernel;
        let (s, p) = (self.stride, self.padding);
        cols.fill(0.0);
        for c in 0..self.c_in {
            let plane = &img[c * h * w..(c + 1) * h * w];
            for ky in 0..k {
                for kx in 0..k {
                    let row = (c * k * k + ky * k + kx) * (oh * ow);
                    for oy in 0..oh {
                        let iy = (oy * s + ky) as isize - p as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let iy = iy as usize;
                        for ox in 0..ow {
                            let ix = (ox * s + kx) as isize - p as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            cols[row + oy * ow + ox] = plane[iy * w + ix as usize];
                        }
                    }
                }
            }
        }
    }

    /// Scatter-add of the im2col layout back onto an image gradient.
    fn col2im(&self, cols: &[f64], h: usize, w: usize, oh: usize, ow: usize, img: &mut [f64]) {
        let k = self.kernel;
        let (s, p) = (self.stride, self.padding);
        for c in 0..self.c_in {
            let plane = &mut img[c * h * w..(c + 1) * h * w];
            for ky in 0..k {
                for kx in 0..k {
                    let row = (c * k * k + ky * k + kx) * (oh * ow);
                    for oy in 0..oh {
                        let iy = (oy * s + ky) as isize - p as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let iy = iy as usize;
                        for ox in 0..ow {
                            let ix = (ox * s + kx) as isize - p as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            plane[iy * w + ix as usize] += cols[row + oy * ow + ox];
                        }
                    }
                }
            }
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor, ShapeError> {
        let (n, c, h, w) = dims4(x)?;
        if c != self.c_in {
            return Err(ShapeError::Mismatch(format!(
                "conv expects {} input channels, got {c}",
                self.c_in
            )));
        }
        let (oh, ow) = self.out_spatial(h, w)?;
        let ckk = self.c_in * self.kernel * self.kernel;
        let mut out = Tensor::zeros(&[n, self.c_out, oh, ow]);
        let mut cols = vec![0.0; ckk * oh * ow];
        for i in 0..n {
            self.im2col(&x.data()[i * c * h * w..], h, w, oh, ow, &mut cols);
            let dst = &mut out.data_mut()[i * self.c_out * oh * ow..(i + 1) * self.c_out * oh * ow];
            gemm(dst, self.weight.data(), &cols, self.c_out, ckk, oh * ow);
            for co in 0..self.c_out {
                let b = self.bias.data()[co];
                for v in &mut dst[co * oh * ow..(co + 1) * oh * ow] {
                    *v += b;
                }
            }
        }
        Ok(out)
    }

    /// Accumulates weight/bias gradients and returns the input gradient.
    pub fn backward(&mut self, x: &Tensor, grad_out: &Tensor) -> Result<Tensor, ShapeError> {
        let (n, c, h, w) = dims4(x)?;
        let (oh, ow) = self.out_spatial(h, w)?;
        let ckk = self.c_in * self.kernel * self.kernel;
        let mut grad_in = Tensor::zeros(&[n, c, h, w]);
        let mut cols = vec![0.0; ckk * oh * ow];
        let mut dcols = vec![0.0; ckk * oh * ow];
        for i in 0..n {
            let dy = &grad_out.data()[i * self.c_out * oh * ow..(i + 1) * self.c_out * oh * ow];
            // bias gradient
            for co in 0..self.c_out {
                let mut acc = 0.0;
                for v in &dy[co * oh * ow..(co + 1) * oh * ow] {
                    acc += v;
                }
                self.bias.grad_mut()[co] += acc;
            }
            // weight gradient: dW (c_out, ckk) += dY (c_out, oh·ow) · colsᵀ
            self.im2col(&x.data()[i * c * h * w..], h, w, oh, ow, &mut cols);
            gemm_abt(self.weight.grad_mut(), dy, &cols, self.c_out, oh * ow, ckk);
            // input gradient: dcols (ckk, oh·ow) = Wᵀ · dY
            dcols.fill(0.0);
            gemm_atb(&mut dcols, self.weight.data(), dy, self.c_out, ckk, oh * ow);
            self.col2im(&dcols, h, w, oh, ow, &mut grad_in.data_mut()[i * c * h * w..]);
        }
        Ok(grad_in)
    }
}

/// Elementwise max(0, x).
pub fn relu(x: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(x.shape());
    for (o, v) in out.data_mut().iter_mut().zip(x.data().iter()) {
        *o = v.max(0.0);
    }
    out
}

/// Passes gradient where the forward input was strictly positive.
pub fn relu_backward(x: &Tensor, grad_out: &Tensor) -> Tensor {
    let mut grad_in = Tensor::zeros(x.shape());
    for ((g, &v), &dy) in grad_in
        .data_mut()
        .iter_mut()
        .zip(x.data().iter())
        .zip(grad_out.data().iter())
    {
        *g = if v > 0.0 { dy } else { 0.0 };
    }
    grad_in
}

/// Argmax positions recorded by the pooling forward pass.
#[derive(Debug, Clone)]
pub struct PoolIndices {
    input_shape: Vec<usize>,
    argmax: Vec<u32>,
}

/// 2×2 max pooling with stride 2. Requires even spatial dimensions.
/// Ties route the gradient to the first maximal element in row-major order.
pub fn maxpool2x2(x: &Tensor) -> Result<(Tensor, PoolIndices), ShapeError> {
    let (n, c, h, w) = dims4(x)?;
    if h % 2 != 0 || w % 2 != 0 {
        return Err(ShapeError::Mismatch(format!(
            "maxpool2x2 needs even spatial dims, got {h}x{w}"
        )));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Tensor::zeros(&[n, c, oh, ow]);
    let mut argmax = vec![0u32; n * c * oh * ow];
    let data = x.data();
    for nc in 0..n * c {
        let plane = nc * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let base = plane + (2 * oy) * w + 2 * ox;
                let window = [base, base + 1, base + w, base + w + 1];
                let mut best = window[0];
                let mut best_v = data[window[0]];
                for &p in &window[1..] {
                    if data[p] > best_v {
                        best_v = data[p];
                        best = p;
                    }
                }
                let o = nc * oh * ow + oy * ow + ox;
                out.data_mut()[o] = best_v;
                argmax[o] = best as u32;
            }
        }
    }
    Ok((
        out,
        PoolIndices {
            input_shape: x.shape().to_vec(),
            argmax,
        },
    ))
}

pub fn maxpool2x2_backward(cache: &PoolIndices, grad_out: &Tensor) -> Tensor {
    let mut grad_in = Tensor::zeros(&cache.input_shape);
    let g = grad_in.data_mut();
    for (&src, &dy) in cache.argmax.iter().zip(grad_out.data().iter()) {
        g[src as usize] += dy;
    }
    grad_in
}

/// Inverted dropout: in training, each element is zeroed with probability
/// `rate` and survivors are scaled by 1/(1−rate); evaluation is the
/// identity. Returns the scaled mask used (None in evaluation).
pub fn dropout(
    x: &Tensor,
    rate: f64,
    rng: &mut Rng,
    training: bool,
) -> Result<(Tensor, Option<Vec<f64>>), NnError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NnError::Domain(format!(
            "dropout rate must lie in [0,1), got {rate}"
        )));
    }
    if !training || rate == 0.0 {
        return Ok((x.clone(), None));
    }
    let scale = 1.0 / (1.0 - rate);
    let mut mask = vec![0.0; x.numel()];
    for m in &mut mask {
        *m = if rng.next_f64() >= rate { scale } else { 0.0 };
    }
    let mut out = Tensor::zeros(x.shape());
    for ((o, &v), &m) in out.data_mut().iter_mut().zip(x.data()).zip(mask.iter()) {
        *o = v * m;
    }
    Ok((out, Some(mask)))
}

pub fn dropout_backward(mask: Option<&Vec<f64>>, grad_out: &Tensor) -> Tensor {
    match mask {
        None => grad_out.clone(),
        Some(mask) => {
            let mut grad_in = Tensor::zeros(grad_out.shape());
            for ((g, &dy), &m) in grad_in
                .data_mut()
                .iter_mut()
                .zip(grad_out.data())
                .zip(mask.iter())
            {
                *g = dy * m;
            }
            grad_in
        }
    }
}

/// Fully connected layer, y = x·W + b. Weight layout (inputs, outputs).
#[derive(Debug, Clone)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
    inputs: usize,
    outputs: usize,
}

impl Dense {
    pub fn new(rng: &mut Rng, inputs: usize, outputs: usize) -> Result<Dense, NnError> {
        Ok(Dense {
            weight: kaiming_uniform_init(rng, inputs, &[inputs, outputs])?,
            bias: Tensor::zeros(&[outputs]),
            inputs,
            outputs,
        })
    }

    fn dims2(&self, x: &Tensor) -> Result<usize, ShapeError> {
        match *x.shape() {
            [n, c] if c == self.inputs => Ok(n),
            _ => Err(ShapeError::Mismatch(format!(
                "dense expects (N, {}), got {:?}",
                self.inputs,
                x.shape()
            ))),
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor, ShapeError> {
        let n = self.dims2(x)?;
        let mut out = Tensor::zeros(&[n, self.outputs]);
        gemm(
            out.data_mut(),
            x.data(),
            self.weight.data(),
            n,
            self.inputs,
            self.outputs,
        );
        for row in 0..n {
            for (o, &b) in out.data_mut()[row * self.outputs..(row + 1) * self.outputs]
                .iter_mut()
                .zip(self.bias.data())
            {
                *o += b;
            }
        }
        Ok(out)
    }

    pub fn backward(&mut self, x: &Tensor, grad_out: &Tensor) -> Result<Tensor, ShapeError> {
        let n = self.dims2(x)?;
        // dW (in, out) += xᵀ (in, N) · dY (N, out)
        gemm_atb(
            self.weight.grad_mut(),
            x.data(),
            grad_out.data(),
            n,
            self.inputs,
            self.outputs,
        );
        for row in 0..n {
            for (g, &dy) in self.bias.grad_mut()[..self.outputs]
                .iter_mut()
                .zip(&grad_out.data()[row * self.outputs..(row + 1) * self.outputs])
            {
                *g += dy;
            }
        }
        // dX (N, in) = dY (N, out) · Wᵀ
        let mut grad_in = Tensor::zeros(&[n, self.inputs]);
        gemm_abt(
            grad_in.data_mut(),
            grad_out.data(),
            self.weight.data(),
            n,
            self.outputs,
            self.inputs,
        );
        Ok(grad_in)
    }
}

/// Mean softmax cross-entropy over a batch, stabilized by max subtraction.
/// Returns the scalar loss and the gradient with respect to the logits,
/// (softmax − onehot) / batch.
pub fn softmax_cross_entropy(
    logits: &Tensor,
    labels: &[usize],
) -> Result<(f64, Tensor), NnError> {
    let (n, classes) = match *logits.shape() {
        [n, c] => (n, c),
        _ => {
            return Err(NnError::Shape(ShapeError::Mismatch(format!(
                "expected (N, classes) logits, got {:?}",
                logits.shape()
            ))))
        }
    };
    if labels.len() != n {
        return Err(NnError::Shape(ShapeError::Mismatch(format!(
            "{} labels for batch of {n}",
            labels.len()
        ))));
    }
    let mut grad = Tensor::zeros(logits.shape());
    let mut loss = 0.0;
    for (row, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(NnError::Domain(format!(
                "label {label} out of range for {classes} classes"
            )));
        }
        let x = &logits.data()[row * classes..(row + 1) * classes];
        let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for &v in x {
            z += (v - max).exp();
        }
        loss += z.ln() - (x[label] - max);
        let g = &mut grad.data_mut()[row * classes..(row + 1) * classes];
        for (gv, &v) in g.iter_mut().zip(x.iter()) {
            *gv = (v - max).exp() / z / n as f64;
        }
        g[label] -= 1.0 / n as f64;
    }
    Ok((loss / n as f64, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn filled(shape: &[usize], seed: u64) -> Tensor {
        let mut rng = Rng::new(seed);
        let mut t = Tensor::zeros(shape);
        for v in t.data_mut() {
            *v = rng.uniform(-1.0, 1.0);
        }
        t
    }

    /// Direct six-nested-loop convolution; the independent oracle for the
    /// im2col implementation.
    fn conv_reference(x: &Tensor, w: &Tensor, b: &Tensor, stride: usize, pad: usize) -> Tensor {
        let [n, ci, h, wd] = <[usize; 4]>::try_from(x.shape()).unwrap();
        let [co, _, k, _] = <[usize; 4]>::try_from(w.shape()).unwrap();
        let oh = (h + 2 * pad - k) / stride + 1;
        let ow = (wd + 2 * pad - k) / stride + 1;
        let mut out = Tensor::zeros(&[n, co, oh, ow]);
        for ni in 0..n {
            for o in 0..co {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut acc = b.data()[o];
                        for c in 0..ci {
                            for ky in 0..k {
                                for kx in 0..k {
                                    let iy = (oy * stride + ky) as isize - pad as isize;
                                    let ix = (ox * stride + kx) as isize - pad as isize;
                                    if iy < 0 || ix < 0 || iy >= h as isize || ix >= wd as isize {
                                        continue;
                                    }
                                    acc += x.data()
                                        [((ni * ci + c) * h + iy as usize) * wd + ix as usize]
                                        * w.data()[((o * ci + c) * k + ky) * k + kx];
                                }
                            }
                        }
                        out.data_mut()[((ni * co + o) * oh + oy) * ow + ox] = acc;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn kaiming_bound_fan_in_six() {
        let mut rng = Rng::new(1);
        let t = kaiming_uniform_init(&mut rng, 6, &[100, 10]).unwrap();
        assert!(t.data().iter().all(|&v| (-1.0..=1.0).contains(&v)));
        assert!(t.grad().iter().all(|&v| v == 0.0));
        assert!(kaiming_uniform_init(&mut rng, 0, &[4]).is_err());
    }

    #[test]
    fn kaiming_moments() {
        let mut rng = Rng::new(2);
        let n = 100_000;
        let t = kaiming_uniform_init(&mut rng, 9, &[n]).unwrap();
        let mean: f64 = t.data().iter().sum::<f64>() / n as f64;
        let var: f64 = t.data().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01);
        // Var(U[−b, b]) = b²/3 with b = √(6/9): 0.2222…
        assert!((var - 2.0 / 9.0).abs() < 0.01);
    }

    #[test]
    fn conv_identity_kernel() {
        let mut rng = Rng::new(3);
        let mut conv = Conv2d::new(&mut rng, 1, 1, 3, 1, 1).unwrap();
        conv.weight.data_mut().fill(0.0);
        conv.weight.data_mut()[4] = 1.0; // center tap
        conv.bias.data_mut().fill(0.0);
        let x = filled(&[1, 1, 5, 5], 4);
        let y = conv.forward(&x).unwrap();
        assert_eq!(y.shape(), x.shape());
        for (a, b) in y.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn conv_box_kernel_interior_sum() {
        let mut rng = Rng::new(5);
        let mut conv = Conv2d::new(&mut rng, 1, 1, 3, 1, 1).unwrap();
        conv.weight.data_mut().fill(1.0);
        conv.bias.data_mut().fill(0.0);
        let x = Tensor::from_vec(&[1, 1, 3, 3], vec![5.0; 9]).unwrap();
        let y = conv.forward(&x).unwrap();
        // interior pixel sees all nine taps of the constant-5 image
        assert_eq!(y.data()[4], 45.0);
    }

    #[test]
    fn conv_matches_reference_oracle() {
        let mut rng = Rng::new(6);
        let conv = Conv2d::new(&mut rng, 1, 4, 3, 1, 1).unwrap();
        let x = filled(&[1, 1, 4, 4], 7);
        let got = conv.forward(&x).unwrap();
        let want = conv_reference(&x, &conv.weight, &conv.bias, 1, 1);
        assert_eq!(got.shape(), want.shape());
        for (a, b) in got.data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn conv_multichannel_matches_reference_oracle() {
        let mut rng = Rng::new(8);
        let conv = Conv2d::new(&mut rng, 3, 5, 3, 1, 1).unwrap();
        let x = filled(&[2, 3, 6, 6], 9);
        let got = conv.forward(&x).unwrap();
        let want = conv_reference(&x, &conv.weight, &conv.bias, 1, 1);
        for (a, b) in got.data().iter().zip(want.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn conv_rejects_channel_mismatch() {
        let mut rng = Rng::new(10);
        let conv = Conv2d::new(&mut rng, 2, 4, 3, 1, 1).unwrap();
        let x = filled(&[1, 3, 4, 4], 11);
        assert!(conv.forward(&x).is_err());
    }

    #[test]
    fn relu_values_and_gradient_mask() {
        let x = Tensor::from_vec(&[1, 3], vec![-1.0, 0.0, 2.0]).unwrap();
        let y = relu(&x);
        assert_eq!(y.data(), &[0.0, 0.0, 2.0]);
        let dy = Tensor::from_vec(&[1, 3], vec![1.0, 1.0, 1.0]).unwrap();
        let dx = relu_backward(&x, &dy);
        assert_eq!(dx.data(), &[0.0, 0.0, 1.0]);

        let neg = Tensor::from_vec(&[1, 2], vec![-3.0, -0.5]).unwrap();
        assert!(relu(&neg).data().iter().all(|&v| v == 0.0));
        assert!(relu_backward(&neg, &Tensor::from_vec(&[1, 2], vec![1.0, 1.0]).unwrap())
            .data()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn maxpool_basics_and_tie_rule() {
        let x = Tensor::from_vec(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (y, idx) = maxpool2x2(&x).unwrap();
        assert_eq!(y.data(), &[4.0]);
        let dy = Tensor::from_vec(&[1, 1, 1, 1], vec![1.0]).unwrap();
        let dx = maxpool2x2_backward(&idx, &dy);
        assert_eq!(dx.data(), &[0.0, 0.0, 0.0, 1.0]);

        // ties go to the first window element in row-major order
        let flat = Tensor::from_vec(&[1, 1, 2, 2], vec![7.0; 4]).unwrap();
        let (y, idx) = maxpool2x2(&flat).unwrap();
        assert_eq!(y.data(), &[7.0]);
        let dx = maxpool2x2_backward(&idx, &dy);
        assert_eq!(dx.data(), &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn maxpool_halves_mnist_spatial_dims() {
        let x = Tensor::zeros(&[1, 1, 28, 28]);
        let (y, _) = maxpool2x2(&x).unwrap();
        assert_eq!(y.shape(), &[1, 1, 14, 14]);
        let odd = Tensor::zeros(&[1, 1, 5, 5]);
        assert!(maxpool2x2(&odd).is_err());
    }

    #[test]
    fn dropout_eval_and_zero_rate_are_identity() {
        let x = filled(&[2, 8], 12);
        let mut rng = Rng::new(13);
        let (y, mask) = dropout(&x, 0.25, &mut rng, false).unwrap();
        assert_eq!(y.data(), x.data());
        assert!(mask.is_none());
        let (y, mask) = dropout(&x, 0.0, &mut rng, true).unwrap();
        assert_eq!(y.data(), x.data());
        assert!(mask.is_none());
        assert!(dropout(&x, 1.0, &mut rng, true).is_err());
    }

    #[test]
    fn dropout_preserves_expectation() {
        let x = Tensor::from_vec(&[1, 1], vec![2.0]).unwrap();
        let mut rng = Rng::new(14);
        let trials = 10_000;
        let mut sum = 0.0;
        for _ in 0..trials {
            let (y, _) = dropout(&x, 0.25, &mut rng, true).unwrap();
            sum += y.data()[0];
        }
        let mean = sum / trials as f64;
        assert!((mean - 2.0).abs() / 2.0 < 0.03, "mean {mean}");
    }

    #[test]
    fn dense_identity_and_param_count() {
        let mut rng = Rng::new(15);
        let mut d = Dense::new(&mut rng, 3, 3).unwrap();
        d.weight.data_mut().fill(0.0);
        for i in 0..3 {
            d.weight.data_mut()[i * 3 + i] = 1.0;
        }
        d.bias.data_mut().fill(0.0);
        let x = filled(&[2, 3], 16);
        let y = d.forward(&x).unwrap();
        for (a, b) in y.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-15);
        }

        // the 1568→128 layer of the MNIST net holds 1568·128 + 128 weights
        let big = Dense::new(&mut rng, 1568, 128).unwrap();
        assert_eq!(big.weight.numel() + big.bias.numel(), 200_832);

        let bad = filled(&[2, 4], 17);
        assert!(d.forward(&bad).is_err());
    }

    #[test]
    fn softmax_ce_uniform_logits() {
        let x = Tensor::zeros(&[2, 10]);
        let (loss, _) = softmax_cross_entropy(&x, &[3, 7]).unwrap();
        assert!((loss - 10.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn softmax_ce_margin_monotone() {
        let mut prev = f64::INFINITY;
        for margin in [1.0, 5.0, 10.0] {
            let mut x = Tensor::zeros(&[1, 4]);
            x.data_mut()[2] = margin;
            let (loss, _) = softmax_cross_entropy(&x, &[2]).unwrap();
            assert!(loss < prev);
            prev = loss;
        }
    }

    #[test]
    fn softmax_ce_rejects_bad_labels() {
        let x = Tensor::zeros(&[1, 4]);
        assert!(matches!(
            softmax_cross_entropy(&x, &[4]),
            Err(NnError::Domain(_))
        ));
        assert!(softmax_cross_entropy(&x, &[0, 1]).is_err());
    }

    // ---- finite-difference oracles ----

    fn central_diff(f: &mut dyn FnMut(f64) -> f64, at: f64, eps: f64) -> f64 {
        (f(at + eps) - f(at - eps)) / (2.0 * eps)
    }

    fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
        analytic
            .iter()
            .zip(numeric.iter())
            .map(|(&a, &n)| (a - n).abs() / 1.0_f64.max(a.abs() + n.abs()))
            .fold(0.0, f64::max)
    }

    #[test]
    fn relu_gradient_matches_finite_differences() {
        // keep values away from the kink at 0
        let mut x = filled(&[1, 16], 18);
        for v in x.data_mut() {
            if v.abs() < 0.1 {
                *v += 0.2_f64.copysign(*v);
            }
        }
        let dy = filled(&[1, 16], 19);
        let dx = relu_backward(&x, &dy);
        let mut numeric = vec![0.0; 16];
        for i in 0..16 {
            let x0 = x.data()[i];
            let mut f = |v: f64| {
                let mut xp = x.clone();
                xp.data_mut()[i] = v;
                relu(&xp)
                    .data()
                    .iter()
                    .zip(dy.data())
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            };
            numeric[i] = central_diff(&mut f, x0, 1e-6);
        }
        assert!(max_rel_err(dx.data(), &numeric) < 1e-6);
    }

    #[test]
    fn dense_gradient_matches_finite_differences() {
        let mut rng = Rng::new(20);
        let mut dense = Dense::new(&mut rng, 8, 3).unwrap();
        let x = filled(&[4, 8], 21);
        let labels = [0usize, 2, 1, 2];

        let loss_of = |d: &Dense, xin: &Tensor| {
            let y = d.forward(xin).unwrap();
            softmax_cross_entropy(&y, &labels).unwrap().0
        };

        let y = dense.forward(&x).unwrap();
        let (_, dlogits) = softmax_cross_entropy(&y, &labels).unwrap();
        let dx = dense.backward(&x, &dlogits).unwrap();

        // weight gradient
        let mut numeric_w = vec![0.0; dense.weight.numel()];
        for i in 0..dense.weight.numel() {
            let orig = dense.weight.data()[i];
            let mut f = |v: f64| {
                let mut d = dense.clone();
                d.weight.data_mut()[i] = v;
                loss_of(&d, &x)
            };
            numeric_w[i] = central_diff(&mut f, orig, 1e-5);
        }
        assert!(max_rel_err(dense.weight.grad(), &numeric_w) < 1e-6);

        // input gradient
        let mut numeric_x = vec![0.0; x.numel()];
        for i in 0..x.numel() {
            let orig = x.data()[i];
            let mut f = |v: f64| {
                let mut xp = x.clone();
                xp.data_mut()[i] = v;
                loss_of(&dense, &xp)
            };
            numeric_x[i] = central_diff(&mut f, orig, 1e-5);
        }
        assert!(max_rel_err(dx.data(), &numeric_x) < 1e-6);
    }

    #[test]
    fn conv_gradient_matches_finite_differences() {
        let mut rng = Rng::new(22);
        let mut conv = Conv2d::new(&mut rng, 2, 3, 3, 1, 1).unwrap();
        let x = filled(&[2, 2, 4, 4], 23);
        let dy_shape = conv.forward(&x).unwrap().shape().to_vec();
        let dy = filled(&dy_shape, 24);

        // objective: sum(conv(x) * dy)
        let obj = |c: &Conv2d, xin: &Tensor| {
            c.forward(xin)
                .unwrap()
                .data()
                .iter()
                .zip(dy.data())
                .map(|(a, b)| a * b)
                .sum::<f64>()
        };

        let dx = conv.backward(&x, &dy).unwrap();

        let mut numeric_w = vec![0.0; conv.weight.numel()];
        for i in 0..conv.weight.numel() {
            let orig = conv.weight.data()[i];
            let mut f = |v: f64| {
                let mut c = conv.clone();
                c.weight.data_mut()[i] = v;
                obj(&c, &x)
            };
            numeric_w[i] = central_diff(&mut f, orig, 1e-5);
        }
        assert!(max_rel_err(conv.weight.grad(), &numeric_w) < 1e-6);

        let mut numeric_b = vec![0.0; conv.bias.numel()];
        for i in 0..conv.bias.numel() {
            let orig = conv.bias.data()[i];
            let mut f = |v: f64| {
                let mut c = conv.clone();
                c.bias.data_mut()[i] = v;
                obj(&c, &x)
            };
            numeric_b[i] = central_diff(&mut f, orig, 1e-5);
        }
        assert!(max_rel_err(conv.bias.grad(), &numeric_b) < 1e-6);

        let mut numeric_x = vec![0.0; x.numel()];
        for i in 0..x.numel() {
            let orig = x.data()[i];
            let mut f = |v: f64| {
                let mut xp = x.clone();
                xp.data_mut()[i] = v;
                obj(&conv, &xp)
            };
            numeric_x[i] = central_diff(&mut f, orig, 1e-5);
        }
        assert!(max_rel_err(dx.data(), &numeric_x) < 1e-6);
    }

    #[test]
    fn softmax_ce_gradient_matches_finite_differences() {
        let x = filled(&[3, 5], 25);
        let labels = [1usize, 4, 0];
        let (_, grad) = softmax_cross_entropy(&x, &labels).unwrap();
        let mut numeric = vec![0.0; x.numel()];
        for i in 0..x.numel() {
            let orig = x.data()[i];
            let mut f = |v: f64| {
                let mut xp = x.clone();
                xp.data_mut()[i] = v;
                softmax_cross_entropy(&xp, &labels).unwrap().0
            };
            numeric[i] = central_diff(&mut f, orig, 1e-6);
        }
        assert!(max_rel_err(grad.data(), &numeric) < 1e-6);
    }
}
