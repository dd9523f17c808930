//! Temporal conditional layers and the auxiliary layers around them.
//!
//! A conditional layer predicts a hidden vector for each central frame of
//! a segment from the frame itself plus its `n` past and `n` future
//! neighbors, through `d = 2n + 1` distinct weight matrices (one per
//! window offset). The masked variant gates every matrix of that tensor
//! with one shared binary mask, so each hidden node only sees a band of
//! adjacent feature bins. Each layer consumes `2n` frames: a segment of
//! width `T` comes out `T - 2n` frames wide.

use crate::error::{Error, Result};
use crate::mask::BinaryMask;
use crate::numerics::{
    matmul_nn_window_acc, matmul_nt_window_acc, matmul_tn_window, Matrix, SeededRng,
};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// Neuron transfer function. PReLU carries per-neuron learnable slopes
/// stored on the owning layer; softmax is applied at the model output
/// only and is not a per-layer transfer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transfer {
    Prelu,
    Sigmoid,
    Linear,
}

/// `out_i = x_i` for positive entries, `alpha_i * x_i` otherwise.
pub fn prelu<T: Scalar>(x: &[T], alpha: &[T]) -> Result<Vec<T>> {
    if x.len() != alpha.len() {
        return Err(Error::ShapeMismatch {
            op: "prelu",
            lhs_rows: x.len(),
            lhs_cols: 1,
            rhs_rows: alpha.len(),
            rhs_cols: 1,
        });
    }
    Ok(x.iter()
        .zip(alpha.iter())
        .map(|(&v, &a)| if v > T::zero() { v } else { a * v })
        .collect())
}

pub fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Numerically guarded softmax: shifts by the maximum before
/// exponentiating, so the output always sums to 1 within |x| of any scale.
pub fn softmax<T: Scalar>(x: &[T]) -> Vec<T> {
    let max = x.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = x.iter().map(|&v| (v - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Per-feature mean across the time axis of an `l x T` frame block.
pub fn global_mean_pool<T: Scalar>(frames: &Matrix<T>) -> Vec<T> {
    frames.mean_over_columns()
}

/// Inverted-dropout scaling vector: each entry is 0 with probability
/// `rate`, else `1 / (1 - rate)`, so the expected activation is unchanged.
/// Applied in training mode only; inference uses no mask.
pub fn dropout_mask<T: Scalar>(rng: &mut SeededRng, rate: f64, len: usize) -> Result<Vec<T>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    let keep = T::from_f64_lossy(1.0 / (1.0 - rate));
    Ok((0..len)
        .map(|_| {
            if rng.next_f64() < rate {
                T::zero()
            } else {
                keep
            }
        })
        .collect())
}

/// One conditional (or masked conditional) layer.
///
/// `weights[u + order]` is the `in_len x out_len` matrix applied to the
/// frame at window offset `u` in `[-n, n]`. When a mask is present the
/// same mask gates every matrix of the tensor, and the layer's effective
/// weights are recomputed as `W ∘ M` on each pass, which also zeroes the
/// gradient at masked positions through the chain rule.
#[derive(Clone, Debug)]
pub struct ClnnLayer<T> {
    order: usize,
    in_len: usize,
    out_len: usize,
    weights: Vec<Matrix<T>>,
    bias: Vec<T>,
    mask: Option<BinaryMask>,
    transfer: Transfer,
    /// Per-neuron PReLU slopes; empty unless `transfer` is `Prelu`.
    alpha: Vec<T>,
}

/// Per-segment state the backward pass needs: the pre-activations.
#[derive(Clone, Debug)]
pub struct ClnnCache<T> {
    pre: Matrix<T>,
}

impl<T> ClnnCache<T> {
    /// `e x (T - 2n)` values entering the transfer function. Useful for
    /// audits: finite differences are only trustworthy when no rectifier
    /// input sits within the difference step of zero.
    pub fn pre_activations(&self) -> &Matrix<T> {
        &self.pre
    }
}

/// Gradients of one conditional layer, shaped like its parameters.
#[derive(Clone, Debug)]
pub struct ClnnGradients<T> {
    pub weights: Vec<Matrix<T>>,
    pub bias: Vec<T>,
    pub alpha: Vec<T>,
    pub input: Matrix<T>,
}

impl<T: Scalar> ClnnLayer<T> {
    /// Builds a layer with fan-scaled uniform init, `sqrt(6 / (l + e))`.
    /// Masked weight positions start at exactly zero, so the raw tensor
    /// and the effective tensor agree from the first step on.
    pub fn new(
        order: usize,
        in_len: usize,
        out_len: usize,
        mask: Option<BinaryMask>,
        transfer: Transfer,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::Config("layer order n must be at least 1".into()));
        }
        if in_len == 0 || out_len == 0 {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if let Some(m) = &mask {
            if m.rows() != in_len || m.cols() != out_len {
                return Err(Error::ShapeMismatch {
                    op: "layer mask",
                    lhs_rows: in_len,
                    lhs_cols: out_len,
                    rhs_rows: m.rows(),
                    rhs_cols: m.cols(),
                });
            }
        }
        let scale = (6.0 / (in_len + out_len) as f64).sqrt();
        let d = 2 * order + 1;
        let mut weights = Vec::with_capacity(d);
        for _ in 0..d {
            let mut w = Matrix::from_fn(in_len, out_len, |_, _| {
                T::from_f64_lossy(rng.uniform(-scale, scale))
            });
            if let Some(m) = &mask {
                m.apply_in_place(&mut w);
            }
            weights.push(w);
        }
        let alpha = match transfer {
            Transfer::Prelu => vec![T::from_f64_lossy(0.25); out_len],
            _ => Vec::new(),
        };
        Ok(ClnnLayer {
            order,
            in_len,
            out_len,
            weights,
            bias: vec![T::zero(); out_len],
            mask,
            transfer,
            alpha,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn in_len(&self) -> usize {
        self.in_len
    }

    pub fn out_len(&self) -> usize {
        self.out_len
    }

    /// Window width `d = 2n + 1`.
    pub fn window_width(&self) -> usize {
        2 * self.order + 1
    }

    pub fn mask(&self) -> Option<&BinaryMask> {
        self.mask.as_ref()
    }

    pub fn transfer(&self) -> Transfer {
        self.transfer
    }

    pub(crate) fn weights(&self) -> &[Matrix<T>] {
        &self.weights
    }

    pub(crate) fn bias(&self) -> &[T] {
        &self.bias
    }

    pub(crate) fn alpha(&self) -> &[T] {
        &self.alpha
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::with_capacity(self.weights.len() + 2);
        for w in &mut self.weights {
            out.push(w.data_mut());
        }
        out.push(self.bias.as_mut_slice());
        if !self.alpha.is_empty() {
            out.push(self.alpha.as_mut_slice());
        }
        out
    }

    /// The weight tensor actually applied to data: `W ∘ M` when masked,
    /// a copy of `W` otherwise.
    pub fn effective_weights(&self) -> Vec<Matrix<T>> {
        self.weights
            .iter()
            .map(|w| match &self.mask {
                Some(m) => {
                    let mut z = w.clone();
                    m.apply_in_place(&mut z);
                    z
                }
                None => w.clone(),
            })
            .collect()
    }

    fn check_segment(&self, segment: &Matrix<T>) -> Result<usize> {
        if segment.rows() != self.in_len {
            return Err(Error::ShapeMismatch {
                op: "layer input",
                lhs_rows: self.in_len,
                lhs_cols: self.window_width(),
                rhs_rows: segment.rows(),
                rhs_cols: segment.cols(),
            });
        }
        if segment.cols() < self.window_width() {
            return Err(Error::SegmentWidth {
                found: segment.cols(),
                required: self.window_width(),
                consumed: 2 * self.order,
                extra: 1,
            });
        }
        Ok(segment.cols() - 2 * self.order)
    }

    /// Forward pass over every valid center; the output is `2n` frames
    /// narrower than the input.
    pub fn forward(&self, segment: &Matrix<T>) -> Result<Matrix<T>> {
        let (out, _) = self.forward_cached(segment)?;
        Ok(out)
    }

    /// Forward pass that also returns the state [`Self::backward`] needs.
    pub fn forward_cached(&self, segment: &Matrix<T>) -> Result<(Matrix<T>, ClnnCache<T>)> {
        let eff = self.effective_weights();
        self.forward_with(&eff, segment)
    }

    /// Forward with caller-supplied effective weights (computed once per
    /// batch) returning the cache the backward pass needs.
    pub(crate) fn forward_with(
        &self,
        effective: &[Matrix<T>],
        segment: &Matrix<T>,
    ) -> Result<(Matrix<T>, ClnnCache<T>)> {
        let t_out = self.check_segment(segment)?;
        let mut pre = Matrix::from_fn(self.out_len, t_out, |j, _| self.bias[j]);
        for (u, w) in effective.iter().enumerate() {
            matmul_tn_window(w, segment, u, &mut pre);
        }
        let out = self.activate(&pre);
        Ok((out, ClnnCache { pre }))
    }

    fn activate(&self, pre: &Matrix<T>) -> Matrix<T> {
        match self.transfer {
            Transfer::Linear => pre.clone(),
            Transfer::Sigmoid => Matrix::from_fn(pre.rows(), pre.cols(), |i, j| {
                sigmoid(pre.get(i, j))
            }),
            Transfer::Prelu => Matrix::from_fn(pre.rows(), pre.cols(), |i, j| {
                let v = pre.get(i, j);
                if v > T::zero() {
                    v
                } else {
                    self.alpha[i] * v
                }
            }),
        }
    }

    /// Reverse-mode gradients for all parameters and the input. With a
    /// mask present, weight gradients are reported for the raw tensor;
    /// the chain rule through the masked product leaves masked positions
    /// at exactly zero.
    pub fn backward(
        &self,
        segment: &Matrix<T>,
        cache: &ClnnCache<T>,
        upstream: &Matrix<T>,
    ) -> Result<ClnnGradients<T>> {
        let eff = self.effective_weights();
        self.backward_with(&eff, segment, cache, upstream)
    }

    pub(crate) fn backward_with(
        &self,
        effective: &[Matrix<T>],
        segment: &Matrix<T>,
        cache: &ClnnCache<T>,
        upstream: &Matrix<T>,
    ) -> Result<ClnnGradients<T>> {
        let t_out = self.check_segment(segment)?;
        if upstream.rows() != self.out_len || upstream.cols() != t_out {
            return Err(Error::ShapeMismatch {
                op: "layer upstream gradient",
                lhs_rows: self.out_len,
                lhs_cols: t_out,
                rhs_rows: upstream.rows(),
                rhs_cols: upstream.cols(),
            });
        }

        let pre = &cache.pre;
        let mut grad_alpha = vec![T::zero(); self.alpha.len()];
        let dz = match self.transfer {
            Transfer::Linear => upstream.clone(),
            Transfer::Sigmoid => Matrix::from_fn(pre.rows(), pre.cols(), |i, j| {
                let s = sigmoid(pre.get(i, j));
                upstream.get(i, j) * s * (T::one() - s)
            }),
            Transfer::Prelu => {
                let mut dz = Matrix::zeros(pre.rows(), pre.cols());
                #[allow(clippy::needless_range_loop)]
                for i in 0..pre.rows() {
                    for j in 0..pre.cols() {
                        let z = pre.get(i, j);
                        let up = upstream.get(i, j);
                        if z > T::zero() {
                            dz.set(i, j, up);
                        } else {
                            dz.set(i, j, up * self.alpha[i]);
                            grad_alpha[i] += up * z;
                        }
                    }
                }
                dz
            }
        };

        let grad_bias: Vec<T> = (0..self.out_len)
            .map(|j| dz.row(j).iter().copied().sum())
            .collect();

        let mut grad_weights = Vec::with_capacity(self.weights.len());
        let mut grad_input = Matrix::zeros(self.in_len, segment.cols());
        for (u, w_eff) in effective.iter().enumerate() {
            let mut gw = Matrix::zeros(self.in_len, self.out_len);
            matmul_nt_window_acc(segment, u, &dz, &mut gw);
            if let Some(m) = &self.mask {
                m.apply_in_place(&mut gw);
            }
            grad_weights.push(gw);
            matmul_nn_window_acc(w_eff, &dz, &mut grad_input, u);
        }

        Ok(ClnnGradients {
            weights: grad_weights,
            bias: grad_bias,
            alpha: grad_alpha,
            input: grad_input,
        })
    }
}

/// Fully connected layer, `f(x W + b)`.
#[derive(Clone, Debug)]
pub struct DenseLayer<T> {
    weights: Matrix<T>,
    bias: Vec<T>,
    transfer: Transfer,
    alpha: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct DenseGradients<T> {
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
    pub alpha: Vec<T>,
    pub input: Vec<T>,
}

impl<T: Scalar> DenseLayer<T> {
    pub fn new(in_len: usize, out_len: usize, transfer: Transfer, rng: &mut SeededRng) -> Self {
        assert!(in_len > 0 && out_len > 0);
        let scale = (6.0 / (in_len + out_len) as f64).sqrt();
        let weights = Matrix::from_fn(in_len, out_len, |_, _| {
            T::from_f64_lossy(rng.uniform(-scale, scale))
        });
        let alpha = match transfer {
            Transfer::Prelu => vec![T::from_f64_lossy(0.25); out_len],
            _ => Vec::new(),
        };
        DenseLayer {
            weights,
            bias: vec![T::zero(); out_len],
            transfer,
            alpha,
        }
    }

    pub fn in_len(&self) -> usize {
        self.weights.rows()
    }

    pub fn out_len(&self) -> usize {
        self.weights.cols()
    }

    pub fn transfer(&self) -> Transfer {
        self.transfer
    }

    pub(crate) fn weights(&self) -> &Matrix<T> {
        &self.weights
    }

    pub(crate) fn bias(&self) -> &[T] {
        &self.bias
    }

    pub(crate) fn alpha(&self) -> &[T] {
        &self.alpha
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = vec![self.weights.data_mut(), self.bias.as_mut_slice()];
        if !self.alpha.is_empty() {
            out.push(self.alpha.as_mut_slice());
        }
        out
    }

    /// Returns `(pre_activation, output)`.
    pub fn forward(&self, x: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        if x.len() != self.in_len() {
            return Err(Error::ShapeMismatch {
                op: "dense input",
                lhs_rows: self.in_len(),
                lhs_cols: 1,
                rhs_rows: x.len(),
                rhs_cols: 1,
            });
        }
        let mut pre = self.bias.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi == T::zero() {
                continue;
            }
            for (p, &w) in pre.iter_mut().zip(self.weights.row(i).iter()) {
                *p += xi * w;
            }
        }
        let out = match self.transfer {
            Transfer::Linear => pre.clone(),
            Transfer::Sigmoid => pre.iter().map(|&z| sigmoid(z)).collect(),
            Transfer::Prelu => prelu(&pre, &self.alpha)?,
        };
        Ok((pre, out))
    }

    pub fn backward(&self, x: &[T], pre: &[T], upstream: &[T]) -> Result<DenseGradients<T>> {
        if upstream.len() != self.out_len() {
            return Err(Error::ShapeMismatch {
                op: "dense upstream gradient",
                lhs_rows: self.out_len(),
                lhs_cols: 1,
                rhs_rows: upstream.len(),
                rhs_cols: 1,
            });
        }
        let mut grad_alpha = vec![T::zero(); self.alpha.len()];
        let dz: Vec<T> = match self.transfer {
            Transfer::Linear => upstream.to_vec(),
            Transfer::Sigmoid => pre
                .iter()
                .zip(upstream.iter())
                .map(|(&z, &up)| {
                    let s = sigmoid(z);
                    up * s * (T::one() - s)
                })
                .collect(),
            Transfer::Prelu => pre
                .iter()
                .zip(upstream.iter())
                .enumerate()
                .map(|(j, (&z, &up))| {
                    if z > T::zero() {
                        up
                    } else {
                        grad_alpha[j] += up * z;
                        up * self.alpha[j]
                    }
                })
                .collect(),
        };

        let grad_weights = Matrix::from_fn(self.in_len(), self.out_len(), |i, j| x[i] * dz[j]);
        let grad_input: Vec<T> = (0..self.in_len())
            .map(|i| {
                self.weights
                    .row(i)
                    .iter()
                    .zip(dz.iter())
                    .map(|(&w, &d)| w * d)
                    .sum()
            })
            .collect();

        Ok(DenseGradients {
            weights: grad_weights,
            bias: dz,
            alpha: grad_alpha,
            input: grad_input,
        })
    }
}
