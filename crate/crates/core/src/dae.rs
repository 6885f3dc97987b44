//! Tied-weight denoising autoencoder with a variable number of hidden units.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{sigmoid, vec_mat, vec_mat_t, xavier_draw, Mat};

/// Masking-noise corruption: zero `round(fraction * n)` coordinates per sample
/// (at least one when `fraction > 0`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub fraction: f64,
}

impl Default for MaskSpec {
    fn default() -> Self {
        MaskSpec { fraction: 0.10 }
    }
}

impl MaskSpec {
    pub fn masked_count(&self, n: usize) -> usize {
        if self.fraction <= 0.0 || n == 0 {
            return 0;
        }
        ((self.fraction * n as f64).round() as usize).clamp(1, n)
    }

    pub fn apply<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Vec<f64> {
        let mut out = x.to_vec();
        let k = self.masked_count(x.len());
        if k > 0 {
            for i in index::sample(rng, x.len(), k) {
                out[i] = 0.0;
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerativeGrads {
    pub weights: Mat,
    pub enc_bias: Vec<f64>,
    pub dec_bias: Vec<f64>,
}

/// Forward quantities of one corrupted sample, kept for backprop.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub pre_activation: Vec<f64>,
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

/// Encoder `y = s(x W + b)`, decoder `z = s(y Wᵀ + c)`. `W` is `n × R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DaeLayer {
    weights: Mat,
    enc_bias: Vec<f64>,
    dec_bias: Vec<f64>,
}

impl DaeLayer {
    pub fn new(weights: Mat, enc_bias: Vec<f64>, dec_bias: Vec<f64>) -> Result<Self> {
        if weights.cols() == 0 {
            return Err(Error::Config("hidden width must be at least 1".into()));
        }
        if enc_bias.len() != weights.cols() {
            return Err(Error::Dimension {
                context: "encoder bias",
                expected: weights.cols(),
                actual: enc_bias.len(),
            });
        }
        if dec_bias.len() != weights.rows() {
            return Err(Error::Dimension {
                context: "decoder bias",
                expected: weights.rows(),
                actual: dec_bias.len(),
            });
        }
        if !weights.is_finite() || !all_finite(&enc_bias) || !all_finite(&dec_bias) {
            return Err(Error::NonFinite {
                block: "layer parameters",
                sample: None,
            });
        }
        Ok(DaeLayer {
            weights,
            enc_bias,
            dec_bias,
        })
    }

    /// Single hidden unit with Xavier weights and zero biases.
    pub fn initial<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let weights = Mat::from_fn(n, 1, |_, _| xavier_draw(n, 1, rng));
        DaeLayer {
            weights,
            enc_bias: vec![0.0],
            dec_bias: vec![0.0; n],
        }
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.weights.rows()
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.weights.cols()
    }

    pub fn weights(&self) -> &Mat {
        &self.weights
    }

    pub fn enc_bias(&self) -> &[f64] {
        &self.enc_bias
    }

    pub fn dec_bias(&self) -> &[f64] {
        &self.dec_bias
    }

    pub(crate) fn weights_mut(&mut self) -> &mut Mat {
        &mut self.weights
    }

    pub(crate) fn enc_bias_mut(&mut self) -> &mut [f64] {
        &mut self.enc_bias
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                context: "layer input",
                expected: self.input_dim(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// `x W + b` without the dimension check.
    pub(crate) fn pre_activation_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut a = vec_mat(x, &self.weights);
        for (v, b) in a.iter_mut().zip(&self.enc_bias) {
            *v += b;
        }
        a
    }

    pub fn pre_activation(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.pre_activation_unchecked(x))
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.pre_activation(x)?.into_iter().map(sigmoid).collect())
    }

    pub fn decode(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.width() {
            return Err(Error::Dimension {
                context: "decoder input",
                expected: self.width(),
                actual: y.len(),
            });
        }
        Ok(self.decode_unchecked(y))
    }

    pub(crate) fn decode_unchecked(&self, y: &[f64]) -> Vec<f64> {
        vec_mat_t(y, &self.weights)
            .into_iter()
            .zip(&self.dec_bias)
            .map(|(v, c)| sigmoid(v + c))
            .collect()
    }

    pub fn reconstruct(&self, x_tilde: &[f64]) -> Result<Reconstruction> {
        let pre_activation = self.pre_activation(x_tilde)?;
        let hidden: Vec<f64> = pre_activation.iter().map(|&a| sigmoid(a)).collect();
        let output = self.decode_unchecked(&hidden);
        Ok(Reconstruction {
            pre_activation,
            hidden,
            output,
        })
    }

    /// Gradients of `½ Σ (x - z)²` with `z` reconstructed from `x_tilde`.
    /// The tied weight collects both the encoder and the decoder path.
    pub fn generative_gradients(
        &self,
        x: &[f64],
        x_tilde: &[f64],
    ) -> Result<(GenerativeGrads, f64)> {
        self.check_input(x)?;
        let fwd = self.reconstruct(x_tilde)?;
        Ok(self.gradients_from(x, x_tilde, &fwd))
    }

    pub(crate) fn gradients_from(
        &self,
        x: &[f64],
        x_tilde: &[f64],
        fwd: &Reconstruction,
    ) -> (GenerativeGrads, f64) {
        let (n, r) = (self.input_dim(), self.width());
        let mut loss = 0.0;
        // dL/d(decoder pre-activation)
        let d_out: Vec<f64> = fwd
            .output
            .iter()
            .zip(x)
            .map(|(&z, &xv)| {
                loss += 0.5 * (xv - z) * (xv - z);
                (z - xv) * z * (1.0 - z)
            })
            .collect();
        // dL/dy = d_out · W
        let d_hidden = vec_mat(&d_out, &self.weights);
        let d_pre: Vec<f64> = d_hidden
            .iter()
            .zip(&fwd.hidden)
            .map(|(&g, &y)| g * y * (1.0 - y))
            .collect();

        let mut dw = Mat::zeros(n, r);
        for j in 0..n {
            let (dj, xj) = (d_out[j], x_tilde[j]);
            for (i, w) in dw.row_mut(j).iter_mut().enumerate() {
                *w = dj * fwd.hidden[i] + xj * d_pre[i];
            }
        }
        (
            GenerativeGrads {
                weights: dw,
                enc_bias: d_pre,
                dec_bias: d_out,
            },
            loss,
        )
    }

    /// Plain SGD on `(W, b, c)`.
    pub fn apply_generative(&mut self, grads: &GenerativeGrads, lr: f64) -> Result<()> {
        if !grads.weights.is_finite() {
            return Err(non_finite("generative weight gradient"));
        }
        if !all_finite(&grads.enc_bias) {
            return Err(non_finite("generative encoder bias gradient"));
        }
        if !all_finite(&grads.dec_bias) {
            return Err(non_finite("generative decoder bias gradient"));
        }
        for (w, g) in self
            .weights
            .as_mut_slice()
            .iter_mut()
            .zip(grads.weights.as_slice())
        {
            *w -= lr * g;
        }
        for (b, g) in self.enc_bias.iter_mut().zip(&grads.enc_bias) {
            *b -= lr * g;
        }
        for (c, g) in self.dec_bias.iter_mut().zip(&grads.dec_bias) {
            *c -= lr * g;
        }
        Ok(())
    }

    /// Adds a hidden unit whose weight column is the negated residual and
    /// whose bias is uniform on `[-1, 1]`.
    pub fn grow_generative<R: Rng + ?Sized>(&mut self, residual: &[f64], rng: &mut R) {
        let column: Vec<f64> = residual.iter().map(|e| -e).collect();
        let bias = rng.gen_range(-1.0..=1.0);
        self.push_node(&column, bias);
    }

    pub fn push_node(&mut self, column: &[f64], bias: f64) {
        self.weights.push_col(column);
        self.enc_bias.push(bias);
    }

    pub fn prune_node(&mut self, index: usize) -> Result<()> {
        let width = self.width();
        if width <= 1 {
            return Err(Error::LastHiddenUnit);
        }
        if index >= width {
            return Err(Error::NodeIndex { index, width });
        }
        self.weights.remove_col(index);
        self.enc_bias.remove(index);
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.weights.is_finite() && all_finite(&self.enc_bias) && all_finite(&self.dec_bias)
    }
}

pub(crate) fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn non_finite(block: &'static str) -> Error {
    Error::NonFinite {
        block,
        sample: None,
    }
}
