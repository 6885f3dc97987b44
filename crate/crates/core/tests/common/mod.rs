//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use devdan::model::SoftmaxHead;
use devdan::numerics::StreamRng;
use devdan::{DaeLayer, Mat};
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub const FD_STEP: f64 = 1e-6;
pub const FD_REL_TOL: f64 = 1e-5;
/// Absolute floor for entries whose true value is at roundoff level.
pub const FD_ABS_FLOOR: f64 = 1e-9;

fn logistic(a: f64) -> f64 {
    1.0 / (1.0 + (-a).exp())
}

/// Flat parameters of a small network: `W` (n × r, row-major), `b`, `c`,
/// `Θ` (r × m, row-major), `η`.
#[derive(Clone, Debug)]
pub struct Params {
    pub n: usize,
    pub r: usize,
    pub m: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub theta: Vec<f64>,
    pub eta: Vec<f64>,
}

impl Params {
    pub fn random(rng: &mut StreamRng) -> Self {
        let n = rng.gen_range(2..=6);
        let r = rng.gen_range(1..=5);
        let m = rng.gen_range(2..=4);
        let mut draw =
            |k: usize| -> Vec<f64> { (0..k).map(|_| rng.gen_range(-1.5..1.5)).collect() };
        Params {
            n,
            r,
            m,
            w: draw(n * r),
            b: draw(r),
            c: draw(n),
            theta: draw(r * m),
            eta: draw(m),
        }
    }

    pub fn layer(&self) -> DaeLayer {
        DaeLayer::new(
            Mat::from_vec(self.n, self.r, self.w.clone()).unwrap(),
            self.b.clone(),
            self.c.clone(),
        )
        .unwrap()
    }

    pub fn head(&self) -> SoftmaxHead {
        SoftmaxHead::new(
            Mat::from_vec(self.r, self.m, self.theta.clone()).unwrap(),
            self.eta.clone(),
        )
        .unwrap()
    }

    pub fn hidden(&self, x: &[f64]) -> Vec<f64> {
        (0..self.r)
            .map(|i| {
                let a: f64 = (0..self.n)
                    .map(|j| x[j] * self.w[j * self.r + i])
                    .sum::<f64>()
                    + self.b[i];
                logistic(a)
            })
            .collect()
    }

    /// `½ Σ (x − z)²` with `z` decoded through the transposed encoder weights.
    pub fn reconstruction_loss(&self, x: &[f64], x_tilde: &[f64]) -> f64 {
        let y = self.hidden(x_tilde);
        (0..self.n)
            .map(|j| {
                let a: f64 = (0..self.r)
                    .map(|i| y[i] * self.w[j * self.r + i])
                    .sum::<f64>()
                    + self.c[j];
                let z = logistic(a);
                0.5 * (x[j] - z) * (x[j] - z)
            })
            .sum()
    }

    pub fn cross_entropy(&self, x: &[f64], label: usize) -> f64 {
        let y = self.hidden(x);
        let logits: Vec<f64> = (0..self.m)
            .map(|k| {
                (0..self.r)
                    .map(|i| y[i] * self.theta[i * self.m + k])
                    .sum::<f64>()
                    + self.eta[k]
            })
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_norm = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        log_norm - logits[label]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Block {
    W,
    B,
    C,
    Theta,
    Eta,
}

fn block_mut(p: &mut Params, block: Block) -> &mut Vec<f64> {
    match block {
        Block::W => &mut p.w,
        Block::B => &mut p.b,
        Block::C => &mut p.c,
        Block::Theta => &mut p.theta,
        Block::Eta => &mut p.eta,
    }
}

/// Central differences of `loss` with respect to every entry of `block`.
pub fn central_differences(p: &Params, block: Block, loss: impl Fn(&Params) -> f64) -> Vec<f64> {
    let len = block_mut(&mut p.clone(), block).len();
    (0..len)
        .map(|i| {
            let mut plus = p.clone();
            block_mut(&mut plus, block)[i] += FD_STEP;
            let mut minus = p.clone();
            block_mut(&mut minus, block)[i] -= FD_STEP;
            (loss(&plus) - loss(&minus)) / (2.0 * FD_STEP)
        })
        .collect()
}

/// Largest violation of `|a − fd| ≤ tol · max(|a|, |fd|)`, with an absolute
/// floor for near-zero entries; `None` when every entry passes.
pub fn gradient_mismatch(analytic: &[f64], numeric: &[f64]) -> Option<(usize, f64, f64)> {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .enumerate()
        .find(|(_, (&a, &f))| {
            let diff = (a - f).abs();
            diff > FD_ABS_FLOOR && diff > FD_REL_TOL * a.abs().max(f.abs())
        })
        .map(|(i, (&a, &f))| (i, a, f))
}

pub fn random_input(n: usize, rng: &mut StreamRng) -> Vec<f64> {
    (0..n).map(|_| rng.gen::<f64>()).collect()
}

/// Monte-Carlo estimate of `E[s(A)]` for `A ~ N(μ, σ²)`.
pub fn mc_expected_sigmoid(mu: f64, sigma: f64, samples: usize, rng: &mut StreamRng) -> f64 {
    let normal = Normal::new(mu, sigma).unwrap();
    (0..samples)
        .map(|_| logistic(normal.sample(rng)))
        .sum::<f64>()
        / samples as f64
}

/// Two-pass population mean and standard deviation.
pub fn two_pass(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
