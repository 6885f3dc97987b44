//! Network significance: probit-approximated expectations of the network
//! output, their bias²/variance decomposition, and the sigma-rule trackers
//! that turn those streams into grow and prune decisions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dae::DaeLayer;
use crate::error::{Error, Result};
use crate::numerics::{sigmoid, softmax_row, vec_mat, vec_mat_t, Mat, RunningMoment};

/// `E[s(A)]` for `A ~ N(mu, sigma²)` through the probit approximation of the
/// sigmoid.
#[inline]
pub fn expected_activation(mu: f64, sigma: f64) -> f64 {
    sigmoid(mu / (1.0 + PI * sigma * sigma / 8.0).sqrt())
}

/// Confidence factor of the growing rule, in `(0.7, 2.0]`.
#[inline]
pub fn kappa(bias2: f64) -> f64 {
    1.3 * (-bias2).exp() + 0.7
}

/// Confidence factor of the pruning rule, in `(0.7, 2.0]`. Negative variance
/// estimates are treated as zero.
#[inline]
pub fn chi(variance: f64) -> f64 {
    1.3 * (-variance.max(0.0)).exp() + 0.7
}

/// Running moments of each hidden unit's pre-activation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    nodes: Vec<RunningMoment>,
}

impl NodeStats {
    pub fn new(width: usize) -> Self {
        NodeStats {
            nodes: vec![RunningMoment::new(); width],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &RunningMoment {
        &self.nodes[i]
    }

    pub fn update(&mut self, pre_activation: &[f64]) -> Result<()> {
        if pre_activation.len() != self.nodes.len() {
            return Err(Error::Dimension {
                context: "node statistics",
                expected: self.nodes.len(),
                actual: pre_activation.len(),
            });
        }
        for (m, &a) in self.nodes.iter_mut().zip(pre_activation) {
            m.push(a);
        }
        Ok(())
    }

    pub fn push_node(&mut self) {
        self.nodes.push(RunningMoment::new());
    }

    pub fn remove_node(&mut self, index: usize) {
        self.nodes.remove(index);
    }

    /// True when no node has seen a sample yet.
    pub fn is_unobserved(&self) -> bool {
        self.nodes.iter().all(|m| m.count() == 0)
    }

    /// `E[y_i]` per node. A node with no observations contributes `s(0)`.
    pub fn expectations(&self) -> Vec<f64> {
        self.nodes
            .iter()
            .map(|m| expected_activation(m.mean(), m.std()))
            .collect()
    }
}

/// Hidden-unit significance: expected activation of every node.
pub fn hidden_significance(stats: &NodeStats) -> Vec<f64> {
    stats.expectations()
}

/// Index of the least significant unit, lowest index on ties.
pub fn weakest_node(significance: &[f64]) -> Result<usize> {
    if significance.len() < 2 {
        return Err(Error::TooFewNodes(significance.len()));
    }
    let mut best = 0;
    for (i, &v) in significance.iter().enumerate().skip(1) {
        if v < significance[best] {
            best = i;
        }
    }
    Ok(best)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NsSnapshot {
    pub ey: Vec<f64>,
    /// `E[z]` (generative) or `E[Ĉ]` (discriminative)
    pub ez: Vec<f64>,
    /// `E[z²]` (generative) or `E[Ĉ²]` (discriminative)
    pub ez2: Vec<f64>,
    pub bias2: f64,
    pub variance: f64,
    pub ns: f64,
}

impl NsSnapshot {
    fn assemble(ey: Vec<f64>, ez: Vec<f64>, ez2: Vec<f64>, target: &[f64]) -> Self {
        let dims = target.len() as f64;
        let bias2 = target
            .iter()
            .zip(&ez)
            .map(|(t, e)| (t - e) * (t - e))
            .sum::<f64>()
            / dims;
        let variance = ez2.iter().zip(&ez).map(|(e2, e)| e2 - e * e).sum::<f64>() / dims;
        NsSnapshot {
            ey,
            ez,
            ez2,
            bias2,
            variance,
            ns: bias2 + variance,
        }
    }
}

/// Reconstruction significance of the autoencoder against clean input `x`.
pub fn snapshot_generative(layer: &DaeLayer, stats: &NodeStats, x: &[f64]) -> Result<NsSnapshot> {
    check_stats(stats, layer.width())?;
    if x.len() != layer.input_dim() {
        return Err(Error::Dimension {
            context: "significance target",
            expected: layer.input_dim(),
            actual: x.len(),
        });
    }
    let ey = stats.expectations();
    let ey_sq: Vec<f64> = ey.iter().map(|v| v * v).collect();
    let decode = |h: &[f64]| -> Vec<f64> {
        vec_mat_t(h, layer.weights())
            .into_iter()
            .zip(layer.dec_bias())
            .map(|(v, c)| sigmoid(v + c))
            .collect()
    };
    let ez = decode(&ey);
    let ez2 = decode(&ey_sq);
    Ok(NsSnapshot::assemble(ey, ez, ez2, x))
}

/// Predictive significance of the softmax head against a one-hot target.
pub fn snapshot_discriminative(
    theta: &Mat,
    eta: &[f64],
    stats: &NodeStats,
    target: &[f64],
) -> Result<NsSnapshot> {
    check_stats(stats, theta.rows())?;
    if target.len() != theta.cols() {
        return Err(Error::Dimension {
            context: "significance target",
            expected: theta.cols(),
            actual: target.len(),
        });
    }
    let ey = stats.expectations();
    let ey_sq: Vec<f64> = ey.iter().map(|v| v * v).collect();
    let head = |h: &[f64]| -> Vec<f64> {
        let mut logits = vec_mat(h, theta);
        for (l, e) in logits.iter_mut().zip(eta) {
            *l += e;
        }
        softmax_row(&logits)
    };
    let ez = head(&ey);
    let ez2 = head(&ey_sq);
    Ok(NsSnapshot::assemble(ey, ez, ez2, target))
}

fn check_stats(stats: &NodeStats, width: usize) -> Result<()> {
    if stats.len() != width {
        return Err(Error::Dimension {
            context: "node statistics",
            expected: width,
            actual: stats.len(),
        });
    }
    if stats.is_unobserved() {
        return Err(Error::EmptyStats);
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetMode {
    /// Clear only the minimum levels.
    #[default]
    Standard,
    /// Clear the minimum levels and the running moments.
    ResetAll,
}

/// Sigma-rule monitor over a scalar stream: running mean/std plus the lowest
/// mean and lowest std seen since the last reset.
///
/// The minima are seeded from the first observation after a reset at which
/// the running moment holds at least two samples, so the std is defined.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpcTracker {
    current: RunningMoment,
    min: Option<MinLevel>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct MinLevel {
    mean: f64,
    std: f64,
}

impl SpcTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Tracker with explicit state, for tests and replay.
    pub fn from_parts(current: RunningMoment, min_mean: f64, min_std: f64) -> Self {
        SpcTracker {
            current,
            min: Some(MinLevel {
                mean: min_mean,
                std: min_std,
            }),
        }
    }

    pub fn update(&mut self, x: f64) {
        self.current.push(x);
        if self.current.count() < 2 {
            return;
        }
        let (mean, std) = (self.current.mean(), self.current.std());
        match &mut self.min {
            None => self.min = Some(MinLevel { mean, std }),
            Some(level) => {
                level.mean = level.mean.min(mean);
                level.std = level.std.min(std);
            }
        }
    }

    pub fn reset(&mut self, mode: ResetMode) {
        self.min = None;
        if mode == ResetMode::ResetAll {
            self.current = RunningMoment::new();
        }
    }

    pub fn current(&self) -> &RunningMoment {
        &self.current
    }

    pub fn mean(&self) -> f64 {
        self.current.mean()
    }

    pub fn std(&self) -> f64 {
        self.current.std()
    }

    pub fn min_mean(&self) -> Option<f64> {
        self.min.map(|m| m.mean)
    }

    pub fn min_std(&self) -> Option<f64> {
        self.min.map(|m| m.std)
    }

    /// `mean + std >= min_mean + factor * min_std`; false until seeded.
    pub fn exceeds(&self, factor: f64) -> bool {
        match self.min {
            Some(level) => self.mean() + self.std() >= level.mean + factor * level.std,
            None => false,
        }
    }
}

/// Growing rule, evaluated after the tracker saw `bias2_now`.
pub fn should_grow(tracker: &SpcTracker, bias2_now: f64) -> bool {
    tracker.exceeds(kappa(bias2_now))
}

/// Pruning rule, evaluated after the tracker saw `variance_now`. Never prunes
/// on a step that grew or below one hidden unit.
pub fn should_prune(
    tracker: &SpcTracker,
    variance_now: f64,
    grew_this_step: bool,
    width: usize,
) -> bool {
    !grew_this_step && width > 1 && tracker.exceeds(2.0 * chi(variance_now))
}
