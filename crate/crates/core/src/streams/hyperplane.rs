use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{dot, Mat};

/// Label 1 when `w · x > w0`, label 0 otherwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneConcept {
    pub weights: Vec<f64>,
    pub offset: f64,
}

impl HyperplaneConcept {
    /// Weights uniform on `[0, 1]`, offset at half their sum so the classes
    /// are balanced under uniform inputs.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let weights: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        let offset = 0.5 * weights.iter().sum::<f64>();
        HyperplaneConcept { weights, offset }
    }

    pub fn label(&self, x: &[f64]) -> usize {
        (dot(&self.weights, x) > self.offset) as usize
    }
}

/// Gradual drift from `initial` to `target`: each sample follows `target`
/// with a probability that ramps linearly from 0 at `ramp_start` to 1 at
/// `ramp_end`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneSpec {
    pub initial: HyperplaneConcept,
    pub target: HyperplaneConcept,
    pub ramp_start: usize,
    pub ramp_end: usize,
}

impl HyperplaneSpec {
    /// Two random concepts, ramp over the middle third of `total` samples.
    pub fn random<R: Rng + ?Sized>(dim: usize, total: usize, rng: &mut R) -> Self {
        let initial = HyperplaneConcept::random(dim, rng);
        let target = HyperplaneConcept::random(dim, rng);
        HyperplaneSpec {
            initial,
            target,
            ramp_start: total / 3,
            ramp_end: 2 * total / 3,
        }
    }

    pub fn dim(&self) -> usize {
        self.initial.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 || self.target.weights.len() != self.dim() {
            return Err(Error::Config(
                "hyperplane concepts need equal, non-zero dimension".into(),
            ));
        }
        if self.ramp_end < self.ramp_start {
            return Err(Error::Config(
                "hyperplane ramp ends before it starts".into(),
            ));
        }
        Ok(())
    }

    /// Probability that sample `t` follows the target concept.
    pub fn mix_probability(&self, t: usize) -> f64 {
        if t < self.ramp_start {
            0.0
        } else if t >= self.ramp_end {
            1.0
        } else {
            (t - self.ramp_start) as f64 / (self.ramp_end - self.ramp_start) as f64
        }
    }
}

pub fn gen_hyperplane<R: Rng + ?Sized>(
    count: usize,
    spec: &HyperplaneSpec,
    rng: &mut R,
) -> Result<Dataset> {
    spec.validate()?;
    let d = spec.dim();
    let mut data = Vec::with_capacity(count * d);
    let mut labels = Vec::with_capacity(count);
    for t in 0..count {
        let x: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let use_target = rng.gen::<f64>() < spec.mix_probability(t);
        let concept = if use_target {
            &spec.target
        } else {
            &spec.initial
        };
        labels.push(concept.label(&x));
        data.extend_from_slice(&x);
    }
    Ok(Dataset {
        features: Mat::from_vec(count, d, data)?,
        labels,
        classes: 2,
    })
}
