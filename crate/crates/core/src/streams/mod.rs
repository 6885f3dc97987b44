//! Data sources and batching.

mod csv_io;
mod hyperplane;
mod idx;
mod permute;
mod sea;
mod source;

pub use csv_io::{load_csv, write_csv, CsvOptions, LabelColumn, LoadedCsv};
pub use hyperplane::{gen_hyperplane, HyperplaneConcept, HyperplaneSpec};
pub use idx::{load_idx, parse_idx_images, parse_idx_labels};
pub use permute::{permute_drift, recurring_permutation_schedule, Permutation};
pub use sea::{gen_sea, sea_default_schedule};
pub use source::{BuiltStream, DatasetSpec, SelectionMode, SourceKind};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Mat;

/// Labeled rows with features in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub features: Mat,
    pub labels: Vec<usize>,
    pub classes: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.features.cols()
    }

    /// Keeps the first `count` rows.
    pub fn truncate(&mut self, count: usize) {
        if count >= self.len() {
            return;
        }
        let cols = self.features.cols();
        let data = self.features.as_slice()[..count * cols].to_vec();
        self.features = Mat::from_vec(count, cols, data).expect("prefix of a valid matrix");
        self.labels.truncate(count);
    }
}

/// Ordered `(start_sample, parameters)` segments; the first starts at 0 and
/// starts are strictly increasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftSchedule<P> {
    segments: Vec<(usize, P)>,
}

impl<P> DriftSchedule<P> {
    pub fn new(segments: Vec<(usize, P)>) -> Result<Self> {
        match segments.first() {
            None => return Err(Error::Config("drift schedule is empty".into())),
            Some((start, _)) if *start != 0 => {
                return Err(Error::Config(format!(
                    "drift schedule must start at sample 0, starts at {start}"
                )))
            }
            _ => {}
        }
        if segments.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Config(
                "drift schedule starts must be strictly increasing".into(),
            ));
        }
        Ok(DriftSchedule { segments })
    }

    pub fn constant(params: P) -> Self {
        DriftSchedule {
            segments: vec![(0, params)],
        }
    }

    pub fn segments(&self) -> &[(usize, P)] {
        &self.segments
    }

    /// Segment index active at `sample`.
    pub fn segment_at(&self, sample: usize) -> usize {
        self.segments.partition_point(|(s, _)| *s <= sample) - 1
    }

    pub fn at(&self, sample: usize) -> &P {
        &self.segments[self.segment_at(sample)].1
    }
}

/// How labels are revealed inside a batch.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// `⌈fraction·T⌉` rows chosen uniformly at batch construction.
    Random,
    /// Rows whose prediction confidence is below `delta`, decided during the
    /// test pass and capped at `⌈fraction·T⌉`.
    Confidence { delta: f64 },
}

/// Label-reveal rule applied by the evaluation loop once predictions for the
/// batch are known.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConfidenceRule {
    pub fraction: f64,
    pub delta: f64,
}

/// One timestamp of the stream.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamBatch {
    pub timestamp: usize,
    pub features: Mat,
    pub labels: Vec<usize>,
    pub labeled_mask: Vec<bool>,
    pub confidence_rule: Option<ConfidenceRule>,
}

impl StreamBatch {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labeled_count(&self) -> usize {
        self.labeled_mask.iter().filter(|&&m| m).count()
    }
}

fn reveal_count(fraction: f64, rows: usize) -> usize {
    ((fraction * rows as f64).ceil() as usize).min(rows)
}

/// Splits `data` into consecutive batches of `batch_size` rows, dropping any
/// incomplete tail.
pub fn batchify<R: Rng + ?Sized>(
    data: &Dataset,
    batch_size: usize,
    label_fraction: f64,
    selection: Selection,
    rng: &mut R,
) -> Result<Vec<StreamBatch>> {
    if batch_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    if !(label_fraction > 0.0 && label_fraction <= 1.0) {
        return Err(Error::Config(format!(
            "label fraction must lie in (0, 1], got {label_fraction}"
        )));
    }
    let cols = data.input_dim();
    let batches = data.len() / batch_size;
    let mut out = Vec::with_capacity(batches);
    for k in 0..batches {
        let lo = k * batch_size;
        let hi = lo + batch_size;
        let features = Mat::from_vec(
            batch_size,
            cols,
            data.features.as_slice()[lo * cols..hi * cols].to_vec(),
        )?;
        let labels = data.labels[lo..hi].to_vec();
        let (labeled_mask, confidence_rule) = match selection {
            Selection::Random if label_fraction >= 1.0 => (vec![true; batch_size], None),
            Selection::Random => {
                let mut mask = vec![false; batch_size];
                for i in index::sample(rng, batch_size, reveal_count(label_fraction, batch_size)) {
                    mask[i] = true;
                }
                (mask, None)
            }
            Selection::Confidence { delta } => (
                vec![false; batch_size],
                Some(ConfidenceRule {
                    fraction: label_fraction,
                    delta,
                }),
            ),
        };
        out.push(StreamBatch {
            timestamp: k,
            features,
            labels,
            labeled_mask,
            confidence_rule,
        });
    }
    Ok(out)
}

/// `y1 / (y1 + y2)` for the two largest class probabilities.
pub fn confidence(probabilities: &[f64]) -> f64 {
    let (mut y1, mut y2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &p in probabilities {
        if p > y1 {
            y2 = y1;
            y1 = p;
        } else if p > y2 {
            y2 = p;
        }
    }
    if y2 == f64::NEG_INFINITY {
        return 1.0;
    }
    y1 / (y1 + y2)
}

/// Reveals rows with confidence below `delta`, least confident first, at most
/// `⌈fraction·T⌉` of them.
pub fn confidence_mask(probabilities: &[Vec<f64>], rule: ConfidenceRule) -> Vec<bool> {
    let cap = reveal_count(rule.fraction, probabilities.len());
    let mut eligible: Vec<(f64, usize)> = probabilities
        .iter()
        .enumerate()
        .map(|(i, p)| (confidence(p), i))
        .filter(|(c, _)| *c < rule.delta)
        .collect();
    eligible.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut mask = vec![false; probabilities.len()];
    for &(_, i) in eligible.iter().take(cap) {
        mask[i] = true;
    }
    mask
}
