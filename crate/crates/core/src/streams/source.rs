use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{
    batchify, gen_hyperplane, gen_sea, load_csv, load_idx, permute_drift,
    recurring_permutation_schedule, sea_default_schedule, CsvOptions, Dataset, HyperplaneSpec,
    LabelColumn, Selection, StreamBatch,
};
use crate::error::{Error, Result};
use crate::numerics::Seed;

const DATA_STREAM: u64 = 0x6461_7461;
const REVEAL_STREAM: u64 = 0x7265_766c;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Sea,
    Hyperplane,
    Csv,
    Idx,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    #[default]
    Random,
    Confidence,
}

/// Where the stream comes from and how it is cut into labeled batches.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub source: SourceKind,
    /// Total samples; generators default to 100k (SEA) / 120k (hyperplane),
    /// files default to every row. Truncated to a whole number of batches.
    pub samples: Option<usize>,
    pub batch_size: usize,
    pub label_fraction: f64,
    pub selection: SelectionMode,
    pub delta: f64,
    pub hyperplane_dim: usize,
    pub csv_path: Option<PathBuf>,
    /// Zero-based label column; the last column when absent.
    pub label_column: Option<usize>,
    pub has_header: Option<bool>,
    pub bounds: Option<Vec<(f64, f64)>>,
    pub idx_images: Option<PathBuf>,
    pub idx_labels: Option<PathBuf>,
    /// Number of pixel permutations injected as recurring drift (0 = none).
    pub permutations: usize,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            source: SourceKind::Sea,
            samples: None,
            batch_size: 1000,
            label_fraction: 1.0,
            selection: SelectionMode::Random,
            delta: 0.7,
            hyperplane_dim: 4,
            csv_path: None,
            label_column: None,
            has_header: None,
            bounds: None,
            idx_images: None,
            idx_labels: None,
            permutations: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BuiltStream {
    pub batches: Vec<StreamBatch>,
    pub input_dim: usize,
    pub classes: usize,
}

impl DatasetSpec {
    pub fn sea() -> Self {
        DatasetSpec::default()
    }

    pub fn hyperplane() -> Self {
        DatasetSpec {
            source: SourceKind::Hyperplane,
            ..DatasetSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.label_fraction > 0.0 && self.label_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "label_fraction must lie in (0, 1], got {}",
                self.label_fraction
            )));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::Config(format!(
                "delta must lie in (0, 1], got {}",
                self.delta
            )));
        }
        if let Some(s) = self.samples {
            if s < self.batch_size {
                return Err(Error::Config(format!(
                    "samples ({s}) smaller than one batch ({})",
                    self.batch_size
                )));
            }
        }
        match self.source {
            SourceKind::Hyperplane if self.hyperplane_dim == 0 => {
                Err(Error::Config("hyperplane_dim must be at least 1".into()))
            }
            SourceKind::Csv if self.csv_path.is_none() => {
                Err(Error::Config("csv source needs csv_path".into()))
            }
            SourceKind::Idx if self.idx_images.is_none() || self.idx_labels.is_none() => Err(
                Error::Config("idx source needs idx_images and idx_labels".into()),
            ),
            _ => Ok(()),
        }
    }

    /// Generates or loads the rows, without batching.
    pub fn dataset(&self, seed: u64) -> Result<Dataset> {
        self.validate()?;
        let mut rng = Seed(seed).rng(DATA_STREAM);
        let mut data = match self.source {
            SourceKind::Sea => {
                let total = self.samples.unwrap_or(100_000);
                gen_sea(total, &sea_default_schedule(total), &mut rng)
            }
            SourceKind::Hyperplane => {
                let total = self.samples.unwrap_or(120_000);
                let spec = HyperplaneSpec::random(self.hyperplane_dim, total, &mut rng);
                gen_hyperplane(total, &spec, &mut rng)?
            }
            SourceKind::Csv => {
                let opts = CsvOptions {
                    label_column: self
                        .label_column
                        .map_or(LabelColumn::Last, LabelColumn::Index),
                    has_header: self.has_header,
                    bounds: self.bounds.clone(),
                    label_names: None,
                };
                let path = self.csv_path.as_ref().expect("validated");
                load_csv(path, &opts)?.dataset
            }
            SourceKind::Idx => {
                let mut d = load_idx(
                    self.idx_images.as_ref().expect("validated"),
                    self.idx_labels.as_ref().expect("validated"),
                )?;
                if self.permutations > 0 {
                    let sched = recurring_permutation_schedule(
                        d.len(),
                        d.input_dim(),
                        self.permutations,
                        &mut rng,
                    );
                    permute_drift(&mut d, &sched)?;
                }
                d
            }
        };
        if let Some(s) = self.samples {
            data.truncate(s);
        }
        Ok(data)
    }

    pub fn build(&self, seed: u64) -> Result<BuiltStream> {
        let data = self.dataset(seed)?;
        let selection = match self.selection {
            SelectionMode::Random => Selection::Random,
            SelectionMode::Confidence => Selection::Confidence { delta: self.delta },
        };
        let mut rng = Seed(seed).rng(REVEAL_STREAM);
        let batches = batchify(
            &data,
            self.batch_size,
            self.label_fraction,
            selection,
            &mut rng,
        )?;
        if batches.is_empty() {
            return Err(Error::Config(format!(
                "{} rows do not fill a batch of {}",
                data.len(),
                self.batch_size
            )));
        }
        Ok(BuiltStream {
            batches,
            input_dim: data.input_dim(),
            classes: data.classes,
        })
    }
}
