//! Test-then-train evaluation over a batched stream, single runs and suites.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DevdanConfig, DevdanModel};
use crate::streams::{confidence_mask, DatasetSpec, StreamBatch};

pub const BATCH_CSV_HEADER: &str = "k,cr,gen_loss,disc_loss,R,grows,prunes,train_s,test_s";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchMetrics {
    pub k: usize,
    /// Fraction of the batch classified correctly before training on it.
    pub cr: f64,
    pub gen_loss: f64,
    pub disc_loss: f64,
    #[serde(rename = "R")]
    pub width: usize,
    pub grows: usize,
    pub prunes: usize,
    pub labeled: usize,
    pub train_s: f64,
    pub test_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrequentialReport {
    pub batches: Vec<BatchMetrics>,
    pub mean_cr: f64,
    /// Sample standard deviation of per-batch rates.
    pub std_cr: f64,
    pub final_width: usize,
    pub parameter_count: usize,
    pub train_s: f64,
    pub test_s: f64,
}

/// Hooks around each phase of the loop; all default to no-ops.
pub trait Observer {
    fn before_test(&mut self, _k: usize, _model: &DevdanModel) {}
    fn after_test(&mut self, _k: usize, _model: &DevdanModel) {}
    fn after_train(&mut self, _k: usize, _model: &DevdanModel, _metrics: &BatchMetrics) {}
}

impl Observer for () {}

/// Weights, biases and head entries of a network with `width` hidden units.
pub fn parameter_count(input_dim: usize, width: usize, classes: usize) -> usize {
    input_dim * width + width + input_dim + width * classes + classes
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample (n − 1) standard deviation; 0 for fewer than two values.
pub fn sample_std(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

fn check_stream(model: &DevdanModel, stream: &[StreamBatch]) -> Result<()> {
    for b in stream {
        if b.features.cols() != model.input_dim() {
            return Err(Error::Dimension {
                context: "stream features",
                expected: model.input_dim(),
                actual: b.features.cols(),
            });
        }
        if let Some(&label) = b.labels.iter().find(|&&l| l >= model.classes()) {
            return Err(Error::Label {
                label,
                classes: model.classes(),
            });
        }
    }
    Ok(())
}

pub fn run_prequential(
    model: &mut DevdanModel,
    stream: &[StreamBatch],
) -> Result<PrequentialReport> {
    run_prequential_observed(model, stream, &mut ())
}

/// Predicts every row of batch `k` with the model trained on batches `< k`,
/// then trains on batch `k`. The whole stream is validated before the first
/// update.
pub fn run_prequential_observed<O: Observer + ?Sized>(
    model: &mut DevdanModel,
    stream: &[StreamBatch],
    observer: &mut O,
) -> Result<PrequentialReport> {
    check_stream(model, stream)?;
    let mut batches = Vec::with_capacity(stream.len());
    for (k, batch) in stream.iter().enumerate() {
        observer.before_test(k, model);
        let started = Instant::now();
        let mut correct = 0usize;
        let mut probabilities = Vec::with_capacity(batch.len());
        for (row, &label) in batch.features.iter_rows().zip(&batch.labels) {
            let p = model.predict(row)?;
            correct += (p.class == label) as usize;
            if batch.confidence_rule.is_some() {
                probabilities.push(p.probabilities);
            }
        }
        let test_s = started.elapsed().as_secs_f64();
        observer.after_test(k, model);

        let mask = match batch.confidence_rule {
            Some(rule) => confidence_mask(&probabilities, rule),
            None => batch.labeled_mask.clone(),
        };
        let started = Instant::now();
        let report = model.train_rows(&batch.features, &batch.labels, &mask)?;
        let train_s = started.elapsed().as_secs_f64();

        let metrics = BatchMetrics {
            k,
            cr: correct as f64 / batch.len().max(1) as f64,
            gen_loss: report.generative_loss,
            disc_loss: report.discriminative_loss,
            width: report.width,
            grows: report.grows,
            prunes: report.prunes,
            labeled: report.discriminative_steps,
            train_s,
            test_s,
        };
        observer.after_train(k, model, &metrics);
        batches.push(metrics);
    }
    let rates: Vec<f64> = batches.iter().map(|b| b.cr).collect();
    Ok(PrequentialReport {
        mean_cr: mean(&rates),
        std_cr: sample_std(&rates),
        final_width: model.width(),
        parameter_count: model.parameter_count(),
        train_s: batches.iter().map(|b| b.train_s).sum(),
        test_s: batches.iter().map(|b| b.test_s).sum(),
        batches,
    })
}

/// Per-batch CSV. With `timing` off the two timing columns are written as 0
/// so that identical runs produce identical files.
pub fn write_batch_csv<W: Write>(
    report: &PrequentialReport,
    mut out: W,
    timing: bool,
) -> Result<()> {
    writeln!(out, "{BATCH_CSV_HEADER}")?;
    for b in &report.batches {
        let (tr, te) = if timing {
            (b.train_s, b.test_s)
        } else {
            (0.0, 0.0)
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{},{:.6},{:.6}",
            b.k, b.cr, b.gen_loss, b.disc_loss, b.width, b.grows, b.prunes, tr, te
        )?;
    }
    out.flush()?;
    Ok(())
}

/// One configuration of a suite: a stream recipe and a model configuration.
/// The model seed is replaced by each run's seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub name: String,
    pub dataset: DatasetSpec,
    pub model: DevdanConfig,
}

#[derive(Clone, Debug)]
pub struct RunRecord {
    pub name: String,
    pub seed: u64,
    pub outcome: std::result::Result<RunOutput, String>,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: PrequentialReport,
    pub model: DevdanModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub name: String,
    pub runs: usize,
    pub failures: usize,
    /// Mean over seeds of each run's mean rate.
    pub mean_cr: f64,
    /// Sample standard deviation of the per-seed mean rates.
    pub std_cr: f64,
    pub min_cr: f64,
    pub mean_batch_std: f64,
    pub mean_final_width: f64,
    pub mean_parameter_count: f64,
    pub mean_train_s: f64,
    pub mean_test_s: f64,
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

/// Runs one entry under one seed: builds the stream, trains a fresh model.
pub fn run_single(entry: &SuiteEntry, seed: u64) -> Result<RunOutput> {
    let stream = entry.dataset.build(seed)?;
    let config = DevdanConfig {
        seed,
        ..entry.model.clone()
    };
    let mut model = DevdanModel::new(stream.input_dim, stream.classes, config)?;
    let report = run_prequential(&mut model, &stream.batches)?;
    Ok(RunOutput { report, model })
}

/// Every `(entry, seed)` pair on a pool of `jobs` threads. Results are in
/// entry-major, seed-minor order regardless of scheduling; a failed run is
/// recorded and does not stop the others.
pub fn run_suite(entries: &[SuiteEntry], seeds: &[u64], jobs: usize) -> Result<SuiteReport> {
    for e in entries {
        e.dataset.validate()?;
        e.model.validate()?;
    }
    let pairs: Vec<(&SuiteEntry, u64)> = entries
        .iter()
        .flat_map(|e| seeds.iter().map(move |&s| (e, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let runs: Vec<RunRecord> = pool.install(|| {
        pairs
            .par_iter()
            .map(|&(e, seed)| RunRecord {
                name: e.name.clone(),
                seed,
                outcome: run_single(e, seed).map_err(|err| err.to_string()),
            })
            .collect()
    });
    let summary = entries.iter().map(|e| summarize(&e.name, &runs)).collect();
    Ok(SuiteReport { runs, summary })
}

fn summarize(name: &str, runs: &[RunRecord]) -> SummaryRow {
    let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.name == name).collect();
    let ok: Vec<&PrequentialReport> = mine
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().map(|o| &o.report))
        .collect();
    let pick = |f: fn(&PrequentialReport) -> f64| -> Vec<f64> { ok.iter().map(|r| f(r)).collect() };
    let rates = pick(|r| r.mean_cr);
    SummaryRow {
        name: name.to_string(),
        runs: mine.len(),
        failures: mine.len() - ok.len(),
        mean_cr: mean(&rates),
        std_cr: sample_std(&rates),
        min_cr: rates.iter().copied().fold(f64::NAN, f64::min),
        mean_batch_std: mean(&pick(|r| r.std_cr)),
        mean_final_width: mean(&pick(|r| r.final_width as f64)),
        mean_parameter_count: mean(&pick(|r| r.parameter_count as f64)),
        mean_train_s: mean(&pick(|r| r.train_s)),
        mean_test_s: mean(&pick(|r| r.test_s)),
    }
}
