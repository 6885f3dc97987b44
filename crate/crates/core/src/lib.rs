//! Evolving denoising autoencoder for streaming classification under concept
//! drift, with drift-stream generators and a test-then-train harness.

pub mod dae;
pub mod error;
pub mod experiment;
pub mod model;
pub mod monitor;
pub mod numerics;
pub mod prequential;
pub mod streams;

pub use dae::{DaeLayer, MaskSpec};
pub use error::{Error, Result};
pub use experiment::{ExperimentConfig, Variant};
pub use model::{DevdanConfig, DevdanModel, Prediction};
pub use monitor::{NsSnapshot, ResetMode, SpcTracker};
pub use numerics::{Mat, Seed};
pub use prequential::{run_prequential, run_suite, PrequentialReport, SuiteEntry};
pub use streams::{DatasetSpec, StreamBatch};
