//! JSON experiment files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DevdanConfig;
use crate::prequential::SuiteEntry;
use crate::streams::DatasetSpec;

/// A named model configuration run alongside the base one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub name: String,
    pub model: DevdanConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub dataset: DatasetSpec,
    pub model: DevdanConfig,
    /// Extra configurations evaluated on the same streams.
    pub variants: Vec<Variant>,
    pub seeds: Vec<u64>,
    pub jobs: usize,
    pub out_dir: Option<PathBuf>,
    pub checkpoint_dir: Option<PathBuf>,
    /// Record wall-clock timings in the per-batch CSV.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "devdan".into(),
            dataset: DatasetSpec::default(),
            model: DevdanConfig::default(),
            variants: Vec::new(),
            seeds: vec![0],
            jobs: 1,
            out_dir: None,
            checkpoint_dir: None,
            timing: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("experiment file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.validate()?;
        self.model.validate()?;
        for v in &self.variants {
            v.model.validate()?;
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let mut names: Vec<&str> = std::iter::once(self.name.as_str())
            .chain(self.variants.iter().map(|v| v.name.as_str()))
            .collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("configuration names must be unique".into()));
        }
        if names
            .iter()
            .any(|n| n.is_empty() || n.contains(['/', '\\']))
        {
            return Err(Error::Config(
                "configuration names must be non-empty and contain no path separators".into(),
            ));
        }
        Ok(())
    }

    pub fn entries(&self) -> Vec<SuiteEntry> {
        std::iter::once(SuiteEntry {
            name: self.name.clone(),
            dataset: self.dataset.clone(),
            model: self.model.clone(),
        })
        .chain(self.variants.iter().map(|v| SuiteEntry {
            name: v.name.clone(),
            dataset: self.dataset.clone(),
            model: v.model.clone(),
        }))
        .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::SourceKind;

    #[test]
    fn partial_file_fills_defaults() {
        let c = ExperimentConfig::from_json(
            r#"{"dataset": {"source": "hyperplane", "samples": 5000}, "seeds": [1, 2],
                "variants": [{"name": "frozen", "model": {"enable_grow": false}}]}"#,
        )
        .unwrap();
        assert_eq!(c.dataset.source, SourceKind::Hyperplane);
        assert_eq!(c.dataset.batch_size, 1000);
        assert_eq!(c.model, DevdanConfig::default());
        assert!(!c.variants[0].model.enable_grow);
        c.validate().unwrap();
        assert_eq!(c.entries().len(), 2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"datset": {}}"#),
            Err(Error::Config(_))
        ));
        assert!(ExperimentConfig::from_json(r#"{"model": {"lr": 0.1}}"#).is_err());
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let c = ExperimentConfig {
            variants: vec![Variant {
                name: "devdan".into(),
                model: DevdanConfig::default(),
            }],
            ..ExperimentConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
