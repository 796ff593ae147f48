use std::path::{Path, PathBuf};

use dimsc::model::ModelSpec;
use dimsc::{Error, ExperimentConfig, Result};
use serde::Deserialize;

/// TOML run file. Holds either a `[model]` table with explicit parameters or
/// an `[experiment]` table, plus run-level settings. Unknown keys are errors.
///
/// ```toml
/// seed = 7
/// out_dir = "sim"
///
/// [experiment]
/// id = "sparsity"
/// knob_values = [0.2, 0.6, 1.0]
/// base_seed = 3
/// ```
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Sampling seed for `[model]` runs.
    pub seed: Option<u64>,
    /// Replaces `experiment.repetitions`.
    pub repetitions: Option<usize>,
    pub out_dir: Option<PathBuf>,
    /// Grid point and repetition that `simulate` draws from an experiment.
    pub knob_index: Option<usize>,
    pub repetition: Option<usize>,
    pub model: Option<ModelSpec>,
    pub experiment: Option<ExperimentConfig>,
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        match (&config.model, &config.experiment) {
            (Some(_), Some(_)) => Err(Error::Config(format!(
                "{}: give either [model] or [experiment], not both",
                path.display()
            ))),
            (None, None) => Err(Error::Config(format!(
                "{}: needs a [model] or an [experiment] table",
                path.display()
            ))),
            _ => Ok(config),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// The experiment table with run-level overrides applied.
    pub fn experiment(&self) -> Option<ExperimentConfig> {
        self.experiment.clone().map(|mut e| {
            if let Some(r) = self.repetitions {
                e.repetitions = r;
            }
            e
        })
    }
}
