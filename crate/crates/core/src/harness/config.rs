use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{self, Dataset, Noise};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::influence::{ImportanceScheme, SchemeKind, SchemeOptions, Target};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Csv {
        path: PathBuf,
        response: String,
        #[serde(default)]
        drop: Vec<String>,
        #[serde(default)]
        add_intercept: bool,
    },
    Synth {
        n: usize,
        d: usize,
        noise: Noise,
        seed: u64,
        #[serde(default)]
        add_intercept: bool,
    },
}

impl DataSource {
    /// Relative CSV paths are resolved against `base` when given.
    pub fn load(&self, base: Option<&Path>) -> Result<Dataset> {
        match self {
            DataSource::Csv {
                path,
                response,
                drop,
                add_intercept,
            } => {
                let path = match base {
                    Some(b) if path.is_relative() => b.join(path),
                    _ => path.clone(),
                };
                let ds = data::load_csv(path, response, drop)?;
                Ok(if *add_intercept { ds.with_intercept() } else { ds })
            }
            DataSource::Synth {
                n,
                d,
                noise,
                seed,
                add_intercept,
            } => {
                let (ds, _) = data::synth_regression(*n, *d, *noise, *seed)?;
                Ok(if *add_intercept { ds.with_intercept() } else { ds })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    Ols,
    Logistic,
    Poisson,
    Quantile,
}

/// A scheme given either by CLI name or as an object with options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemeEntry {
    Name(SchemeKind),
    Full(ImportanceScheme),
}

impl SchemeEntry {
    pub fn scheme(&self) -> ImportanceScheme {
        match self {
            SchemeEntry::Name(kind) => ImportanceScheme {
                kind: *kind,
                options: SchemeOptions::default(),
            },
            SchemeEntry::Full(s) => *s,
        }
    }
}

fn default_pilot_fraction() -> f64 {
    0.05
}

fn default_floor_frac() -> f64 {
    0.1
}

fn default_replications() -> usize {
    1
}

fn default_true() -> bool {
    true
}

/// Experiment description; the JSON form uses these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data_source: DataSource,
    pub model: ModelName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default)]
    pub target: Target,
    pub schemes: Vec<SchemeEntry>,
    pub sizes: Vec<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_pilot_fraction")]
    pub pilot_fraction: f64,
    #[serde(default = "default_floor_frac")]
    pub floor_frac: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub holdout_fraction: f64,
    /// Least-squares fits by pseudo-inverse rather than the ridged normal equations.
    #[serde(default = "default_true")]
    pub exact_fit: bool,
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn family(&self) -> Result<Family> {
        match self.model {
            ModelName::Ols => Ok(Family::Ols),
            ModelName::Logistic => Ok(Family::Logistic),
            ModelName::Poisson => Ok(Family::Poisson),
            ModelName::Quantile => Family::quantile(
                self.tau
                    .ok_or_else(|| Error::InvalidArgument("quantile model needs `tau`".into()))?,
            ),
        }
    }

    pub fn schemes(&self) -> Vec<ImportanceScheme> {
        self.schemes.iter().map(SchemeEntry::scheme).collect()
    }

    /// Checks that do not need the data.
    pub fn validate(&self) -> Result<()> {
        self.family()?;
        if self.replications == 0 {
            return Err(Error::InvalidArgument("replications must be at least 1".into()));
        }
        if self.schemes.is_empty() || self.sizes.is_empty() {
            return Err(Error::InvalidArgument("need at least one scheme and one size".into()));
        }
        if !(self.pilot_fraction > 0.0 && self.pilot_fraction < 1.0) {
            return Err(Error::InvalidArgument("pilot_fraction must be in (0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::InvalidArgument("holdout_fraction must be in [0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.floor_frac) {
            return Err(Error::InvalidArgument("floor_frac must be in [0, 1]".into()));
        }
        if let Some(m) = self.sizes.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::InvalidArgument(format!("size {m} must be positive")));
        }
        Ok(())
    }
}
