//! Command-line stages: synthesize or read a cohort, extract photo features,
//! aggregate user-days, fit the logit models, classify, test filter usage
//! and bundle everything into a report.
//!
//! Every stage reads and writes files under the output directory, so stages
//! can be re-run independently. JSON outputs carry the hash of the effective
//! configuration and the seed that produced them.

mod commands;
mod config;
mod report;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cohort::CohortError;
use crate::forest::ForestError;
use crate::imaging::ImagingError;
use crate::inference::InferenceError;
use crate::stats::StatsError;

pub use commands::{
    aggregate, classify, extract, filters, fit, synth, AggregateOutput, ClassifyReport, DatasetSummary, Exclusion,
    ExtractError, ExtractOutput, FilterAnalysis, FilterReport, FitReport, MetricRow,
};
pub use config::{
    AgreementConfig, ClassifyConfig, ExtractConfig, GridChoice, InputPaths, ModelConfig, PipelineConfig, SynthConfig,
    SCHEMA_VERSION,
};
pub use report::{report, CorrelationSection, ReportBundle, Section, SECTION_NAMES};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Missing { path: PathBuf, message: String },
    #[error("{0}")]
    Data(String),
    #[error("convergence: {0}")]
    Convergence(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl PipelineError {
    /// 1 data or validation error, 2 missing resource, 3 convergence failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Data(_) | PipelineError::Io { .. } => 1,
            PipelineError::Missing { .. } => 2,
            PipelineError::Convergence(_) => 3,
        }
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        if e.kind() == std::io::ErrorKind::NotFound {
            PipelineError::Missing { path: path.to_owned(), message: "not found".into() }
        } else {
            PipelineError::Io { path: path.to_owned(), source: e }
        }
    }

    pub(crate) fn missing(path: &Path, message: impl Into<String>) -> Self {
        PipelineError::Missing { path: path.to_owned(), message: message.into() }
    }
}

impl From<CohortError> for PipelineError {
    fn from(e: CohortError) -> Self {
        match e {
            CohortError::Io { path, source } => PipelineError::io(Path::new(&path), source),
            other => PipelineError::Data(other.to_string()),
        }
    }
}

impl From<ImagingError> for PipelineError {
    fn from(e: ImagingError) -> Self {
        match e {
            ImagingError::Io { path, source } => PipelineError::io(&path, source),
            other => PipelineError::Data(other.to_string()),
        }
    }
}

impl From<InferenceError> for PipelineError {
    fn from(e: InferenceError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

impl From<ForestError> for PipelineError {
    fn from(e: ForestError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

impl From<StatsError> for PipelineError {
    fn from(e: StatsError) -> Self {
        PipelineError::Data(e.to_string())
    }
}

/// Which user-day matrix a stage works on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    /// Every admitted user-day.
    All,
    /// Healthy user-days and depressed ones before diagnosis.
    Pre,
    /// User-days with crowd ratings, described by the four rating means.
    Ratings,
}

impl Dataset {
    pub fn name(self) -> &'static str {
        match self {
            Dataset::All => "all",
            Dataset::Pre => "pre",
            Dataset::Ratings => "ratings",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Dataset::All => "All-data",
            Dataset::Pre => "Pre-diagnosis",
            Dataset::Ratings => "Ratings",
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dataset {
    type Err = PipelineError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(Dataset::All),
            "pre" => Ok(Dataset::Pre),
            "ratings" => Ok(Dataset::Ratings),
            _ => Err(PipelineError::Config(format!("unknown dataset {s:?}; expected all, pre or ratings"))),
        }
    }
}

/// Fields stamped on every JSON artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stamp {
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
}

/// A validated configuration with its hash, shared by all stages.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PipelineConfig,
    pub hash: String,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        config.validate()?;
        let hash = config.hash();
        Ok(Pipeline { config, hash })
    }

    pub fn stamp(&self) -> Stamp {
        Stamp { schema_version: SCHEMA_VERSION, config_hash: self.hash.clone(), seed: self.config.seed }
    }

    pub fn out(&self, parts: &[&str]) -> PathBuf {
        parts.iter().fold(self.config.out_dir.clone(), |p, s| p.join(s))
    }

    /// Seed for a named stage, derived from the top-level seed.
    pub(crate) fn stage_seed(&self, stage: u64) -> u64 {
        crate::forest::derive_seed(self.config.seed, stage)
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    Ok(crate::cohort::io::write_atomic(path, bytes)?)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| PipelineError::Data(e.to_string()))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

pub(crate) fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Data(format!("{}: {e}", path.display())))
}
