//! Pipeline settings: a TOML file, then command-line flags on top.
//!
//! ```toml
//! jobs = 8
//! heatmap_resolution = 64
//! strictness = "lenient"
//! schema_version = 1
//!
//! [filter]
//! box_confidence_threshold = 0.3
//! blacklist = ["it", "this"]
//! ```

use std::num::NonZeroUsize;

use fld_core::engine::{record::SCHEMA_VERSION, FilterConfig};
use fld_core::stats::DEFAULT_RESOLUTION;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Strictness {
    /// Stop at the first bad line.
    Strict,
    /// Skip bad lines and count them.
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub filter: FilterConfig,
    pub jobs: usize,
    pub heatmap_resolution: usize,
    pub strictness: Strictness,
    pub schema_version: u32,
}

impl PipelineConfig {
    pub fn new(strictness: Strictness) -> Self {
        Self {
            filter: FilterConfig::default(),
            jobs: std::thread::available_parallelism().map_or(1, NonZeroUsize::get),
            heatmap_resolution: DEFAULT_RESOLUTION,
            strictness,
            schema_version: SCHEMA_VERSION,
        }
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs;
        self
    }

    pub fn with_filter(mut self, filter: FilterConfig) -> Self {
        self.filter = filter;
        self
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.jobs == 0 {
            return Err(CliError::Config("jobs must be at least 1".into()));
        }
        if self.heatmap_resolution == 0 {
            return Err(CliError::Config("heatmap_resolution must be at least 1".into()));
        }
        self.filter.validate().map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn is_strict(&self) -> bool {
        self.strictness == Strictness::Strict
    }

    pub(crate) fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))
    }
}

/// Settings read from a config file. Unset keys keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub jobs: Option<usize>,
    pub heatmap_resolution: Option<usize>,
    pub strictness: Option<Strictness>,
    pub schema_version: Option<u32>,
    pub filter: Option<FilterConfig>,
}

impl ConfigFile {
    pub fn parse(src: &str) -> Result<Self, CliError> {
        toml::from_str(src).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(j) = self.jobs {
            cfg.jobs = j;
        }
        if let Some(r) = self.heatmap_resolution {
            cfg.heatmap_resolution = r;
        }
        if let Some(s) = self.strictness {
            cfg.strictness = s;
        }
        if let Some(v) = self.schema_version {
            cfg.schema_version = v;
        }
        if let Some(f) = &self.filter {
            cfg.filter = f.clone();
        }
    }
}
