//! Run configuration: defaults, then the JSON config file, then flags.

use std::path::{Path, PathBuf};

use clap::Args;
use omnipred::datagen::StreamKind;
use omnipred::eval::FeatureMap;
use omnipred::omni::PipelineConfig;
use serde::{Deserialize, Serialize};

/// Bad configuration; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Shape of the JSON config file; every key is optional.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub pipeline: Option<PipelineConfig>,
    pub trials: Option<usize>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub kind: Option<StreamKind>,
    pub d: Option<usize>,
    pub data_seed: Option<u64>,
    pub holdout: Option<usize>,
    pub trace: Option<bool>,
}

/// Fully resolved run configuration, embedded next to every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub pipeline: PipelineConfig,
    pub trials: usize,
    pub workers: usize,
    pub out: PathBuf,
    /// CSV stream to read instead of synthetic data
    pub data: Option<PathBuf>,
    pub kind: StreamKind,
    pub d: usize,
    pub data_seed: u64,
    /// held-out examples for statistical runs
    pub holdout: usize,
    pub trace: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// JSON config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// horizon; defaults to the theoretical horizon for eps and delta
    #[arg(long = "T")]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// comma-separated loss ids; empty means the whole bank
    #[arg(long, value_delimiter = ',')]
    pub losses: Option<Vec<String>>,
    /// comma-separated comparator families (linear, square)
    #[arg(long, value_delimiter = ',')]
    pub families: Option<Vec<String>>,
    #[arg(long)]
    pub solver_eps: Option<f64>,
    #[arg(long)]
    pub net_cap: Option<usize>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    /// CSV stream (x0..,label) to use instead of synthetic data
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// synthetic stream kind
    #[arg(long)]
    pub kind: Option<StreamKind>,
    /// synthetic feature dimension
    #[arg(long)]
    pub d: Option<usize>,
    /// synthetic data seed; defaults to the pipeline seed
    #[arg(long)]
    pub data_seed: Option<u64>,
    /// held-out examples for statistical runs
    #[arg(long)]
    pub holdout: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// worker threads for trials
    #[arg(long)]
    pub workers: Option<usize>,
    /// output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// write a JSONL per-round trace for online runs
    #[arg(long)]
    pub trace: bool,
}

fn read_file_config(path: &Path) -> anyhow::Result<FileConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

impl RunArgs {
    /// Merges defaults, the config file and flags. `binary` pins k = 2.
    pub fn resolve(&self, command: &str, binary: bool) -> anyhow::Result<RunConfig> {
        let file = match &self.config {
            Some(p) => read_file_config(p)?,
            None => FileConfig::default(),
        };
        let mut p = file.pipeline.clone().unwrap_or_default();
        if let Some(v) = self.k {
            p.k = v;
        }
        if let Some(v) = self.eps {
            p.eps = v;
        }
        if self.horizon.is_some() {
            p.horizon = self.horizon;
        }
        if let Some(v) = self.delta {
            p.delta = v;
        }
        if let Some(v) = self.seed {
            p.seed = v;
        }
        if let Some(v) = &self.losses {
            p.losses = v.iter().filter(|s| !s.is_empty()).cloned().collect();
        }
        if let Some(v) = &self.families {
            p.families = v.iter().map(|s| FeatureMap::parse(s)).collect::<Result<_, _>>()?;
        }
        if self.solver_eps.is_some() {
            p.solver_eps = self.solver_eps;
        }
        if let Some(v) = self.net_cap {
            p.net_cap = v;
        }
        if let Some(v) = self.c1 {
            p.c1 = v;
        }
        if let Some(v) = self.c2 {
            p.c2 = v;
        }
        if binary {
            if p.k != 2 && (self.k.is_some() || file.pipeline.is_some()) {
                return Err(config_error(format!("binary runs need k = 2, got {}", p.k)));
            }
            p.k = 2;
        }
        p.validate()?;
        let default_kind = if binary { StreamKind::LogisticBinary } else { StreamKind::SoftmaxLinear };
        let trials = self.trials.or(file.trials).unwrap_or(1);
        if trials == 0 {
            return Err(config_error("trial count must be at least 1"));
        }
        let workers = self.workers.or(file.workers).unwrap_or(1);
        if workers == 0 {
            return Err(config_error("worker count must be at least 1"));
        }
        Ok(RunConfig {
            command: command.to_string(),
            trials,
            workers,
            out: self.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from("out")),
            data: self.data.clone().or(file.data),
            kind: self.kind.or(file.kind).unwrap_or(default_kind),
            d: self.d.or(file.d).unwrap_or(5),
            data_seed: self.data_seed.or(file.data_seed).unwrap_or(p.seed),
            holdout: self.holdout.or(file.holdout).unwrap_or(5000),
            trace: self.trace || file.trace.unwrap_or(false),
            pipeline: p,
        })
    }
}
