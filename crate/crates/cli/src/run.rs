//! Pipeline runs: one or more trials, each written as a JSON report, a CSV
//! row and optionally a JSONL trace.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use omnipred::datagen::{generate, read_csv, StreamKind, StreamSpec};
use omnipred::eval::MetricsReport;
use omnipred::omni::{
    fit_online_binary, fit_online_multiclass, fit_statistical_binary, fit_statistical_multiclass, fit_union, Dataset,
    PipelineConfig, Trace,
};
use omnipred::rng::trial_seed;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{config_error, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Track {
    BinaryOnline,
    BinaryStat,
    MulticlassOnline,
    MulticlassStat,
    Union,
}

impl Track {
    pub fn is_binary(self) -> bool {
        matches!(self, Track::BinaryOnline | Track::BinaryStat)
    }

    fn is_statistical(self) -> bool {
        matches!(self, Track::BinaryStat | Track::MulticlassStat)
    }

    /// Rows a trial needs: the horizon, plus the holdout for statistical runs.
    fn rows_needed(self, cfg: &RunConfig) -> usize {
        let horizon = if self.is_binary() { cfg.pipeline.binary_horizon() } else { cfg.pipeline.multiclass_horizon() };
        if self.is_statistical() {
            horizon + cfg.holdout
        } else {
            horizon
        }
    }
}

/// Header line of a trace file; the remaining lines are per-round records.
#[derive(Debug, Serialize, serde::Deserialize)]
pub struct TraceHeader {
    pub track: String,
    pub config: PipelineConfig,
}

pub struct TrialResult {
    pub trial_id: usize,
    pub report: MetricsReport,
    pub wallclock_ms: u128,
    trace: Option<Trace>,
}

/// Seeds of trial i: the configured seeds for a single trial, derived ones
/// otherwise.
fn trial_seeds(cfg: &RunConfig, i: usize) -> (u64, u64) {
    if cfg.trials == 1 {
        (cfg.pipeline.seed, cfg.data_seed)
    } else {
        (trial_seed(cfg.pipeline.seed, i as u64), trial_seed(cfg.data_seed, i as u64))
    }
}

fn load_data(cfg: &RunConfig, track: Track, data_seed: u64) -> anyhow::Result<Dataset> {
    if let Some(path) = &cfg.data {
        let file = File::open(path).map_err(|e| config_error(format!("cannot read {}: {e}", path.display())))?;
        let (xs, labels) = read_csv(file)?;
        return Ok(Dataset::new(xs, labels)?);
    }
    let k = if track.is_binary() { 2 } else { cfg.pipeline.k };
    if cfg.kind == StreamKind::FixedMarginal {
        return Err(config_error("fixed-marginal streams need --data; generate one with `gen`"));
    }
    let spec = StreamSpec::new(cfg.kind, cfg.d, k, track.rows_needed(cfg), data_seed);
    Ok(generate(&spec)?.into())
}

fn run_trial(cfg: &RunConfig, track: Track, i: usize) -> anyhow::Result<TrialResult> {
    let (seed, data_seed) = trial_seeds(cfg, i);
    let pcfg = PipelineConfig { seed, ..cfg.pipeline.clone() };
    let data = load_data(cfg, track, data_seed)?;
    let start = Instant::now();
    let (report, trace) = match track {
        Track::BinaryOnline => {
            let (run, r) = fit_online_binary(&data, &pcfg)?;
            (r, run.trace)
        }
        Track::MulticlassOnline => {
            let (run, r) = fit_online_multiclass(&data, &pcfg)?;
            (r, run.trace)
        }
        Track::Union => {
            let (run, r) = fit_union(&data, &pcfg)?;
            (r, run.trace)
        }
        Track::BinaryStat | Track::MulticlassStat => {
            let horizon = if track.is_binary() { pcfg.binary_horizon() } else { pcfg.multiclass_horizon() };
            let holdout = data.len().saturating_sub(horizon).min(cfg.holdout);
            if holdout == 0 {
                return Err(config_error(format!("{} rows leave no holdout after T = {horizon}", data.len())));
            }
            let train = data.xs.iter().cloned().zip(data.labels.iter().copied()).take(horizon);
            let test = Dataset::new(
                data.xs[horizon..horizon + holdout].to_vec(),
                data.labels[horizon..horizon + holdout].to_vec(),
            )?;
            let mut pred = if track.is_binary() {
                fit_statistical_binary(train, &pcfg)?
            } else {
                fit_statistical_multiclass(train, &pcfg)?
            };
            let report = pred.evaluate(&test, &pcfg)?;
            let elapsed = start.elapsed().as_millis();
            return Ok(TrialResult { trial_id: i, report, wallclock_ms: elapsed, trace: None });
        }
    };
    let elapsed = start.elapsed().as_millis();
    Ok(TrialResult { trial_id: i, report, wallclock_ms: elapsed, trace: cfg.trace.then_some(trace) })
}

pub fn csv_header(report: &MetricsReport) -> String {
    let cal = if report.thresh_cal.is_some() { "thresh_cal" } else { "linf_cal" };
    let mut cols = vec!["trial_id".to_string(), "seed".into(), "k".into(), "eps".into(), "T".into(), cal.into()];
    cols.push("multiaccuracy".into());
    cols.extend(report.losses.keys().map(|id| format!("gap_{id}")));
    cols.push("wallclock_ms".into());
    cols.join(",")
}

pub fn csv_row(r: &TrialResult) -> String {
    let m = &r.report;
    let mut cols = vec![
        r.trial_id.to_string(),
        m.seed.to_string(),
        m.k.to_string(),
        m.eps.to_string(),
        m.horizon.to_string(),
        m.calibration().to_string(),
        m.multiaccuracy.to_string(),
    ];
    cols.extend(m.losses.values().map(|l| l.gap.to_string()));
    cols.push(r.wallclock_ms.to_string());
    cols.join(",")
}

fn write_trace(path: &Path, track: &str, cfg: &PipelineConfig, trace: &Trace) -> anyhow::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut out, &TraceHeader { track: track.to_string(), config: cfg.clone() })?;
    out.write_all(b"\n")?;
    trace.write_jsonl(&mut out)?;
    out.flush()?;
    Ok(())
}

/// Runs all trials and writes `report-<i>.json`, `results.csv`,
/// `run-config.json` and, with tracing on, `trace-<i>.jsonl` into `cfg.out`.
pub fn execute(cfg: &RunConfig, track: Track) -> anyhow::Result<Vec<TrialResult>> {
    std::fs::create_dir_all(&cfg.out).map_err(|e| config_error(format!("cannot create {}: {e}", cfg.out.display())))?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.workers).build()?;
    let results: Vec<TrialResult> =
        pool.install(|| (0..cfg.trials).into_par_iter().map(|i| run_trial(cfg, track, i)).collect::<Result<_, _>>())?;

    let dir = &cfg.out;
    std::fs::write(dir.join("run-config.json"), serde_json::to_string_pretty(cfg)? + "\n")?;
    let mut csv = String::new();
    for r in &results {
        if csv.is_empty() {
            csv.push_str(&csv_header(&r.report));
            csv.push('\n');
        }
        csv.push_str(&csv_row(r));
        csv.push('\n');
        let path = dir.join(format!("report-{}.json", r.trial_id));
        std::fs::write(&path, serde_json::to_string_pretty(&r.report)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        if let Some(trace) = &r.trace {
            let config: PipelineConfig = serde_json::from_value(r.report.config.clone())?;
            write_trace(&dir.join(format!("trace-{}.jsonl", r.trial_id)), &r.report.track, &config, trace)?;
        }
    }
    std::fs::write(dir.join("results.csv"), csv)?;
    Ok(results)
}
