use std::sync::Arc;

use super::config::{binary_grid, Dataset, PipelineConfig};
use super::oracle::{BinaryOracle, MulticlassOracle};
use super::report::{binary_benchmark, evaluate_binary, evaluate_multiclass, multiclass_benchmark};
use super::sets::{BinaryLinearSet, BoxCalibrationSet, LinearFamilySet, ThresholdCalibrationSet};
use super::stat::{Snapshot, StatOracle, StatPredictor};
use crate::approach::{Approach, ApproachState, BoxedSet, MixtureOracle, Mode};
use crate::error::{Error, Result};
use crate::eval::{MetricsReport, SetDiagnostics};
use crate::rng::Rng;
use crate::simplex::SimplexNet;

/// Per-round log of a pipeline run.
pub type Trace = ApproachState<Vec<f64>, usize>;

#[derive(Debug)]
pub struct BinaryRun {
    pub grid: Arc<Vec<f64>>,
    /// Grid index played each round.
    pub indices: Vec<usize>,
    /// Predicted probability of label 1 each round.
    pub preds: Vec<f64>,
    pub sets: Vec<SetDiagnostics>,
    pub trace: Trace,
}

#[derive(Debug)]
pub struct MulticlassRun {
    pub net: Arc<SimplexNet>,
    /// Net index played each round.
    pub preds: Vec<usize>,
    pub sets: Vec<SetDiagnostics>,
    /// Largest certified oracle value over the run.
    pub oracle_max_value: f64,
    pub trace: Trace,
}

fn diagnostics<O: MixtureOracle<Vec<f64>, usize>>(
    driver: &Approach<Vec<f64>, usize, O>,
    oracle_eps: f64,
) -> Result<Vec<SetDiagnostics>> {
    let bounds = driver.theoretical_bounds(oracle_eps);
    driver
        .sets
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Ok(SetDiagnostics {
                id: s.id(),
                sup_average: s.sup_average(),
                realized_average: driver.state.realized_average(i)?,
                theoretical_bound: bounds[i],
            })
        })
        .collect()
}

fn online_prefix(data: &Dataset, horizon: usize) -> Result<()> {
    if data.len() < horizon {
        return Err(Error::SampleExhausted(data.len()));
    }
    Ok(())
}

/// Sampled contextual approachability with threshold calibration and linear
/// multiaccuracy; predictions are grid points chosen before each label.
pub fn run_binary_online(data: &Dataset, cfg: &PipelineConfig) -> Result<BinaryRun> {
    cfg.validate()?;
    let horizon = cfg.binary_horizon();
    online_prefix(data, horizon)?;
    data.head(horizon).check_labels(2)?;
    let d = data.dim();
    let grid = Arc::new(binary_grid(cfg.eps)?);
    let sets: Vec<BoxedSet<Vec<f64>, usize>> = vec![
        Box::new(ThresholdCalibrationSet::new(grid.clone(), horizon)?),
        Box::new(BinaryLinearSet::new(grid.clone(), d, horizon)),
    ];
    let oracle = BinaryOracle { grid: grid.clone() };
    let mut driver = Approach::new(sets, oracle, horizon, Mode::Sampled, Rng::new(cfg.seed))?;
    let mut indices = Vec::with_capacity(horizon);
    for (x, &y) in data.xs.iter().zip(&data.labels).take(horizon) {
        let p = driver.propose(x.clone())?;
        indices.push(p.action.ok_or_else(|| Error::Internal("sampled mode without action".into()))?);
        driver.reveal(y)?;
    }
    let step = grid[1] - grid[0];
    let sets = diagnostics(&driver, step)?;
    let preds = indices.iter().map(|&j| grid[j]).collect();
    Ok(BinaryRun { grid, indices, preds, sets, trace: driver.state })
}

pub fn fit_online_binary(data: &Dataset, cfg: &PipelineConfig) -> Result<(BinaryRun, MetricsReport)> {
    let run = run_binary_online(data, cfg)?;
    let used = data.head(run.preds.len());
    let bench = binary_benchmark(cfg, &used)?;
    let report = evaluate_binary("binary-online", cfg, &run.preds, &used, &bench, run.sets.clone())?;
    Ok((run, report))
}

fn multiclass_sets(
    net: &Arc<SimplexNet>,
    cfg: &PipelineConfig,
    d: usize,
    horizon: usize,
    statistical: bool,
) -> Vec<BoxedSet<Vec<f64>, usize>> {
    let mut sets: Vec<BoxedSet<Vec<f64>, usize>> = Vec::with_capacity(cfg.families.len() + 1);
    sets.push(if statistical {
        Box::new(BoxCalibrationSet::statistical(net.clone(), cfg.eps, cfg.delta))
    } else {
        Box::new(BoxCalibrationSet::new(net.clone(), cfg.eps))
    });
    for &map in &cfg.families {
        sets.push(if statistical {
            Box::new(LinearFamilySet::statistical(net.clone(), map, d, horizon, cfg.delta))
        } else {
            Box::new(LinearFamilySet::new(net.clone(), map, d, horizon))
        });
    }
    sets
}

/// Sampled contextual approachability with ℓ∞-class calibration and one
/// multiaccuracy set per comparator family in `cfg.families`.
pub fn run_multiclass_online(data: &Dataset, cfg: &PipelineConfig) -> Result<MulticlassRun> {
    cfg.validate()?;
    let horizon = cfg.multiclass_horizon();
    online_prefix(data, horizon)?;
    data.head(horizon).check_labels(cfg.k)?;
    let net = Arc::new(SimplexNet::with_cap(cfg.k, cfg.eps, cfg.net_cap)?);
    let sets = multiclass_sets(&net, cfg, data.dim(), horizon, false);
    let oracle = MulticlassOracle::new(net.clone(), cfg.solver_eps());
    let mut driver = Approach::new(sets, oracle, horizon, Mode::Sampled, Rng::new(cfg.seed))?;
    let mut preds = Vec::with_capacity(horizon);
    for (x, &y) in data.xs.iter().zip(&data.labels).take(horizon) {
        let p = driver.propose(x.clone())?;
        preds.push(p.action.ok_or_else(|| Error::Internal("sampled mode without action".into()))?);
        driver.reveal(y)?;
    }
    let sets = diagnostics(&driver, driver.oracle.guarantee())?;
    let oracle_max_value = driver.oracle.max_value;
    Ok(MulticlassRun { net, preds, sets, oracle_max_value, trace: driver.state })
}

fn fit_multiclass_track(track: &str, data: &Dataset, cfg: &PipelineConfig) -> Result<(MulticlassRun, MetricsReport)> {
    let run = run_multiclass_online(data, cfg)?;
    let used = data.head(run.preds.len());
    let bench = multiclass_benchmark(cfg, &used)?;
    let report = evaluate_multiclass(track, cfg, &run.net, &run.preds, &used, &bench, run.sets.clone())?;
    Ok((run, report))
}

pub fn fit_online_multiclass(data: &Dataset, cfg: &PipelineConfig) -> Result<(MulticlassRun, MetricsReport)> {
    fit_multiclass_track("multiclass-online", data, cfg)
}

/// Omniprediction against the union of `cfg.families`; the report carries
/// per-family multiaccuracy and gaps against the best comparator of any
/// family.
pub fn fit_union(data: &Dataset, cfg: &PipelineConfig) -> Result<(MulticlassRun, MetricsReport)> {
    fit_multiclass_track("union", data, cfg)
}

fn first_sample(source: &mut impl Iterator<Item = (Vec<f64>, usize)>) -> Result<(Vec<f64>, usize)> {
    source.next().ok_or(Error::SampleExhausted(0))
}

/// Runs the statistical protocol: one fresh sample per round, learners fed
/// the exact mixture, and every round's oracle inputs stored for replay.
fn run_statistical(
    sets: Vec<BoxedSet<Vec<f64>, usize>>,
    oracle: StatOracle,
    horizon: usize,
    first: (Vec<f64>, usize),
    source: &mut impl Iterator<Item = (Vec<f64>, usize)>,
    k: usize,
    seed: u64,
) -> Result<StatPredictor> {
    let mut rng = Rng::new(seed);
    let driver_rng = rng.split();
    let mut snapshots = Vec::with_capacity(horizon);
    let mut driver = Approach::new(sets, oracle, horizon, Mode::Statistical, driver_rng)?;
    let mut next = Some(first);
    for t in 0..horizon {
        let (x, y) = match next.take() {
            Some(s) => s,
            None => source.next().ok_or(Error::SampleExhausted(t))?,
        };
        if y >= k {
            return Err(Error::Invalid(format!("label {y} ≥ k = {k}")).at_round(t));
        }
        snapshots.push(Snapshot {
            weights: driver.state.mwu.weights.clone(),
            points: driver.sets.iter().map(|s| s.point().to_vec()).collect(),
        });
        driver.propose(x)?;
        driver.reveal(y)?;
    }
    let oracle_eps = driver.oracle.guarantee();
    let sets = diagnostics(&driver, oracle_eps)?;
    let Approach { sets: owned_sets, oracle, .. } = driver;
    Ok(StatPredictor::new(oracle, owned_sets, snapshots, sets, rng))
}

impl MixtureOracle<Vec<f64>, usize> for StatOracle {
    fn respond(&mut self, w: &[f64], x: &Vec<f64>, sets: &[BoxedSet<Vec<f64>, usize>]) -> Result<crate::Mixture> {
        match self {
            StatOracle::Binary(o) => o.respond(w, x, sets),
            StatOracle::Multiclass(o) => o.respond(w, x, sets),
        }
    }
}

/// Statistical binary omnipredictor from i.i.d. samples.
pub fn fit_statistical_binary(
    mut source: impl Iterator<Item = (Vec<f64>, usize)>,
    cfg: &PipelineConfig,
) -> Result<StatPredictor> {
    cfg.validate()?;
    let horizon = cfg.binary_horizon();
    let first = first_sample(&mut source)?;
    let d = first.0.len();
    let grid = Arc::new(binary_grid(cfg.eps)?);
    let sets: Vec<BoxedSet<Vec<f64>, usize>> = vec![
        Box::new(ThresholdCalibrationSet::statistical(grid.clone(), horizon, cfg.delta)?),
        Box::new(BinaryLinearSet::statistical(grid.clone(), d, horizon, cfg.delta)),
    ];
    let oracle = StatOracle::Binary(BinaryOracle { grid });
    run_statistical(sets, oracle, horizon, first, &mut source, 2, cfg.seed)
}

/// Statistical multiclass omnipredictor from i.i.d. samples.
pub fn fit_statistical_multiclass(
    mut source: impl Iterator<Item = (Vec<f64>, usize)>,
    cfg: &PipelineConfig,
) -> Result<StatPredictor> {
    cfg.validate()?;
    let horizon = cfg.multiclass_horizon();
    let first = first_sample(&mut source)?;
    let net = Arc::new(SimplexNet::with_cap(cfg.k, cfg.eps, cfg.net_cap)?);
    let sets = multiclass_sets(&net, cfg, first.0.len(), horizon, true);
    let oracle = StatOracle::Multiclass(MulticlassOracle::new(net, cfg.solver_eps()));
    run_statistical(sets, oracle, horizon, first, &mut source, cfg.k, cfg.seed)
}
