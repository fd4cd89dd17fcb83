use std::sync::Arc;

use super::config::{binary_grid, Dataset, PipelineConfig};
use super::oracle::{BinaryOracle, MulticlassOracle};
use super::report::{binary_benchmark, evaluate_binary, evaluate_multiclass, multiclass_benchmark};
use crate::approach::BoxedSet;
use crate::error::{Error, Result};
use crate::eval::{MetricsReport, SetDiagnostics};
use crate::rng::Rng;
use crate::simplex::{sample_mixture, Mixture};

/// Oracle of a statistical run; replayed at prediction time.
#[derive(Debug, Clone)]
pub enum StatOracle {
    Binary(BinaryOracle),
    Multiclass(MulticlassOracle),
}

impl StatOracle {
    pub fn guarantee(&self) -> f64 {
        match self {
            StatOracle::Binary(o) => o.grid[1] - o.grid[0],
            StatOracle::Multiclass(o) => o.guarantee(),
        }
    }
}

/// Oracle inputs at the start of one round.
#[derive(Debug, Clone)]
pub(crate) struct Snapshot {
    pub weights: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

/// Randomized predictor: pick a round t uniformly, rebuild that round's
/// mixture a_t(x) from the stored inputs, and sample from it.
pub struct StatPredictor {
    oracle: StatOracle,
    sets: Vec<BoxedSet<Vec<f64>, usize>>,
    snapshots: Vec<Snapshot>,
    diagnostics: Vec<SetDiagnostics>,
    rng: Rng,
}

impl std::fmt::Debug for StatPredictor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StatPredictor")
            .field("oracle", &self.oracle)
            .field("rounds", &self.snapshots.len())
            .field("sets", &self.diagnostics)
            .finish()
    }
}

impl StatPredictor {
    pub(crate) fn new(
        oracle: StatOracle,
        sets: Vec<BoxedSet<Vec<f64>, usize>>,
        snapshots: Vec<Snapshot>,
        diagnostics: Vec<SetDiagnostics>,
        rng: Rng,
    ) -> Self {
        Self { oracle, sets, snapshots, diagnostics, rng }
    }

    pub fn horizon(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_binary(&self) -> bool {
        matches!(self.oracle, StatOracle::Binary(_))
    }

    /// Training-time diagnostics of each set.
    pub fn diagnostics(&self) -> &[SetDiagnostics] {
        &self.diagnostics
    }

    /// Distribution over classes of a prediction index.
    pub fn point(&self, index: usize) -> Vec<f64> {
        match &self.oracle {
            StatOracle::Binary(o) => vec![1.0 - o.grid[index], o.grid[index]],
            StatOracle::Multiclass(o) => o.net.point(index).to_vec(),
        }
    }

    /// a_t(x) for round t.
    pub fn mixture_at(&self, round: usize, x: &Vec<f64>) -> Result<Mixture> {
        let snap = self
            .snapshots
            .get(round)
            .ok_or_else(|| Error::Invalid(format!("round {round} ≥ horizon {}", self.snapshots.len())))?;
        let points: Vec<&[f64]> = snap.points.iter().map(|p| p.as_slice()).collect();
        match &self.oracle {
            StatOracle::Binary(o) => o.respond_at(&snap.weights, &points, x, &self.sets),
            // the solver is deterministic, so a scratch copy replays it exactly
            StatOracle::Multiclass(o) => o.clone().respond_at(&snap.weights, &points, x, &self.sets),
        }
    }

    /// One draw with an external rng: uniform round, then a point from a_t(x).
    pub fn predict_with(&self, x: &Vec<f64>, rng: &mut Rng) -> Result<usize> {
        let t = rng.below(self.snapshots.len());
        sample_mixture(&self.mixture_at(t, x)?, rng)
    }

    /// One draw from the predictor's own seeded stream.
    pub fn predict(&mut self, x: &Vec<f64>) -> Result<usize> {
        let mut rng = self.rng.clone();
        let out = self.predict_with(x, &mut rng);
        self.rng = rng;
        out
    }

    pub fn predict_all(&mut self, xs: &[Vec<f64>]) -> Result<Vec<usize>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }

    /// Metrics of fresh predictions on held-out data, against comparators
    /// fitted on that same data.
    pub fn evaluate(&mut self, data: &Dataset, cfg: &PipelineConfig) -> Result<MetricsReport> {
        let preds = self.predict_all(&data.xs)?;
        let diag = self.diagnostics.clone();
        if self.is_binary() {
            let grid = binary_grid(cfg.eps)?;
            let values: Vec<f64> = preds.iter().map(|&j| grid[j]).collect();
            let bench = binary_benchmark(cfg, data)?;
            evaluate_binary("binary-stat", cfg, &values, data, &bench, diag)
        } else {
            let net = match &self.oracle {
                StatOracle::Multiclass(o) => Arc::clone(&o.net),
                StatOracle::Binary(_) => unreachable!(),
            };
            let bench = multiclass_benchmark(cfg, data)?;
            evaluate_multiclass("multiclass-stat", cfg, &net, &preds, data, &bench, diag)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{fit_statistical_binary, fit_statistical_multiclass};
    use super::*;
    use crate::datagen::{Source, StreamKind, StreamSpec};

    fn bernoulli(p: f64, seed: u64) -> impl Iterator<Item = (Vec<f64>, usize)> {
        let mut rng = Rng::new(seed);
        std::iter::from_fn(move || Some((vec![0.5], (rng.uniform() < p) as usize)))
    }

    #[test]
    fn bernoulli_mean_recovered() {
        let cfg = PipelineConfig { eps: 0.1, horizon: Some(3000), seed: 3, ..Default::default() };
        let mut pred = fit_statistical_binary(bernoulli(0.7, 1), &cfg).unwrap();
        let n = 10_000;
        let x = vec![0.5];
        let mean: f64 = (0..n)
            .map(|_| {
                let j = pred.predict(&x).unwrap();
                pred.point(j)[1]
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.7).abs() < 0.1, "{mean}");
    }

    #[test]
    fn zero_labels_concentrate_low() {
        let cfg = PipelineConfig { eps: 0.1, horizon: Some(2000), ..Default::default() };
        let mut pred = fit_statistical_binary(bernoulli(0.0, 2), &cfg).unwrap();
        let xs = vec![vec![0.5]; 2000];
        let data = Dataset::new(xs.clone(), vec![0; 2000]).unwrap();
        let report = pred.evaluate(&data, &cfg).unwrap();
        assert!(report.calibration_abs < 0.1, "{}", report.calibration_abs);
    }

    #[test]
    fn same_seed_same_behavior() {
        let cfg = PipelineConfig { eps: 0.2, horizon: Some(300), seed: 9, ..Default::default() };
        let mut a = fit_statistical_binary(bernoulli(0.4, 5), &cfg).unwrap();
        let mut b = fit_statistical_binary(bernoulli(0.4, 5), &cfg).unwrap();
        let xs = vec![vec![0.1]; 50];
        assert_eq!(a.predict_all(&xs).unwrap(), b.predict_all(&xs).unwrap());
    }

    #[test]
    fn one_class_concentrates_on_vertex() {
        let mut spec = StreamSpec::new(StreamKind::FixedMarginal, 2, 3, 0, 4);
        spec.marginal = Some(vec![0.0, 0.0, 1.0]);
        let cfg = PipelineConfig { k: 3, eps: 0.5, horizon: Some(400), ..Default::default() };
        let mut pred = fit_statistical_multiclass(Source::new(spec).unwrap(), &cfg).unwrap();
        let x = vec![0.2, 0.1];
        let mass: f64 = (0..500)
            .map(|_| {
                let j = pred.predict(&x).unwrap();
                pred.point(j)[2]
            })
            .sum::<f64>()
            / 500.0;
        assert!(mass > 0.8, "{mass}");
    }

    #[test]
    fn exhausted_source() {
        let cfg = PipelineConfig { horizon: Some(10), ..Default::default() };
        let err = fit_statistical_binary(bernoulli(0.5, 1).take(4), &cfg).unwrap_err();
        assert!(matches!(err, Error::SampleExhausted(4)));
    }
}
