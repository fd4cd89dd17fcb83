use serde::{Deserialize, Serialize};

use crate::datagen::Stream;
use crate::error::{Error, Result};
use crate::eval::FeatureMap;
use crate::simplex::DEFAULT_NET_CAP;

/// Pipeline parameters; every field has a default so partial JSON configs
/// resolve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub k: usize,
    /// Target accuracy; sets the net (or grid) resolution.
    pub eps: f64,
    /// Horizon; the theorem-level default is used when absent.
    #[serde(rename = "T")]
    pub horizon: Option<usize>,
    pub delta: f64,
    /// Loss ids to score; empty means the whole bank.
    pub losses: Vec<String>,
    /// Comparator families, one multiaccuracy set each.
    pub families: Vec<FeatureMap>,
    pub seed: u64,
    /// Constants of the multiclass horizon default.
    pub c1: f64,
    pub c2: f64,
    /// Additive accuracy of the game solver; defaults to eps.
    pub solver_eps: Option<f64>,
    pub net_cap: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            k: 2,
            eps: 0.1,
            horizon: None,
            delta: 0.01,
            losses: Vec::new(),
            families: vec![FeatureMap::Identity],
            seed: 0,
            c1: 1.0,
            c2: 1.0,
            solver_eps: None,
            net_cap: DEFAULT_NET_CAP,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Invalid(format!("pipeline eps must lie in (0, 1), got {}", self.eps)));
        }
        if self.k < 2 {
            return Err(Error::InvalidK(self.k));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if self.horizon == Some(0) {
            return Err(Error::Invalid("T must be at least 1".into()));
        }
        if self.families.is_empty() {
            return Err(Error::Invalid("at least one comparator family is required".into()));
        }
        if !(self.c1 >= 0.0 && self.c2 >= 0.0) {
            return Err(Error::Invalid("horizon constants must be nonnegative".into()));
        }
        if let Some(s) = self.solver_eps {
            if !(s > 0.0) {
                return Err(Error::Invalid(format!("solver_eps must be positive, got {s}")));
            }
        }
        Ok(())
    }

    /// c₁·k·(1/ε)^{k+1} + c₂·ε⁻²·ln(1/δ), rounded up.
    pub fn multiclass_horizon(&self) -> usize {
        self.horizon.unwrap_or_else(|| {
            let e = self.eps;
            let t = self.c1 * self.k as f64 * (1.0 / e).powi(self.k as i32 + 1)
                + self.c2 * (1.0 / self.delta).ln() / (e * e);
            (t.ceil() as usize).max(1)
        })
    }

    /// c₂·ln(1/(δε))/ε², rounded up.
    pub fn binary_horizon(&self) -> usize {
        self.horizon.unwrap_or_else(|| {
            let e = self.eps;
            ((self.c2 * (1.0 / (self.delta * e)).ln() / (e * e)).ceil() as usize).max(1)
        })
    }

    pub fn solver_eps(&self) -> f64 {
        self.solver_eps.unwrap_or(self.eps)
    }
}

/// Grid {0, 1/m, …, 1} with m = ⌈1/ε⌉, so the step is at most ε.
pub fn binary_grid(eps: f64) -> Result<Vec<f64>> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidEps(eps));
    }
    let m = (1.0 / eps - 1e-9).ceil().max(1.0) as usize;
    Ok((0..=m).map(|j| j as f64 / m as f64).collect())
}

/// Features, labels and, for synthetic data, the generating comparator.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub xs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub truth: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(xs: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        if xs.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: xs.len(), got: labels.len() });
        }
        let d = xs.first().map_or(0, |x| x.len());
        for (t, x) in xs.iter().enumerate() {
            if x.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: x.len() }.at_round(t));
            }
            if !(crate::simplex::l2(x) <= 1.0 + 1e-9) {
                return Err(Error::Invalid(format!("‖x‖₂ > 1 at row {t}")));
            }
        }
        Ok(Self { xs, labels, truth: None })
    }

    pub fn with_truth(mut self, truth: Vec<f64>) -> Self {
        self.truth = Some(truth);
        self
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.xs.first().map_or(0, |x| x.len())
    }

    pub fn check_labels(&self, k: usize) -> Result<()> {
        match self.labels.iter().position(|&y| y >= k) {
            Some(t) => Err(Error::Invalid(format!("label {} ≥ k = {k}", self.labels[t])).at_round(t)),
            None => Ok(()),
        }
    }

    pub fn binary_labels(&self) -> Vec<u8> {
        self.labels.iter().map(|&y| y as u8).collect()
    }

    pub fn head(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset { xs: self.xs[..n].to_vec(), labels: self.labels[..n].to_vec(), truth: self.truth.clone() }
    }
}

impl From<Stream> for Dataset {
    fn from(s: Stream) -> Self {
        Dataset { xs: s.xs, labels: s.labels, truth: Some(s.truth) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horizon_defaults() {
        let cfg = PipelineConfig { k: 3, eps: 0.25, delta: 0.01, ..Default::default() };
        // 3·4⁴ + 16·ln 100
        assert_eq!(cfg.multiclass_horizon(), (768.0 + 16.0 * 100f64.ln()).ceil() as usize);
        let b = PipelineConfig { eps: 0.1, delta: 0.01, ..Default::default() };
        assert_eq!(b.binary_horizon(), (100.0 * 1000f64.ln()).ceil() as usize);
        assert_eq!(PipelineConfig { horizon: Some(7), ..b }.binary_horizon(), 7);
    }

    #[test]
    fn grid_and_validation() {
        assert_eq!(binary_grid(0.25).unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(binary_grid(0.1).unwrap().len(), 11);
        assert!(PipelineConfig { eps: 1.0, ..Default::default() }.validate().is_err());
        assert!(PipelineConfig { horizon: Some(0), ..Default::default() }.validate().is_err());
        assert!(PipelineConfig { families: vec![], ..Default::default() }.validate().is_err());
    }

    #[test]
    fn partial_json_resolves() {
        let cfg: PipelineConfig = serde_json::from_str(r#"{"k": 3, "T": 50, "families": ["square"]}"#).unwrap();
        assert_eq!(cfg.k, 3);
        assert_eq!(cfg.horizon, Some(50));
        assert_eq!(cfg.families, vec![FeatureMap::Square]);
        assert!(serde_json::from_str::<PipelineConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
