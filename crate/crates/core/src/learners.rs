//! Online linear learners: multiplicative weights over a simplex and
//! projected gradient ascent over box, ball and row-ball sets.
//!
//! Both maximize cumulative linear gain; regret is measured as
//! `sup_u Σ⟨g_t, u - u_t⟩`.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack on declared gain bounds for floating-point noise.
const BOUND_SLACK: f64 = 1e-12;

/// Uniform interface for the learners driven by the approachability loop.
pub trait OnlineLearner {
    fn dim(&self) -> usize;
    fn point(&self) -> &[f64];
    fn observe(&mut self, gain: &[f64]) -> Result<()>;
}

/// Exponential weights over m arms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwuState {
    pub weights: Vec<f64>,
    pub eta: f64,
    pub bound: f64,
    pub t: usize,
}

impl MwuState {
    pub fn new(m: usize, eta: f64, bound: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Invalid("MWU needs at least one arm".into()));
        }
        if !(eta >= 0.0 && eta.is_finite()) || !(bound > 0.0) {
            return Err(Error::Invalid(format!("MWU eta={eta}, L={bound}")));
        }
        Ok(Self { weights: vec![1.0 / m as f64; m], eta, bound, t: 0 })
    }

    /// η = (1/L)·√(2 ln m / T), the tuning for known horizon T.
    pub fn horizon_eta(m: usize, bound: f64, horizon: usize) -> f64 {
        (2.0 * (m as f64).ln() / horizon as f64).sqrt() / bound
    }

    /// η = (1/L)·√(2 ln m)·(5T)^{-1/2}, the tuning for sampled play.
    pub fn sampled_eta(m: usize, bound: f64, horizon: usize) -> f64 {
        (2.0 * (m as f64).ln()).sqrt() / (5.0 * horizon as f64).sqrt() / bound
    }

    pub fn for_horizon(m: usize, bound: f64, horizon: usize) -> Result<Self> {
        Self::new(m, Self::horizon_eta(m, bound, horizon), bound)
    }

    /// Pure update: returns w' ∝ w ∘ exp(η g).
    pub fn update(&self, gains: &[f64]) -> Result<Self> {
        let mut next = self.clone();
        next.apply(gains)?;
        Ok(next)
    }

    fn apply(&mut self, gains: &[f64]) -> Result<()> {
        if gains.len() != self.weights.len() {
            return Err(Error::DimensionMismatch { expected: self.weights.len(), got: gains.len() });
        }
        for (i, &g) in gains.iter().enumerate() {
            if !g.is_finite() || g.abs() > self.bound + BOUND_SLACK {
                return Err(Error::GainOutOfBounds { index: i, value: g, bound: self.bound });
            }
        }
        // shift by the max exponent for stability; normalization removes it
        let shift = gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max) * self.eta;
        let mut total = 0.0;
        for (w, &g) in self.weights.iter_mut().zip(gains) {
            *w *= (self.eta * g - shift).exp();
            total += *w;
        }
        for w in &mut self.weights {
            *w /= total;
        }
        self.t += 1;
        Ok(())
    }
}

impl OnlineLearner for MwuState {
    fn dim(&self) -> usize {
        self.weights.len()
    }
    fn point(&self) -> &[f64] {
        &self.weights
    }
    fn observe(&mut self, gain: &[f64]) -> Result<()> {
        self.apply(gain)
    }
}

/// Feasible sets for projected gradient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FeasibleSet {
    /// [-1,1]^dim
    Box { dim: usize },
    /// Euclidean ball of the given radius
    Ball { dim: usize, radius: f64 },
    /// rows × cols matrices (row-major) with every row of ℓ2 norm ≤ 1
    RowBall { rows: usize, cols: usize },
}

impl FeasibleSet {
    pub fn dim(&self) -> usize {
        match *self {
            FeasibleSet::Box { dim } | FeasibleSet::Ball { dim, .. } => dim,
            FeasibleSet::RowBall { rows, cols } => rows * cols,
        }
    }

    /// ℓ2 gain bound under which the closed-form regret holds.
    pub fn default_gain_bound(&self) -> f64 {
        match self {
            FeasibleSet::Box { .. } | FeasibleSet::RowBall { .. } => 2.0,
            FeasibleSet::Ball { .. } => 1.0,
        }
    }

    /// Exact Euclidean projection, in place.
    pub fn project(&self, x: &mut [f64]) {
        match *self {
            FeasibleSet::Box { .. } => {
                for v in x {
                    *v = v.clamp(-1.0, 1.0);
                }
            }
            FeasibleSet::Ball { radius, .. } => scale_into_ball(x, radius),
            FeasibleSet::RowBall { cols, .. } => {
                for row in x.chunks_mut(cols) {
                    scale_into_ball(row, 1.0);
                }
            }
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match *self {
            FeasibleSet::Box { .. } => x.iter().all(|v| v.abs() <= 1.0 + tol),
            FeasibleSet::Ball { radius, .. } => crate::simplex::l2(x) <= radius + tol,
            FeasibleSet::RowBall { cols, .. } => x.chunks(cols).all(|r| crate::simplex::l2(r) <= 1.0 + tol),
        }
    }
}

fn scale_into_ball(x: &mut [f64], radius: f64) {
    let n = crate::simplex::l2(x);
    if n > radius {
        let f = radius / n;
        for v in x {
            *v *= f;
        }
    }
}

/// Projected gradient ascent state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgdState {
    pub point: Vec<f64>,
    pub set: FeasibleSet,
    pub eta: f64,
    pub gain_bound: f64,
    pub t: usize,
}

impl PgdState {
    /// Starts at the origin.
    pub fn new(set: FeasibleSet, eta: f64) -> Self {
        let gain_bound = set.default_gain_bound();
        Self { point: vec![0.0; set.dim()], set, eta, gain_bound, t: 0 }
    }

    pub fn with_gain_bound(mut self, bound: f64) -> Self {
        self.gain_bound = bound;
        self
    }

    /// Pure update: point ← Π(point + η·gain).
    pub fn update(&self, gain: &[f64]) -> Result<Self> {
        let mut next = self.clone();
        next.apply(gain)?;
        Ok(next)
    }

    fn check_gain(&self, gain: &[f64]) -> Result<()> {
        let n = crate::simplex::l2(gain);
        if !n.is_finite() || n > self.gain_bound + BOUND_SLACK {
            return Err(Error::GainOutOfBounds { index: 0, value: n, bound: self.gain_bound });
        }
        Ok(())
    }

    fn apply(&mut self, gain: &[f64]) -> Result<()> {
        if gain.len() != self.point.len() {
            return Err(Error::DimensionMismatch { expected: self.point.len(), got: gain.len() });
        }
        self.check_gain(gain)?;
        for (p, g) in self.point.iter_mut().zip(gain) {
            *p += self.eta * g;
        }
        self.set.project(&mut self.point);
        self.t += 1;
        Ok(())
    }

    /// Update with a gain that is zero outside the listed blocks
    /// `(start, values)`, which must not overlap.
    ///
    /// Only valid for the box, whose projection is coordinatewise.
    pub fn observe_sparse(&mut self, blocks: &[(usize, &[f64])]) -> Result<()> {
        if !matches!(self.set, FeasibleSet::Box { .. }) {
            return Err(Error::Invalid("sparse updates need a separable projection".into()));
        }
        let mut sq = 0.0;
        for (start, block) in blocks {
            if start + block.len() > self.point.len() {
                return Err(Error::DimensionMismatch { expected: self.point.len(), got: start + block.len() });
            }
            sq += block.iter().map(|v| v * v).sum::<f64>();
        }
        let n = sq.sqrt();
        if !n.is_finite() || n > self.gain_bound + BOUND_SLACK {
            return Err(Error::GainOutOfBounds { index: 0, value: n, bound: self.gain_bound });
        }
        for (start, block) in blocks {
            for (p, g) in self.point[*start..start + block.len()].iter_mut().zip(block.iter()) {
                *p = (*p + self.eta * g).clamp(-1.0, 1.0);
            }
        }
        self.t += 1;
        Ok(())
    }
}

impl OnlineLearner for PgdState {
    fn dim(&self) -> usize {
        self.point.len()
    }
    fn point(&self) -> &[f64] {
        &self.point
    }
    fn observe(&mut self, gain: &[f64]) -> Result<()> {
        self.apply(gain)
    }
}

/// Step sizes from the closed-form analyses.
pub mod eta {
    /// Ball of radius 1, unit gains: η = 1/√T.
    pub fn ball(horizon: usize) -> f64 {
        1.0 / (horizon as f64).sqrt()
    }
    /// Row-ball with k rows, gains of norm ≤ 2: η = √(2Θ)/(L√T), Θ = k/2, L = 2.
    pub fn row_ball(k: usize, horizon: usize) -> f64 {
        (k as f64).sqrt() / (2.0 * (horizon as f64).sqrt())
    }
    /// Box calibration learner: η = ε/2.
    pub fn calibration_box(eps: f64) -> f64 {
        eps / 2.0
    }
    /// Box calibration learner fed unbiased gain estimates: η = ε/10.
    pub fn calibration_box_stochastic(eps: f64) -> f64 {
        eps / 10.0
    }
}

/// Families of closed-form regret bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegretKind {
    /// L·√(2T ln m)
    Mwu,
    /// √T
    PgdBall,
    /// 2√(kT)
    PgdRowBall,
    /// εT + dim/ε with dim = k|N|
    PgdBox,
    /// εT + 10·dim/ε + 32√(T ln(2/δ)), box learner on estimated gains
    PgdBoxStochastic,
}

impl FromStr for RegretKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "mwu" => RegretKind::Mwu,
            "pgd-ball" => RegretKind::PgdBall,
            "pgd-row-ball" => RegretKind::PgdRowBall,
            "pgd-box" => RegretKind::PgdBox,
            "pgd-box-stochastic" => RegretKind::PgdBoxStochastic,
            other => return Err(Error::UnknownRegretKind(other.to_string())),
        })
    }
}

/// Parameters consumed by `theoretical_regret`; unused fields are ignored.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretParams {
    /// arms (MWU)
    pub m: usize,
    /// gain bound (MWU)
    pub bound: f64,
    /// rows (row-ball)
    pub k: usize,
    /// step scale (box)
    pub eps: f64,
    /// dimension k|N| (box)
    pub dim: usize,
    /// failure probability (stochastic box)
    pub delta: f64,
}

pub fn theoretical_regret(kind: RegretKind, horizon: usize, p: &RegretParams) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::Invalid("horizon must be at least 1".into()));
    }
    let t = horizon as f64;
    Ok(match kind {
        RegretKind::Mwu => p.bound * (2.0 * t * (p.m as f64).ln()).sqrt(),
        RegretKind::PgdBall => t.sqrt(),
        RegretKind::PgdRowBall => 2.0 * (p.k as f64 * t).sqrt(),
        RegretKind::PgdBox => p.eps * t + p.dim as f64 / p.eps,
        RegretKind::PgdBoxStochastic => {
            p.eps * t + 10.0 * p.dim as f64 / p.eps + 32.0 * (t * (2.0 / p.delta).ln()).sqrt()
        }
    })
}

/// Lookup by name; fails on unknown kinds.
pub fn theoretical_regret_named(kind: &str, horizon: usize, p: &RegretParams) -> Result<f64> {
    theoretical_regret(kind.parse()?, horizon, p)
}

/// High-probability bound for mirror ascent on conditionally unbiased gain
/// estimates: 4L√(TΘ) + 16LR√(T ln(2/δ)).
pub fn stochastic_regret_bound(bound: f64, theta: f64, radius: f64, horizon: usize, delta: f64) -> f64 {
    let t = horizon as f64;
    4.0 * bound * (t * theta).sqrt() + 16.0 * bound * radius * (t * (2.0 / delta).ln()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mwu_examples() {
        let s = MwuState::new(1, 0.3, 1.0).unwrap();
        assert_eq!(s.update(&[0.7]).unwrap().weights, vec![1.0]);

        let s = MwuState::new(2, 2f64.ln(), 1.0).unwrap();
        let n = s.update(&[1.0, 0.0]).unwrap();
        assert!((n.weights[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((n.weights[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.weights, vec![0.5, 0.5]);

        let s = MwuState { weights: vec![0.2, 0.3, 0.5], eta: 0.4, bound: 1.0, t: 0 };
        let n = s.update(&[0.6, 0.6, 0.6]).unwrap();
        for (a, b) in n.weights.iter().zip(&s.weights) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(s.update(&[1.5, 0.0, 0.0]), Err(Error::GainOutOfBounds { .. })));
    }

    #[test]
    fn pgd_examples() {
        let s = PgdState::new(FeasibleSet::Ball { dim: 2, radius: 1.0 }, 0.5);
        let s = PgdState { point: vec![0.9, 0.0], ..s };
        assert_eq!(s.update(&[0.0, 0.0]).unwrap().point, vec![0.9, 0.0]);
        let n = s.update(&[1.0, 0.0]).unwrap();
        assert!((n.point[0] - 1.0).abs() < 1e-15 && n.point[1] == 0.0);

        let b = PgdState::new(FeasibleSet::Box { dim: 3 }, 1.0).with_gain_bound(2.0);
        let n = b.update(&[1.7, 0.0, -0.2]).unwrap();
        assert_eq!(n.point, vec![1.0, 0.0, -0.2]);
        assert!(b.update(&[1.0]).is_err());

        let r = PgdState::new(FeasibleSet::RowBall { rows: 2, cols: 2 }, 1.0);
        let n = r.update(&[0.9, 1.2, 0.1, 0.0]).unwrap();
        assert!((n.point[0] - 0.6).abs() < 1e-15 && (n.point[1] - 0.8).abs() < 1e-15);
        assert!((n.point[2] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn block_update_matches_dense() {
        let mut a = PgdState::new(FeasibleSet::Box { dim: 6 }, 0.7);
        let b = a.update(&[0.0, 0.0, 0.9, -1.3, 0.0, 0.0]).unwrap();
        a.observe_sparse(&[(2, &[0.9, -1.3][..])]).unwrap();
        assert_eq!(a.point, b.point);
    }

    #[test]
    fn regret_formulas() {
        let p = RegretParams { m: 2, bound: 1.0, ..Default::default() };
        let r = theoretical_regret_named("mwu", 100, &p).unwrap();
        assert!((r - 11.774100225154747).abs() < 1e-9);
        assert_eq!(theoretical_regret_named("pgd-ball", 16, &p).unwrap(), 4.0);
        let p = RegretParams { eps: 0.25, dim: 459, ..Default::default() };
        assert_eq!(theoretical_regret_named("pgd-box", 4000, &p).unwrap(), 1000.0 + 1836.0);
        assert!(matches!(theoretical_regret_named("adagrad", 10, &p), Err(Error::UnknownRegretKind(_))));
    }
}
