//! Concrete payoff sets for the omniprediction pipelines.
//!
//! Binary sets act on grid indices, multiclass sets on net indices. Each set
//! keeps the running sum of its payoff vectors so that `sup_average` is the
//! closed-form sup over its distinguisher class.

use std::sync::Arc;

use crate::approach::PayoffSet;
use crate::error::{Error, Result};
use crate::eval::FeatureMap;
use crate::learners::{eta, theoretical_regret, FeasibleSet, MwuState, PgdState, RegretKind, RegretParams};
use crate::simplex::{l2, sign, Mixture, SimplexNet};

fn mean_prediction(grid: &[f64], a: &Mixture) -> f64 {
    a.iter().map(|&(j, w)| w * grid[j]).sum()
}

fn check_label(y: usize, k: usize) -> Result<()> {
    if y >= k {
        return Err(Error::Invalid(format!("label {y} out of range for k = {k}")));
    }
    Ok(())
}

/// Threshold calibration: MWU over thresholds s on the grid, payoff
/// Σ_p a_p (p − y) sign(p − s).
#[derive(Debug, Clone)]
pub struct ThresholdCalibrationSet {
    grid: Arc<Vec<f64>>,
    mwu: MwuState,
    cum: Vec<f64>,
    t: usize,
    stochastic: Option<f64>,
}

impl ThresholdCalibrationSet {
    pub fn new(grid: Arc<Vec<f64>>, horizon: usize) -> Result<Self> {
        let n = grid.len();
        let mwu = MwuState::for_horizon(n, 1.0, horizon)?;
        Ok(Self { grid, mwu, cum: vec![0.0; n], t: 0, stochastic: None })
    }

    /// Same learner, with the high-probability regret bound for gains
    /// estimated from one sample per round.
    pub fn statistical(grid: Arc<Vec<f64>>, horizon: usize, delta: f64) -> Result<Self> {
        Ok(Self { stochastic: Some(delta), ..Self::new(grid, horizon)? })
    }

    fn gains(&self, a: &Mixture, y: usize) -> Vec<f64> {
        let y = y as f64;
        self.grid
            .iter()
            .map(|&s| a.iter().map(|&(j, w)| w * (self.grid[j] - y) * sign(self.grid[j] - s)).sum())
            .collect()
    }

    /// Per-threshold averaged scores C(s).
    pub fn scores(&self) -> Vec<f64> {
        let t = self.t.max(1) as f64;
        self.cum.iter().map(|c| c / t).collect()
    }
}

impl PayoffSet<Vec<f64>, usize> for ThresholdCalibrationSet {
    fn id(&self) -> String {
        "calibration-thresh".into()
    }
    fn width(&self) -> f64 {
        1.0
    }
    fn payoff(&self, _x: &Vec<f64>, a: &Mixture, y: &usize) -> f64 {
        self.gains(a, *y).iter().zip(&self.mwu.weights).map(|(g, u)| g * u).sum()
    }
    fn observe(&mut self, _x: &Vec<f64>, a: &Mixture, y: &usize) -> Result<()> {
        check_label(*y, 2)?;
        let g = self.gains(a, *y);
        self.mwu = self.mwu.update(&g)?;
        for (c, v) in self.cum.iter_mut().zip(&g) {
            *c += v;
        }
        self.t += 1;
        Ok(())
    }
    fn sup_average(&self) -> f64 {
        if self.t == 0 {
            return 0.0;
        }
        self.cum.iter().cloned().fold(f64::NEG_INFINITY, f64::max) / self.t as f64
    }
    fn regret_bound(&self, horizon: usize) -> f64 {
        let t = horizon as f64;
        match self.stochastic {
            // thresholds number at most 1/ε + 2
            Some(delta) => 20.0 * (t * (4.0 * self.grid.len() as f64 / delta).ln()).sqrt(),
            None => (2.0 * t * (self.grid.len() as f64).ln()).sqrt(),
        }
    }
    fn point(&self) -> &[f64] {
        &self.mwu.weights
    }
    /// f_p = Σ_s u_s sign(p − s) = 2·U(p) − 1 with U the prefix mass.
    fn add_adjoint_at(&self, point: &[f64], _x: &Vec<f64>, weight: f64, out: &mut [f64]) -> Result<()> {
        if point.len() != self.grid.len() || out.len() != self.grid.len() {
            return Err(Error::DimensionMismatch { expected: self.grid.len(), got: point.len().min(out.len()) });
        }
        let mut prefix = 0.0;
        for (o, u) in out.iter_mut().zip(point) {
            prefix += u;
            *o += weight * (2.0 * prefix - 1.0);
        }
        Ok(())
    }
}

/// Binary multiaccuracy against x ↦ ⟨c, x⟩ over the unit ball, payoff
/// ⟨c, x⟩·(E_{p∼a} p − y).
#[derive(Debug, Clone)]
pub struct BinaryLinearSet {
    grid: Arc<Vec<f64>>,
    pgd: PgdState,
    cum: Vec<f64>,
    t: usize,
    stochastic: Option<f64>,
}

impl BinaryLinearSet {
    pub fn new(grid: Arc<Vec<f64>>, d: usize, horizon: usize) -> Self {
        let pgd = PgdState::new(FeasibleSet::Ball { dim: d, radius: 1.0 }, eta::ball(horizon));
        Self { grid, pgd, cum: vec![0.0; d], t: 0, stochastic: None }
    }

    pub fn statistical(grid: Arc<Vec<f64>>, d: usize, horizon: usize, delta: f64) -> Self {
        Self { stochastic: Some(delta), ..Self::new(grid, d, horizon) }
    }
}

impl PayoffSet<Vec<f64>, usize> for BinaryLinearSet {
    fn id(&self) -> String {
        "multiaccuracy-linear".into()
    }
    fn width(&self) -> f64 {
        1.0
    }
    fn payoff(&self, x: &Vec<f64>, a: &Mixture, y: &usize) -> f64 {
        crate::simplex::dot(&self.pgd.point, x) * (mean_prediction(&self.grid, a) - *y as f64)
    }
    fn observe(&mut self, x: &Vec<f64>, a: &Mixture, y: &usize) -> Result<()> {
        check_label(*y, 2)?;
        if x.len() != self.cum.len() {
            return Err(Error::DimensionMismatch { expected: self.cum.len(), got: x.len() });
        }
        let e = mean_prediction(&self.grid, a) - *y as f64;
        let g: Vec<f64> = x.iter().map(|v| e * v).collect();
        self.pgd = self.pgd.update(&g)?;
        for (c, v) in self.cum.iter_mut().zip(&g) {
            *c += v;
        }
        self.t += 1;
        Ok(())
    }
    fn sup_average(&self) -> f64 {
        if self.t == 0 {
            return 0.0;
        }
        l2(&self.cum) / self.t as f64
    }
    fn regret_bound(&self, horizon: usize) -> f64 {
        let t = horizon as f64;
        match self.stochastic {
            Some(delta) => 20.0 * (t * (2.0 / delta).ln()).sqrt(),
            None => t.sqrt(),
        }
    }
    fn point(&self) -> &[f64] {
        &self.pgd.point
    }
    fn add_adjoint_at(&self, point: &[f64], x: &Vec<f64>, weight: f64, out: &mut [f64]) -> Result<()> {
        if point.len() != x.len() {
            return Err(Error::DimensionMismatch { expected: point.len(), got: x.len() });
        }
        let d = crate::simplex::dot(point, x);
        for o in out.iter_mut() {
            *o += weight * d;
        }
        Ok(())
    }
}

/// ℓ∞-class calibration: projected gradient over [-1,1]^{N×k}, payoff
/// Σ_s a_s ⟨u_s, s − e_y⟩.
#[derive(Debug, Clone)]
pub struct BoxCalibrationSet {
    net: Arc<SimplexNet>,
    pgd: PgdState,
    cum: Vec<f64>,
    t: usize,
    eps: f64,
    stochastic: Option<f64>,
}

impl BoxCalibrationSet {
    pub fn new(net: Arc<SimplexNet>, eps: f64) -> Self {
        let dim = net.len() * net.k();
        let pgd = PgdState::new(FeasibleSet::Box { dim }, eta::calibration_box(eps));
        Self { net, pgd, cum: vec![0.0; dim], t: 0, eps, stochastic: None }
    }

    /// Smaller step for gains built from one fresh sample per round.
    pub fn statistical(net: Arc<SimplexNet>, eps: f64, delta: f64) -> Self {
        let mut s = Self::new(net, eps);
        s.pgd.eta = eta::calibration_box_stochastic(eps);
        s.stochastic = Some(delta);
        s
    }

    fn block(&self, s: usize, w: f64, y: usize) -> Vec<f64> {
        self.net.point(s).iter().enumerate().map(|(j, p)| w * (p - if j == y { 1.0 } else { 0.0 })).collect()
    }
}

impl PayoffSet<Vec<f64>, usize> for BoxCalibrationSet {
    fn id(&self) -> String {
        "calibration-box".into()
    }
    fn width(&self) -> f64 {
        2.0
    }
    fn payoff(&self, _x: &Vec<f64>, a: &Mixture, y: &usize) -> f64 {
        let k = self.net.k();
        a.iter()
            .map(|&(s, w)| {
                let u = &self.pgd.point[s * k..(s + 1) * k];
                self.block(s, w, *y).iter().zip(u).map(|(g, u)| g * u).sum::<f64>()
            })
            .sum()
    }
    fn observe(&mut self, _x: &Vec<f64>, a: &Mixture, y: &usize) -> Result<()> {
        let k = self.net.k();
        check_label(*y, k)?;
        let blocks: Vec<(usize, Vec<f64>)> = a.iter().map(|&(s, w)| (s * k, self.block(s, w, *y))).collect();
        let refs: Vec<(usize, &[f64])> = blocks.iter().map(|(i, b)| (*i, b.as_slice())).collect();
        self.pgd.observe_sparse(&refs)?;
        for (start, b) in &blocks {
            for (c, v) in self.cum[*start..start + k].iter_mut().zip(b) {
                *c += v;
            }
        }
        self.t += 1;
        Ok(())
    }
    fn sup_average(&self) -> f64 {
        if self.t == 0 {
            return 0.0;
        }
        self.cum.iter().map(|v| v.abs()).sum::<f64>() / self.t as f64
    }
    fn regret_bound(&self, horizon: usize) -> f64 {
        let p = RegretParams {
            eps: self.eps,
            dim: self.cum.len(),
            delta: self.stochastic.unwrap_or(1.0),
            ..Default::default()
        };
        let kind = if self.stochastic.is_some() { RegretKind::PgdBoxStochastic } else { RegretKind::PgdBox };
        theoretical_regret(kind, horizon, &p).unwrap_or(f64::INFINITY)
    }
    fn point(&self) -> &[f64] {
        &self.pgd.point
    }
    fn add_adjoint_at(&self, point: &[f64], _x: &Vec<f64>, weight: f64, out: &mut [f64]) -> Result<()> {
        if point.len() != out.len() {
            return Err(Error::DimensionMismatch { expected: out.len(), got: point.len() });
        }
        for (o, u) in out.iter_mut().zip(point) {
            *o += weight * u;
        }
        Ok(())
    }
}

/// Multiaccuracy against x ↦ Cφ(x) with rows of C in the unit ball,
/// payoff ⟨Cφ(x), E_{s∼a} s − e_y⟩.
#[derive(Debug, Clone)]
pub struct LinearFamilySet {
    net: Arc<SimplexNet>,
    map: FeatureMap,
    cols: usize,
    pgd: PgdState,
    cum: Vec<f64>,
    t: usize,
    stochastic: Option<f64>,
}

impl LinearFamilySet {
    pub fn new(net: Arc<SimplexNet>, map: FeatureMap, d: usize, horizon: usize) -> Self {
        let k = net.k();
        let cols = map.apply(&vec![0.0; d]).len();
        let pgd = PgdState::new(FeasibleSet::RowBall { rows: k, cols }, eta::row_ball(k, horizon));
        Self { net, map, cols, pgd, cum: vec![0.0; k * cols], t: 0, stochastic: None }
    }

    pub fn statistical(net: Arc<SimplexNet>, map: FeatureMap, d: usize, horizon: usize, delta: f64) -> Self {
        Self { stochastic: Some(delta), ..Self::new(net, map, d, horizon) }
    }

    pub fn map(&self) -> FeatureMap {
        self.map
    }

    fn residual(&self, a: &Mixture, y: usize) -> Vec<f64> {
        let k = self.net.k();
        let mut r = vec![0.0; k];
        for &(s, w) in a {
            for (ri, p) in r.iter_mut().zip(self.net.point(s)) {
                *ri += w * p;
            }
        }
        r[y] -= 1.0;
        r
    }

    fn predict(&self, c: &[f64], x: &[f64]) -> Vec<f64> {
        let phi = self.map.apply(x);
        c.chunks(self.cols).map(|row| crate::simplex::dot(row, &phi).clamp(-1.0, 1.0)).collect()
    }
}

impl PayoffSet<Vec<f64>, usize> for LinearFamilySet {
    fn id(&self) -> String {
        format!("multiaccuracy-{}", self.map.name())
    }
    fn width(&self) -> f64 {
        2.0
    }
    fn payoff(&self, x: &Vec<f64>, a: &Mixture, y: &usize) -> f64 {
        crate::simplex::dot(&self.predict(&self.pgd.point, x), &self.residual(a, *y))
    }
    fn observe(&mut self, x: &Vec<f64>, a: &Mixture, y: &usize) -> Result<()> {
        check_label(*y, self.net.k())?;
        let phi = self.map.apply(x);
        if phi.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, got: phi.len() });
        }
        let r = self.residual(a, *y);
        let g: Vec<f64> = r.iter().flat_map(|ri| phi.iter().map(move |f| ri * f)).collect();
        self.pgd = self.pgd.update(&g)?;
        for (c, v) in self.cum.iter_mut().zip(&g) {
            *c += v;
        }
        self.t += 1;
        Ok(())
    }
    fn sup_average(&self) -> f64 {
        if self.t == 0 {
            return 0.0;
        }
        self.cum.chunks(self.cols).map(l2).sum::<f64>() / self.t as f64
    }
    fn regret_bound(&self, horizon: usize) -> f64 {
        let k = self.net.k() as f64;
        let t = horizon as f64;
        match self.stochastic {
            Some(delta) => 40.0 * (k * t * (2.0 / delta).ln()).sqrt(),
            None => 2.0 * (k * t).sqrt(),
        }
    }
    fn point(&self) -> &[f64] {
        &self.pgd.point
    }
    fn add_adjoint_at(&self, point: &[f64], x: &Vec<f64>, weight: f64, out: &mut [f64]) -> Result<()> {
        if point.len() != self.cum.len() {
            return Err(Error::DimensionMismatch { expected: self.cum.len(), got: point.len() });
        }
        let u = self.predict(point, x);
        for block in out.chunks_mut(u.len()) {
            for (o, v) in block.iter_mut().zip(&u) {
                *o += weight * v;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_round_box_sup_is_l1_residual() {
        let net = Arc::new(SimplexNet::new(3, 1.0).unwrap());
        let mut set = BoxCalibrationSet::new(net.clone(), 0.5);
        let s = net.nearest(&[0.5, 0.5, 0.0]).unwrap();
        set.observe(&vec![], &vec![(s, 1.0)], &2).unwrap();
        // ‖(½, ½, −1)‖₁
        assert!((set.sup_average() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn random_box_distinguishers_never_beat_closed_form() {
        let net = Arc::new(SimplexNet::new(3, 0.5).unwrap());
        let mut set = BoxCalibrationSet::new(net.clone(), 0.5);
        let mut rng = crate::Rng::new(3);
        let mut cum = vec![0.0; net.len() * 3];
        let t = 40;
        for _ in 0..t {
            let s = rng.below(net.len());
            let y = rng.below(3);
            set.observe(&vec![], &vec![(s, 1.0)], &y).unwrap();
            for j in 0..3 {
                cum[s * 3 + j] += net.point(s)[j] - if j == y { 1.0 } else { 0.0 };
            }
        }
        let sup = set.sup_average();
        for _ in 0..1000 {
            let u: Vec<f64> = (0..cum.len()).map(|_| 2.0 * rng.uniform() - 1.0).collect();
            assert!(crate::simplex::dot(&u, &cum) / t as f64 <= sup + 1e-12);
        }
    }

    #[test]
    fn threshold_adjoint_matches_payoff() {
        let grid = Arc::new(vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let mut set = ThresholdCalibrationSet::new(grid.clone(), 10).unwrap();
        set.observe(&vec![], &vec![(3, 1.0)], &0).unwrap();
        let mut f = vec![0.0; 5];
        set.add_adjoint(&vec![], 1.0, &mut f).unwrap();
        let a = vec![(1, 0.3), (4, 0.7)];
        for y in 0..2 {
            let direct = set.payoff(&vec![], &a, &y);
            let via = crate::oracles::binary_payoff(&f, &grid, &a, y as f64);
            assert!((direct - via).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_adjoint_matches_payoff() {
        let net = Arc::new(SimplexNet::new(3, 0.5).unwrap());
        let mut set = LinearFamilySet::new(net.clone(), FeatureMap::Square, 2, 100);
        let x = vec![0.6, -0.3];
        set.observe(&x, &vec![(2, 1.0)], &1).unwrap();
        let mut f = vec![0.0; 3 * net.len()];
        set.add_adjoint(&x, 1.0, &mut f).unwrap();
        let a = vec![(0, 0.5), (4, 0.5)];
        for y in 0..3 {
            let direct = set.payoff(&x, &a, &y);
            let via = crate::oracles::mloo_payoff(&f, &net, &a, y);
            assert!((direct - via).abs() < 1e-12);
        }
    }
}
