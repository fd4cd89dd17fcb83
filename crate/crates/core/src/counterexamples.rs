//! Two negative results made executable: a pair of individually
//! approachable sets that no single action sequence approaches together, and
//! a two-point multiclass isotonic regression whose minimizer depends on the
//! proper loss.

use serde::Serialize;

use crate::approach::{run_approach, BoxedSet, MixtureOracle, Mode, PayoffSet};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::simplex::{normalize, Mixture};

/// Payoff a_i for actions in Δ²; the distinguisher class is {1}.
struct CoordinateSet {
    coord: usize,
    sum: f64,
    t: usize,
}

impl CoordinateSet {
    fn new(coord: usize) -> Self {
        Self { coord, sum: 0.0, t: 0 }
    }
}

impl PayoffSet<(), ()> for CoordinateSet {
    fn id(&self) -> String {
        format!("coordinate-{}", self.coord + 1)
    }
    fn width(&self) -> f64 {
        1.0
    }
    fn payoff(&self, _: &(), a: &Mixture, _: &()) -> f64 {
        a.iter().filter(|(j, _)| *j == self.coord).map(|(_, w)| w).sum()
    }
    fn observe(&mut self, x: &(), a: &Mixture, y: &()) -> Result<()> {
        self.sum += self.payoff(x, a, y);
        self.t += 1;
        Ok(())
    }
    fn sup_average(&self) -> f64 {
        if self.t == 0 {
            0.0
        } else {
            self.sum / self.t as f64
        }
    }
    fn regret_bound(&self, _: usize) -> f64 {
        0.0
    }
    fn point(&self) -> &[f64] {
        &[]
    }
}

/// Plays a fixed sequence of mixtures over the two actions.
struct Replay {
    actions: Vec<[f64; 2]>,
    t: usize,
}

impl MixtureOracle<(), ()> for Replay {
    fn respond(&mut self, _: &[f64], _: &(), _: &[BoxedSet<(), ()>]) -> Result<Mixture> {
        let a = self.actions.get(self.t).ok_or(Error::SampleExhausted(self.t))?;
        self.t += 1;
        Ok(vec![(0, a[0]), (1, a[1])])
    }
}

/// Exact oracle for a single coordinate set: all mass on the other action.
struct Avoid(usize);

impl MixtureOracle<(), ()> for Avoid {
    fn respond(&mut self, _: &[f64], _: &(), _: &[BoxedSet<(), ()>]) -> Result<Mixture> {
        Ok(vec![(1 - self.0, 1.0)])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ImpossibilityReport {
    pub horizon: usize,
    /// Average payoffs of the two sets under the supplied actions.
    pub averages: [f64; 2],
    pub sum: f64,
    pub max: f64,
    /// Each set approached alone by its own oracle.
    pub solo: [f64; 2],
}

impl ImpossibilityReport {
    pub fn holds(&self, tol: f64) -> bool {
        (self.sum - 1.0).abs() <= tol && self.max >= 0.5 - tol && self.solo.iter().all(|&v| v <= tol)
    }
}

/// Runs the two-set instance on `actions` (mixtures over Δ²) and each set
/// alone against its exact oracle for the same horizon.
pub fn demo_mloo_impossibility(actions: &[[f64; 2]]) -> Result<ImpossibilityReport> {
    let horizon = actions.len();
    if horizon == 0 {
        return Err(Error::Invalid("need at least one round".into()));
    }
    let actions: Vec<[f64; 2]> = actions.iter().map(|a| normalize(a).map(|v| [v[0], v[1]])).collect::<Result<_>>()?;
    let rounds = || std::iter::repeat(((), ()));
    let sets: Vec<BoxedSet<(), ()>> = vec![Box::new(CoordinateSet::new(0)), Box::new(CoordinateSet::new(1))];
    let joint = run_approach(sets, Replay { actions, t: 0 }, rounds(), horizon, Mode::Deterministic, Rng::new(0))?;
    let averages = [joint.average_payoff(0)?, joint.average_payoff(1)?];
    let mut solo = [0.0; 2];
    for (i, v) in solo.iter_mut().enumerate() {
        let sets: Vec<BoxedSet<(), ()>> = vec![Box::new(CoordinateSet::new(i))];
        let d = run_approach(sets, Avoid(i), rounds(), horizon, Mode::Deterministic, Rng::new(0))?;
        *v = d.average_payoff(0)?;
    }
    Ok(ImpossibilityReport {
        horizon,
        averages,
        sum: averages[0] + averages[1],
        max: averages[0].max(averages[1]),
        solo,
    })
}

/// Uniformly random mixtures over the two actions.
pub fn random_actions(horizon: usize, rng: &mut Rng) -> Vec<[f64; 2]> {
    (0..horizon)
        .map(|_| {
            let u = rng.uniform();
            [u, 1.0 - u]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IsoLoss {
    /// ½‖p − y‖²
    Squared,
    /// −log p_y
    Log,
}

impl IsoLoss {
    pub fn value(&self, p: &[f64], y: usize) -> f64 {
        match self {
            IsoLoss::Squared => {
                0.5 * p.iter().enumerate().map(|(i, v)| (v - if i == y { 1.0 } else { 0.0 }).powi(2)).sum::<f64>()
            }
            IsoLoss::Log => -p[y].ln(),
        }
    }
}

/// Points v_i ∈ R^k with vertex labels y_i.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsotonicInstance {
    pub vs: Vec<Vec<f64>>,
    pub ys: Vec<usize>,
    pub loss: IsoLoss,
}

impl IsotonicInstance {
    /// v₁ = 0, v₂ = e₁, y₁ = e₁, y₂ = e₂ in R³.
    pub fn reference(loss: IsoLoss) -> Self {
        Self { vs: vec![vec![0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]], ys: vec![0, 1], loss }
    }

    fn k(&self) -> usize {
        self.vs.first().map_or(0, |v| v.len())
    }

    pub fn objective(&self, ps: &[Vec<f64>]) -> f64 {
        ps.iter().zip(&self.ys).map(|(p, &y)| self.loss.value(p, y)).sum()
    }

    /// Largest violation of ⟨p_j, v_i − v_j⟩ ≤ f_i − f_j.
    pub fn max_violation(&self, ps: &[Vec<f64>], fs: &[f64]) -> f64 {
        let n = self.vs.len();
        let mut worst = f64::NEG_INFINITY;
        for i in 0..n {
            for j in 0..n {
                let lhs: f64 =
                    ps[j].iter().zip(self.vs[i].iter().zip(&self.vs[j])).map(|(p, (a, b))| p * (a - b)).sum();
                worst = worst.max(lhs - (fs[i] - fs[j]));
            }
        }
        worst
    }

    fn validate(&self) -> Result<(Option<usize>, usize, usize)> {
        let k = self.k();
        if self.vs.len() != 2 || self.ys.len() != 2 {
            return Err(Error::Invalid("only two-point instances are supported".into()));
        }
        if k < 2 || self.vs[1].len() != k {
            return Err(Error::Invalid("points must share a dimension k ≥ 2".into()));
        }
        if self.ys.iter().any(|&y| y >= k) {
            return Err(Error::Invalid("labels must be vertices of Δ^k".into()));
        }
        let diff: Vec<f64> = self.vs[1].iter().zip(&self.vs[0]).map(|(a, b)| a - b).collect();
        let nz: Vec<usize> = (0..k).filter(|&i| diff[i] != 0.0).collect();
        match nz.as_slice() {
            [] => Ok((None, 0, 1)),
            // order the points so that v_hi − v_lo = c·e_a with c > 0
            [a] if diff[*a] > 0.0 => Ok((Some(*a), 0, 1)),
            [a] => Ok((Some(*a), 1, 0)),
            _ => Err(Error::Invalid("v₂ − v₁ must be a multiple of a basis vector".into())),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IsotonicSolution {
    pub ps: Vec<Vec<f64>>,
    pub fs: Vec<f64>,
    pub objective: f64,
    /// Shared coordinate [p₁]_a = [p₂]_a on the tight constraint, if active.
    pub t: Option<f64>,
    pub max_violation: f64,
    /// Central-difference derivative of the scalar objective at t.
    pub derivative: Option<f64>,
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > tol {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// Tolerance of the golden-section search on t.
pub const ISOTONIC_TOL: f64 = 1e-10;

/// Minimizer for two points with v_hi − v_lo = c·e_a, c ≥ 0.
///
/// The constraints reduce to [p_lo]_a ≤ [p_hi]_a. If the labels already
/// satisfy it, p_i = y_i. Otherwise y_lo = e_a, the constraint is tight at
/// some t, p_lo puts t on a and spreads the rest evenly, p_hi puts t on a
/// and the rest on its label, and t is found by golden-section search.
pub fn solve_isotonic(inst: &IsotonicInstance) -> Result<IsotonicSolution> {
    let (axis, lo, hi) = inst.validate()?;
    let k = inst.k();
    let vertex = |y: usize| -> Vec<f64> { (0..k).map(|i| if i == y { 1.0 } else { 0.0 }).collect() };
    let mut ps = vec![vertex(inst.ys[0]), vertex(inst.ys[1])];
    let mut t_opt = None;
    let mut derivative = None;
    if let Some(a) = axis {
        if inst.ys[lo] == a && inst.ys[hi] != a {
            let (ylo, yhi) = (inst.ys[lo], inst.ys[hi]);
            let build = |t: f64| -> (Vec<f64>, Vec<f64>) {
                let mut plo = vec![(1.0 - t) / (k - 1) as f64; k];
                plo[a] = t;
                let mut phi = vec![0.0; k];
                phi[a] = t;
                phi[yhi] = 1.0 - t;
                (plo, phi)
            };
            let g = |t: f64| {
                let (plo, phi) = build(t);
                inst.loss.value(&plo, ylo) + inst.loss.value(&phi, yhi)
            };
            let (lo_t, hi_t) = match inst.loss {
                IsoLoss::Squared => (0.0, 1.0),
                IsoLoss::Log => (1e-12, 1.0 - 1e-12),
            };
            let t = golden_section(g, lo_t, hi_t, ISOTONIC_TOL);
            let h = 1e-6;
            derivative = Some((g(t + h) - g(t - h)) / (2.0 * h));
            let (plo, phi) = build(t);
            ps[lo] = plo;
            ps[hi] = phi;
            t_opt = Some(t);
        }
    }
    // f_lo = 0 and f_hi = ⟨p_lo, v_hi − v_lo⟩ satisfy both constraints
    let mut fs = vec![0.0; 2];
    fs[hi] = ps[lo].iter().zip(inst.vs[hi].iter().zip(&inst.vs[lo])).map(|(p, (x, y))| p * (x - y)).sum();
    let objective = inst.objective(&ps);
    let max_violation = inst.max_violation(&ps, &fs);
    Ok(IsotonicSolution { ps, fs, objective, t: t_opt, max_violation, derivative })
}

/// Squared-loss minimizer of the reference instance, as columns p₁, p₂.
pub fn reference_squared_minimizer() -> [[f64; 3]; 2] {
    [[3.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0], [3.0 / 7.0, 4.0 / 7.0, 0.0]]
}

#[derive(Debug, Clone, Serialize)]
pub struct IsotonicVerification {
    /// max |p − reference| for the squared-loss solve
    pub squared_error: f64,
    pub squared_t: f64,
    pub log_t: f64,
    /// |t_log − t_sq|
    pub separation: f64,
    /// log objective of the squared minimizer minus that of p₁ = (½,¼,¼), p₂ = (½,½,0)
    pub candidate_improvement: f64,
    pub max_violation: f64,
    pub passed: bool,
}

/// Whether the two losses have minimizers more than `tol` apart on the
/// reference instance.
pub fn minimizers_differ(a: IsoLoss, b: IsoLoss, tol: f64) -> Result<bool> {
    let ta = solve_isotonic(&IsotonicInstance::reference(a))?.t;
    let tb = solve_isotonic(&IsotonicInstance::reference(b))?.t;
    match (ta, tb) {
        (Some(x), Some(y)) => Ok((x - y).abs() > tol),
        _ => Err(Error::Internal("reference instance should have a tight constraint".into())),
    }
}

/// Checks the squared minimizer against the closed form within `sq_tol`,
/// and that the log minimizer's t sits more than `sep_tol` away from it.
pub fn verify_isotonic_counterexample(sq_tol: f64, sep_tol: f64) -> Result<IsotonicVerification> {
    let sq = solve_isotonic(&IsotonicInstance::reference(IsoLoss::Squared))?;
    let lg = solve_isotonic(&IsotonicInstance::reference(IsoLoss::Log))?;
    let reference = reference_squared_minimizer();
    let squared_error =
        sq.ps.iter().zip(&reference).flat_map(|(p, r)| p.iter().zip(r).map(|(a, b)| (a - b).abs())).fold(0.0, f64::max);
    let (squared_t, log_t) = (sq.t.unwrap_or(f64::NAN), lg.t.unwrap_or(f64::NAN));
    let log_inst = IsotonicInstance::reference(IsoLoss::Log);
    let candidate = vec![vec![0.5, 0.25, 0.25], vec![0.5, 0.5, 0.0]];
    let candidate_fs = vec![0.0, 0.5];
    let candidate_improvement = log_inst.objective(&sq.ps) - log_inst.objective(&candidate);
    let max_violation = sq.max_violation.max(lg.max_violation).max(log_inst.max_violation(&candidate, &candidate_fs));
    let separation = (log_t - squared_t).abs();
    let passed =
        squared_error <= sq_tol && separation > sep_tol && candidate_improvement > 0.0 && max_violation <= 1e-9;
    Ok(IsotonicVerification {
        squared_error,
        squared_t,
        log_t,
        separation,
        candidate_improvement,
        max_violation,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_second_action() {
        let r = demo_mloo_impossibility(&[[0.0, 1.0]; 10]).unwrap();
        assert_eq!(r.averages, [0.0, 1.0]);
        assert_eq!(r.solo, [0.0, 0.0]);
    }

    #[test]
    fn uniform_action_splits_evenly() {
        let r = demo_mloo_impossibility(&[[0.5, 0.5]; 7]).unwrap();
        assert_eq!(r.averages, [0.5, 0.5]);
        assert_eq!(r.max, 0.5);
        assert!(r.holds(1e-12));
    }

    #[test]
    fn squared_optimum_is_three_sevenths() {
        let s = solve_isotonic(&IsotonicInstance::reference(IsoLoss::Squared)).unwrap();
        assert!((s.t.unwrap() - 3.0 / 7.0).abs() < 1e-8);
        assert!(s.max_violation <= 1e-9);
        assert!(s.derivative.unwrap().abs() < 1e-6);
    }

    #[test]
    fn log_optimum_is_one_half() {
        let s = solve_isotonic(&IsotonicInstance::reference(IsoLoss::Log)).unwrap();
        assert!((s.t.unwrap() - 0.5).abs() < 1e-8);
        // 12/49 < 1/4
        assert!(-(12f64 / 49.0).ln() > -(0.25f64).ln());
    }

    #[test]
    fn identical_points_need_no_constraint() {
        let inst = IsotonicInstance { vs: vec![vec![0.3, 0.0, 0.0]; 2], ys: vec![0, 0], loss: IsoLoss::Squared };
        let s = solve_isotonic(&inst).unwrap();
        assert_eq!(s.ps, vec![vec![1.0, 0.0, 0.0]; 2]);
        assert_eq!(s.objective, 0.0);
        assert!(s.max_violation <= 0.0);
    }

    #[test]
    fn default_verification_passes() {
        let v = verify_isotonic_counterexample(1e-6, 1e-3).unwrap();
        assert!(v.passed, "{v:?}");
        assert!(v.candidate_improvement > 0.0);
    }

    #[test]
    fn self_comparison_is_false() {
        assert!(!minimizers_differ(IsoLoss::Squared, IsoLoss::Squared, 1e-3).unwrap());
        assert!(minimizers_differ(IsoLoss::Squared, IsoLoss::Log, 1e-3).unwrap());
    }

    #[test]
    fn uncertified_instances_rejected() {
        let inst = IsotonicInstance {
            vs: vec![vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]],
            ys: vec![0, 1],
            loss: IsoLoss::Squared,
        };
        assert!(solve_isotonic(&inst).is_err());
    }
}
