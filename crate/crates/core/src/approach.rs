//! Simultaneous approachability driver.
//!
//! Each round the driver mixes the m distinguishers with exponential
//! weights, asks the oracle for an action mixture, optionally samples a pure
//! action from it, and after the outcome is revealed feeds every set's
//! learner and the weights. One driver covers the contextless, exact-mixture
//! variant and the contextual, sampled variant.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::MwuState;
use crate::rng::Rng;
use crate::simplex::{sample_mixture, Mixture};

/// One approachability set: a payoff map paired with the learner that picks
/// the current distinguisher u_t.
pub trait PayoffSet<C, Y>: Send {
    fn id(&self) -> String;
    /// Width bound L on |⟨u(x), v(a, y)⟩|.
    fn width(&self) -> f64;
    /// ⟨u_t(x), v(a, y)⟩.
    fn payoff(&self, x: &C, a: &Mixture, y: &Y) -> f64;
    /// Feed v(a, y) to the learner and accumulate the averaged payoff vector.
    fn observe(&mut self, x: &C, a: &Mixture, y: &Y) -> Result<()>;
    /// sup over the distinguisher class of ⟨u, (1/T) Σ v(a_t, y_t)⟩.
    fn sup_average(&self) -> f64;
    /// Learner regret bound after `horizon` rounds.
    fn regret_bound(&self, horizon: usize) -> f64;
    /// Learner state defining the current distinguisher.
    fn point(&self) -> &[f64];
    /// Adds weight·(M^(i))* u(x) into `out` for the distinguisher encoded by
    /// `point`. Sets whose payoff is not linear in v(a, y) do not support it.
    fn add_adjoint_at(&self, _point: &[f64], _x: &C, _weight: f64, _out: &mut [f64]) -> Result<()> {
        Err(Error::Invalid(format!("set `{}` has no adjoint", self.id())))
    }
    fn add_adjoint(&self, x: &C, weight: f64, out: &mut [f64]) -> Result<()> {
        self.add_adjoint_at(self.point(), x, weight, out)
    }
}

pub type BoxedSet<C, Y> = Box<dyn PayoffSet<C, Y>>;

/// Picks a mixture given the weights over sets and their current learners.
pub trait MixtureOracle<C, Y> {
    fn respond(&mut self, weights: &[f64], x: &C, sets: &[BoxedSet<C, Y>]) -> Result<Mixture>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Exact mixtures fed to learners; η = (1/L)√(2 ln m / T).
    Deterministic,
    /// A pure action is sampled from each mixture; η = (1/L)√(2 ln m)(5T)^{-1/2}.
    Sampled,
    /// Exact mixtures against one fresh sample per round, with the sampled
    /// step size.
    Statistical,
}

/// Per-round log entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundRecord<C, Y> {
    pub t: usize,
    pub weights: Vec<f64>,
    pub mixture: Mixture,
    pub action: Option<usize>,
    /// Realized gains ⟨u_t^(i)(x_t), v^(i)(played, y_t)⟩.
    pub gains: Vec<f64>,
    /// Gains under the full mixture a_t.
    pub mean_gains: Vec<f64>,
    pub context: C,
    pub outcome: Y,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ApproachState<C, Y> {
    pub t: usize,
    pub horizon: usize,
    pub mode: Mode,
    pub width: f64,
    pub mwu: MwuState,
    pub rounds: Vec<RoundRecord<C, Y>>,
}

impl<C, Y> ApproachState<C, Y> {
    /// (1/T) Σ_t g̃_{t,i}.
    pub fn realized_average(&self, set: usize) -> Result<f64> {
        if self.t == 0 {
            return Ok(0.0);
        }
        let m = self.mwu.weights.len();
        if set >= m {
            return Err(Error::Invalid(format!("unknown set id {set}")));
        }
        Ok(self.rounds.iter().map(|r| r.gains[set]).sum::<f64>() / self.t as f64)
    }

    /// L√(2T ln m), the weights' regret term.
    pub fn mwu_regret(&self) -> f64 {
        self.width * (2.0 * self.t as f64 * (self.mwu.weights.len() as f64).ln()).sqrt()
    }
}

impl<C: Serialize, Y: Serialize> ApproachState<C, Y> {
    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for r in &self.rounds {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Action chosen for the current round, before its outcome is known.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub mixture: Mixture,
    pub action: Option<usize>,
}

pub struct Approach<C, Y, O> {
    pub sets: Vec<BoxedSet<C, Y>>,
    pub oracle: O,
    pub state: ApproachState<C, Y>,
    rng: Rng,
    pending: Option<(C, Proposal, Vec<f64>)>,
}

impl<C: Clone, Y: Clone, O: MixtureOracle<C, Y>> Approach<C, Y, O> {
    pub fn new(sets: Vec<BoxedSet<C, Y>>, oracle: O, horizon: usize, mode: Mode, rng: Rng) -> Result<Self> {
        Self::with_eta(sets, oracle, horizon, mode, None, rng)
    }

    pub fn with_eta(
        sets: Vec<BoxedSet<C, Y>>,
        oracle: O,
        horizon: usize,
        mode: Mode,
        eta: Option<f64>,
        rng: Rng,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Invalid("horizon must be at least 1".into()));
        }
        if sets.is_empty() {
            return Err(Error::Invalid("need at least one payoff set".into()));
        }
        let m = sets.len();
        let width = sets.iter().map(|s| s.width()).fold(0.0, f64::max);
        let eta = eta.unwrap_or(match mode {
            Mode::Deterministic => MwuState::horizon_eta(m, width, horizon),
            Mode::Sampled | Mode::Statistical => MwuState::sampled_eta(m, width, horizon),
        });
        let mwu = MwuState::new(m, eta, width)?;
        let state = ApproachState { t: 0, horizon, mode, width, mwu, rounds: Vec::with_capacity(horizon) };
        Ok(Self { sets, oracle, state, rng, pending: None })
    }

    /// Choose this round's action from the history and the context alone.
    pub fn propose(&mut self, x: C) -> Result<Proposal> {
        let round = self.state.t;
        if self.pending.is_some() {
            return Err(Error::Invalid("previous round still awaits its outcome".into()));
        }
        let weights = self.state.mwu.weights.clone();
        let mixture = self.oracle.respond(&weights, &x, &self.sets).map_err(|e| e.at_round(round))?;
        let action = match self.state.mode {
            Mode::Sampled => Some(sample_mixture(&mixture, &mut self.rng).map_err(|e| e.at_round(round))?),
            _ => None,
        };
        let proposal = Proposal { mixture, action };
        self.pending = Some((x, proposal.clone(), weights));
        Ok(proposal)
    }

    /// Reveal the outcome and update learners and weights.
    pub fn reveal(&mut self, y: Y) -> Result<()> {
        let round = self.state.t;
        let (x, proposal, weights) =
            self.pending.take().ok_or_else(|| Error::Invalid("reveal without propose".into()))?;
        let played: Mixture = match proposal.action {
            Some(p) => vec![(p, 1.0)],
            None => proposal.mixture.clone(),
        };
        let mut gains = Vec::with_capacity(self.sets.len());
        let mut mean_gains = Vec::with_capacity(self.sets.len());
        for set in &self.sets {
            gains.push(set.payoff(&x, &played, &y));
            mean_gains.push(set.payoff(&x, &proposal.mixture, &y));
        }
        for set in &mut self.sets {
            set.observe(&x, &played, &y).map_err(|e| e.at_round(round))?;
        }
        self.state.mwu = self.state.mwu.update(&gains).map_err(|e| e.at_round(round))?;
        self.state.rounds.push(RoundRecord {
            t: round,
            weights,
            mixture: proposal.mixture,
            action: proposal.action,
            gains,
            mean_gains,
            context: x,
            outcome: y,
        });
        self.state.t += 1;
        Ok(())
    }

    /// sup over set `id`'s class of the averaged payoff.
    pub fn average_payoff(&self, id: usize) -> Result<f64> {
        self.sets.get(id).map(|s| s.sup_average()).ok_or_else(|| Error::Invalid(format!("unknown set id {id}")))
    }

    /// ε + (reg^(i)(T) + L√(2T ln m))/T for each set, given the oracle's
    /// per-round guarantee ε.
    pub fn theoretical_bounds(&self, oracle_eps: f64) -> Vec<f64> {
        let t = self.state.t.max(1);
        self.sets.iter().map(|s| oracle_eps + (s.regret_bound(t) + self.state.mwu_regret()) / t as f64).collect()
    }
}

/// Run the protocol over `horizon` rounds of `stream`.
pub fn run_approach<C: Clone, Y: Clone, O: MixtureOracle<C, Y>>(
    sets: Vec<BoxedSet<C, Y>>,
    oracle: O,
    stream: impl IntoIterator<Item = (C, Y)>,
    horizon: usize,
    mode: Mode,
    rng: Rng,
) -> Result<Approach<C, Y, O>> {
    let mut driver = Approach::new(sets, oracle, horizon, mode, rng)?;
    let mut it = stream.into_iter();
    for t in 0..horizon {
        let (x, y) = it.next().ok_or(Error::SampleExhausted(t))?;
        driver.propose(x)?;
        driver.reveal(y)?;
    }
    Ok(driver)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Pure actions {0, 1}; payoff of set i is the mass on action i.
    struct Coord(usize, f64, usize);

    impl PayoffSet<(), ()> for Coord {
        fn id(&self) -> String {
            format!("coord-{}", self.0)
        }
        fn width(&self) -> f64 {
            1.0
        }
        fn payoff(&self, _: &(), a: &Mixture, _: &()) -> f64 {
            a.iter().filter(|(j, _)| *j == self.0).map(|(_, w)| w).sum()
        }
        fn observe(&mut self, x: &(), a: &Mixture, y: &()) -> Result<()> {
            self.1 += self.payoff(x, a, y);
            self.2 += 1;
            Ok(())
        }
        fn sup_average(&self) -> f64 {
            self.1 / self.2 as f64
        }
        fn regret_bound(&self, _: usize) -> f64 {
            0.0
        }
        fn point(&self) -> &[f64] {
            &[]
        }
    }

    struct Avoid;
    impl MixtureOracle<(), ()> for Avoid {
        fn respond(&mut self, w: &[f64], _: &(), _: &[BoxedSet<(), ()>]) -> Result<Mixture> {
            // put all mass on the action whose set has the lower weight
            Ok(if w.len() == 1 || w[0] <= w[1] { vec![(1, 1.0)] } else { vec![(0, 1.0)] })
        }
    }

    #[test]
    fn zero_oracle_gives_zero_payoffs() {
        let sets: Vec<BoxedSet<(), ()>> = vec![Box::new(Coord(0, 0.0, 0))];
        let d = run_approach(sets, Avoid, std::iter::repeat(((), ())), 50, Mode::Deterministic, Rng::new(0)).unwrap();
        assert_eq!(d.average_payoff(0).unwrap(), 0.0);
        assert_eq!(d.state.rounds.len(), 50);
    }

    #[test]
    fn two_coordinates_cannot_both_vanish() {
        let sets: Vec<BoxedSet<(), ()>> = vec![Box::new(Coord(0, 0.0, 0)), Box::new(Coord(1, 0.0, 0))];
        let d = run_approach(sets, Avoid, std::iter::repeat(((), ())), 101, Mode::Sampled, Rng::new(4)).unwrap();
        let (a, b) = (d.average_payoff(0).unwrap(), d.average_payoff(1).unwrap());
        assert!((a + b - 1.0).abs() < 1e-12);
        assert!(a.max(b) >= 0.5);
        assert!(d.average_payoff(2).is_err());
    }

    #[test]
    fn weights_follow_mwu_update() {
        let sets: Vec<BoxedSet<(), ()>> = vec![Box::new(Coord(0, 0.0, 0)), Box::new(Coord(1, 0.0, 0))];
        let d = run_approach(sets, Avoid, std::iter::repeat(((), ())), 20, Mode::Deterministic, Rng::new(1)).unwrap();
        let mut w = MwuState::new(2, d.state.mwu.eta, 1.0).unwrap();
        for r in &d.state.rounds {
            assert_eq!(r.weights, w.weights);
            w = w.update(&r.gains).unwrap();
        }
        assert_eq!(w.weights, d.state.mwu.weights);
    }

    #[test]
    fn reveal_requires_propose() {
        let sets: Vec<BoxedSet<(), ()>> = vec![Box::new(Coord(0, 0.0, 0))];
        let mut d = Approach::new(sets, Avoid, 3, Mode::Sampled, Rng::new(0)).unwrap();
        assert!(d.reveal(()).is_err());
        d.propose(()).unwrap();
        assert!(d.propose(()).is_err());
    }
}
