//! Game-solving oracle for payoffs of the form v^(i)(a, b) = M^(i) v(a, b)
//! with v(a, b) = {a_s (s − b)}_{s∈N}.

use serde::Serialize;

use super::game::{build_game_matrix, solve_matrix_game};
use crate::error::{Error, Result};
use crate::simplex::{Mixture, SimplexNet};

/// Adds weight·(M^(i))* u^(i) into an [s][j]-laid-out buffer of length k|N|.
pub trait Adjoint {
    fn add_adjoint(&self, weight: f64, out: &mut [f64]);
}

impl<F: Fn(f64, &mut [f64])> Adjoint for F {
    fn add_adjoint(&self, weight: f64, out: &mut [f64]) {
        self(weight, out)
    }
}

/// Calibration set: M = identity, so the adjoint is u itself.
pub struct IdentityAdjoint<'a>(pub &'a [f64]);

impl Adjoint for IdentityAdjoint<'_> {
    fn add_adjoint(&self, weight: f64, out: &mut [f64]) {
        for (o, u) in out.iter_mut().zip(self.0) {
            *o += weight * u;
        }
    }
}

/// Multiaccuracy set: M = 1ᵀ ⊗ I_k sums the buckets, so the adjoint copies
/// the k-vector u into every bucket.
pub struct BroadcastAdjoint<'a>(pub &'a [f64]);

impl Adjoint for BroadcastAdjoint<'_> {
    fn add_adjoint(&self, weight: f64, out: &mut [f64]) {
        let k = self.0.len();
        for block in out.chunks_mut(k) {
            for (o, u) in block.iter_mut().zip(self.0) {
                *o += weight * u;
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MlooOutput {
    pub mixture: Mixture,
    /// Certified bound on max_j Σ_s a_s ⟨f_s, s − e_j⟩ in units of R.
    pub value: f64,
    pub gap: f64,
    pub iterations: usize,
}

/// f = Σ_i w_i (M^(i))* u^(i).
pub fn assemble(weights: &[f64], adjoints: &[&dyn Adjoint], len: usize) -> Result<Vec<f64>> {
    if weights.len() != adjoints.len() {
        return Err(Error::DimensionMismatch { expected: adjoints.len(), got: weights.len() });
    }
    let mut f = vec![0.0; len];
    for (w, adj) in weights.iter().zip(adjoints) {
        if *w != 0.0 {
            adj.add_adjoint(*w, &mut f);
        }
    }
    Ok(f)
}

/// Returns a mixture over the net whose payoff Σ_i w_i ⟨u^(i), v^(i)(a, b)⟩
/// is at most 2·eps·R for every label when `solver_eps` = net.eps.
pub fn multiclass_mloo(
    weights: &[f64],
    adjoints: &[&dyn Adjoint],
    net: &SimplexNet,
    radius: f64,
    solver_eps: f64,
) -> Result<MlooOutput> {
    let f = assemble(weights, adjoints, net.k() * net.len())?;
    mloo_from_f(&f, net, radius, solver_eps)
}

pub fn mloo_from_f(f: &[f64], net: &SimplexNet, radius: f64, solver_eps: f64) -> Result<MlooOutput> {
    if f.iter().all(|&v| v == 0.0) {
        let n = net.len();
        return Ok(MlooOutput {
            mixture: (0..n).map(|s| (s, 1.0 / n as f64)).collect(),
            value: 0.0,
            gap: 0.0,
            iterations: 0,
        });
    }
    let m = build_game_matrix(f, net, radius)?;
    let sol = solve_matrix_game(&m, solver_eps)?;
    let mixture = sol.a.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(s, &w)| (s, w)).collect();
    Ok(MlooOutput { mixture, value: sol.value, gap: sol.gap(), iterations: sol.iterations })
}

/// Σ_s a_s ⟨f_s, s − e_j⟩.
pub fn mloo_payoff(f: &[f64], net: &SimplexNet, a: &Mixture, label: usize) -> f64 {
    let k = net.k();
    a.iter()
        .map(|&(s, w)| {
            let fs = &f[s * k..(s + 1) * k];
            let inner: f64 = fs.iter().zip(net.point(s)).map(|(x, p)| x * p).sum::<f64>() - fs[label];
            w * inner
        })
        .sum()
}
