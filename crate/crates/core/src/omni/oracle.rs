use std::sync::Arc;

use crate::approach::{BoxedSet, MixtureOracle};
use crate::error::Result;
use crate::oracles::binary_mloo_from_h;
use crate::oracles::multiclass::mloo_from_f;
use crate::simplex::{Mixture, SimplexNet};

/// Sums w_i times each set's adjoint at the given learner points.
pub(crate) fn mix_adjoints(
    weights: &[f64],
    points: &[&[f64]],
    x: &Vec<f64>,
    sets: &[BoxedSet<Vec<f64>, usize>],
    len: usize,
) -> Result<Vec<f64>> {
    let mut f = vec![0.0; len];
    for ((w, p), set) in weights.iter().zip(points).zip(sets) {
        if *w != 0.0 {
            set.add_adjoint_at(p, x, *w, &mut f)?;
        }
    }
    Ok(f)
}

/// Case-analysis oracle on the binary grid.
#[derive(Debug, Clone)]
pub struct BinaryOracle {
    pub grid: Arc<Vec<f64>>,
}

impl BinaryOracle {
    pub fn respond_at(
        &self,
        weights: &[f64],
        points: &[&[f64]],
        x: &Vec<f64>,
        sets: &[BoxedSet<Vec<f64>, usize>],
    ) -> Result<Mixture> {
        let h = mix_adjoints(weights, points, x, sets, self.grid.len())?;
        binary_mloo_from_h(&h)
    }
}

impl MixtureOracle<Vec<f64>, usize> for BinaryOracle {
    fn respond(&mut self, weights: &[f64], x: &Vec<f64>, sets: &[BoxedSet<Vec<f64>, usize>]) -> Result<Mixture> {
        let points: Vec<&[f64]> = sets.iter().map(|s| s.point()).collect();
        self.respond_at(weights, &points, x, sets)
    }
}

/// Game-solving oracle on the simplex net, with R = 1.
#[derive(Debug, Clone)]
pub struct MulticlassOracle {
    pub net: Arc<SimplexNet>,
    pub solver_eps: f64,
    /// Largest certified value max_j Σ_s a_s ⟨f_s, s − e_j⟩ seen so far.
    pub max_value: f64,
    pub solver_iterations: usize,
}

impl MulticlassOracle {
    pub fn new(net: Arc<SimplexNet>, solver_eps: f64) -> Self {
        Self { net, solver_eps, max_value: f64::NEG_INFINITY, solver_iterations: 0 }
    }

    /// Per-round guarantee: net resolution plus solver accuracy.
    pub fn guarantee(&self) -> f64 {
        self.net.eps() + self.solver_eps
    }

    pub fn respond_at(
        &mut self,
        weights: &[f64],
        points: &[&[f64]],
        x: &Vec<f64>,
        sets: &[BoxedSet<Vec<f64>, usize>],
    ) -> Result<Mixture> {
        let f = mix_adjoints(weights, points, x, sets, self.net.k() * self.net.len())?;
        let out = mloo_from_f(&f, &self.net, 1.0, self.solver_eps)?;
        self.max_value = self.max_value.max(out.value);
        self.solver_iterations += out.iterations;
        Ok(out.mixture)
    }
}

impl MixtureOracle<Vec<f64>, usize> for MulticlassOracle {
    fn respond(&mut self, weights: &[f64], x: &Vec<f64>, sets: &[BoxedSet<Vec<f64>, usize>]) -> Result<Mixture> {
        let points: Vec<&[f64]> = sets.iter().map(|s| s.point()).collect();
        self.respond_at(weights, &points, x, sets)
    }
}
