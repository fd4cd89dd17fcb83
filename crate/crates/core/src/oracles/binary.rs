//! Case-analysis oracle for binary prediction on a 1-D grid.
//!
//! With f_p the coefficient of (p − b) contributed by each distinguisher,
//! the payoff of a mixture a is Σ_p a_p f_p (p − b). A sign change of f
//! between adjacent grid points gives a two-point mixture whose payoff is
//! at most one grid step for either label.

use crate::error::{Error, Result};
use crate::simplex::{sign, Mixture};

/// Inputs for the binary oracle: mixing weights (q, r), calibration
/// distinguisher u over thresholds, and the multiaccuracy value d.
#[derive(Debug, Clone)]
pub struct BinaryOracleInput {
    pub q: f64,
    pub r: f64,
    pub u: Vec<f64>,
    pub d: f64,
}

impl BinaryOracleInput {
    fn validate(&self, grid: &[f64]) -> Result<()> {
        if self.u.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: self.u.len() });
        }
        if self.q < -1e-12 || self.r < -1e-12 || (self.q + self.r - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("(q, r) = ({}, {}) not in Δ²", self.q, self.r)));
        }
        if self.d.abs() > 1.0 + 1e-12 {
            return Err(Error::Invalid(format!("|d| = {} > 1", self.d.abs())));
        }
        crate::simplex::normalize(&self.u)?;
        Ok(())
    }

    /// h(p_j) = q Σ_s u_s sign(p_j − s) + r d for every grid point.
    pub fn h(&self, grid: &[f64]) -> Vec<f64> {
        // thresholds share the grid, so Σ_s u_s sign(p_j − s) = 2·U(j) − 1
        // with U the prefix mass up to and including j
        let mut out = Vec::with_capacity(grid.len());
        let mut prefix = 0.0;
        for (j, _) in grid.iter().enumerate() {
            prefix += self.u[j];
            out.push(self.q * (2.0 * prefix - 1.0) + self.r * self.d);
        }
        out
    }

    /// Direct O(|N|²) evaluation of h, for cross-checking.
    pub fn h_direct(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter()
            .map(|&p| {
                self.q * grid.iter().zip(&self.u).map(|(&s, &us)| us * sign(p - s)).sum::<f64>() + self.r * self.d
            })
            .collect()
    }
}

/// Oracle response for coefficients h on an ascending grid.
pub fn binary_mloo_from_h(h: &[f64]) -> Result<Mixture> {
    let n = h.len();
    if n == 0 {
        return Err(Error::Invalid("empty grid".into()));
    }
    if h[0] >= 0.0 {
        return Ok(vec![(0, 1.0)]);
    }
    if h[n - 1] <= 0.0 {
        return Ok(vec![(n - 1, 1.0)]);
    }
    // h(0) < 0 < h(1): first upward crossing
    for j in 0..n - 1 {
        let (lo, hi) = (h[j], h[j + 1]);
        if lo <= 0.0 && hi >= 0.0 {
            if lo == 0.0 {
                return Ok(vec![(j, 1.0)]);
            }
            let z = lo.abs() + hi.abs();
            return Ok(vec![(j, hi.abs() / z), (j + 1, lo.abs() / z)]);
        }
    }
    Err(Error::Internal("no sign change of h despite h(0) < 0 < h(1)".into()))
}

pub fn binary_cmloo(input: &BinaryOracleInput, grid: &[f64]) -> Result<Mixture> {
    input.validate(grid)?;
    binary_mloo_from_h(&input.h(grid))
}

/// Σ_p a_p h(p)(p − b).
pub fn binary_payoff(h: &[f64], grid: &[f64], a: &Mixture, b: f64) -> f64 {
    a.iter().map(|&(j, w)| w * h[j] * (grid[j] - b)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRID: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

    fn input(q: f64, u: Vec<f64>, d: f64) -> BinaryOracleInput {
        BinaryOracleInput { q, r: 1.0 - q, u, d }
    }

    #[test]
    fn endpoint_cases() {
        let u = vec![0.2; 5];
        assert_eq!(binary_cmloo(&input(0.0, u.clone(), 1.0), &GRID).unwrap(), vec![(0, 1.0)]);
        assert_eq!(binary_cmloo(&input(0.0, u, -1.0), &GRID).unwrap(), vec![(4, 1.0)]);
    }

    #[test]
    fn two_point_case() {
        let inp = input(1.0, vec![0.0, 0.0, 1.0, 0.0, 0.0], 0.0);
        let h = inp.h(&GRID);
        assert_eq!(h, inp.h_direct(&GRID));
        let a = binary_cmloo(&inp, &GRID).unwrap();
        assert_eq!(a, vec![(1, 0.5), (2, 0.5)]);
        assert!((binary_payoff(&h, &GRID, &a, 0.0) - 0.125).abs() < 1e-15);
        assert!((binary_payoff(&h, &GRID, &a, 1.0) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_weights() {
        let mut inp = input(0.5, vec![0.2; 5], 0.0);
        inp.r = 0.7;
        assert!(binary_cmloo(&inp, &GRID).is_err());
    }
}
