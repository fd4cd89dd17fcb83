//! Zero-sum matrix games min_{a∈Δ^n} max_{b∈Δ^k} bᵀMa.
//!
//! The row player runs exponential weights, the column player best
//! responds, and the averaged column responses form `a`. Every round gives
//! a dual lower bound on the value, so the run stops once the primal value
//! of the running average is certified within `eps`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::simplex::SimplexNet;

/// Dense k × n payoff matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl GameMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// max_i (M a)_i
    pub fn primal(&self, a: &[f64]) -> f64 {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.at(i, j) * a[j]).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// min_j (bᵀ M)_j
    pub fn dual(&self, b: &[f64]) -> f64 {
        (0..self.cols).map(|j| (0..self.rows).map(|i| b[i] * self.at(i, j)).sum::<f64>()).fold(f64::INFINITY, f64::min)
    }
}

/// Assemble M = 1_k gᵀ − F from f ∈ R^{k|N|} (layout [s][j]) after dividing
/// by R, with g_s = ⟨f_s, s⟩. Entry (j, s) equals ⟨f_s, s − e_j⟩.
pub fn build_game_matrix(f: &[f64], net: &SimplexNet, radius: f64) -> Result<GameMatrix> {
    let k = net.k();
    let n = net.len();
    if f.len() != k * n {
        return Err(Error::DimensionMismatch { expected: k * n, got: f.len() });
    }
    let norm = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(norm <= radius * (1.0 + 1e-12)) {
        return Err(Error::AdjointOutOfBounds { norm, bound: radius });
    }
    let mut data = vec![0.0; k * n];
    for s in 0..n {
        let fs = &f[s * k..(s + 1) * k];
        let g = fs.iter().zip(net.point(s)).map(|(a, b)| a * b).sum::<f64>() / radius;
        for j in 0..k {
            data[j * n + s] = g - fs[j] / radius;
        }
    }
    GameMatrix::new(k, n, data)
}

#[derive(Debug, Clone, Serialize)]
pub struct GameSolution {
    /// Column mixture.
    pub a: Vec<f64>,
    /// Certified upper bound max_i (M a)_i on the value achieved by `a`.
    pub value: f64,
    /// Best dual lower bound seen.
    pub lower: f64,
    pub iterations: usize,
}

impl GameSolution {
    pub fn gap(&self) -> f64 {
        self.value - self.lower
    }
}

/// Round cap that guarantees a certificate gap ≤ eps for payoffs spanning
/// `width`: avg Hedge regret width·√(ln k / (2R)) ≤ eps.
pub fn round_cap(rows: usize, width: f64, eps: f64) -> usize {
    let lk = (rows as f64).ln();
    (width * width * lk / (2.0 * eps * eps)).ceil() as usize + 1
}

pub fn solve_matrix_game(m: &GameMatrix, eps: f64) -> Result<GameSolution> {
    solve_with_cap(m, eps, None)
}

/// As `solve_matrix_game`, with an explicit iteration cap.
pub fn solve_with_cap(m: &GameMatrix, eps: f64, cap: Option<usize>) -> Result<GameSolution> {
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("solver eps must be positive, got {eps}")));
    }
    let (k, n) = (m.rows, m.cols);
    let lo = m.data.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = m.data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo).max(1e-300);
    let theory_cap = round_cap(k, width, eps);
    let cap = cap.unwrap_or(theory_cap).max(1);
    let eta = (8.0 * (k as f64).ln() / (theory_cap as f64 * width * width)).sqrt();

    let mut logw = vec![0.0; k];
    let mut b = vec![1.0 / k as f64; k];
    let mut counts = vec![0usize; n];
    let mut col_sum = vec![0.0; k];
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    let mut iters = 0;
    while iters < cap {
        iters += 1;
        // best response of the column (minimizing) player
        let mut best = (f64::INFINITY, 0usize);
        for j in 0..n {
            let v: f64 = (0..k).map(|i| b[i] * m.data[i * n + j]).sum();
            if v < best.0 {
                best = (v, j);
            }
        }
        lower = lower.max(best.0);
        counts[best.1] += 1;
        let mut top = f64::NEG_INFINITY;
        for i in 0..k {
            let g = m.data[i * n + best.1];
            col_sum[i] += g;
            top = top.max(col_sum[i]);
            logw[i] += eta * g;
        }
        upper = top / iters as f64;
        if upper - lower <= eps {
            break;
        }
        let shift = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for i in 0..k {
            b[i] = (logw[i] - shift).exp();
            z += b[i];
        }
        for bi in &mut b {
            *bi /= z;
        }
    }
    if upper - lower > eps {
        return Err(Error::SolverDidNotConverge { iterations: iters, gap: upper - lower, eps });
    }
    let a = counts.iter().map(|&c| c as f64 / iters as f64).collect();
    Ok(GameSolution { a, value: upper, lower, iterations: iters })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matching_pennies_like() {
        let m = GameMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let s = solve_matrix_game(&m, 0.01).unwrap();
        assert!((s.value - 0.5).abs() <= 0.01);
        assert!(s.gap() <= 0.01);
        assert!((s.a[0] - 0.5).abs() < 0.05);
    }

    #[test]
    fn constant_game() {
        let m = GameMatrix::new(3, 4, vec![1.0; 12]).unwrap();
        let s = solve_matrix_game(&m, 1e-6).unwrap();
        assert_eq!(s.value, 1.0);
        assert_eq!(s.iterations, 1);
    }

    #[test]
    fn zero_f_gives_zero_matrix() {
        let net = SimplexNet::new(2, 1.0).unwrap();
        let m = build_game_matrix(&vec![0.0; 2 * net.len()], &net, 1.0).unwrap();
        assert!(m.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_f_block_gives_zero_matrix() {
        let net = SimplexNet::new(2, 1.0).unwrap();
        let f: Vec<f64> = vec![0.3; 2 * net.len()];
        let m = build_game_matrix(&f, &net, 1.0).unwrap();
        assert!(m.data.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn rejects_oversized_f() {
        let net = SimplexNet::new(2, 1.0).unwrap();
        let f = vec![1.5; 2 * net.len()];
        assert!(matches!(build_game_matrix(&f, &net, 1.0), Err(Error::AdjointOutOfBounds { .. })));
    }

    #[test]
    fn cap_error() {
        let m = GameMatrix::new(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(matches!(solve_with_cap(&m, 1e-4, Some(1)), Err(Error::SolverDidNotConverge { .. })));
    }
}
