//! Independent reference computations for the integration suites.

#![allow(dead_code)]

use omnipred::oracles::GameMatrix;

/// Solves a small dense system by Gaussian elimination with partial pivoting.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(size);
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    rec(0, n, size, &mut cur, &mut out);
    out
}

/// Exact value of min_a max_i (M a)_i = max_b min_j (bᵀ M)_j by enumerating
/// the row player's supports S and |S| equalizing columns: every vertex of
/// max { v : bᵀM ≥ v·1, b ∈ Δ } arises this way.
pub fn exact_game_value(m: &GameMatrix) -> f64 {
    let (k, n) = (m.rows, m.cols);
    let mut best = f64::NEG_INFINITY;
    for s in 1..=k.min(n) {
        for rows in subsets(k, s) {
            for cols in subsets(n, s) {
                // unknowns b_S and v: Σ_i b_i M_ij − v = 0 for j in cols, Σ b_i = 1
                let mut a = vec![vec![0.0; s + 1]; s + 1];
                let mut rhs = vec![0.0; s + 1];
                for (r, &j) in cols.iter().enumerate() {
                    for (c, &i) in rows.iter().enumerate() {
                        a[r][c] = m.at(i, j);
                    }
                    a[r][s] = -1.0;
                }
                for c in 0..s {
                    a[s][c] = 1.0;
                }
                rhs[s] = 1.0;
                let Some(x) = solve_linear(a, rhs) else { continue };
                if x[s] <= best || x[..s].iter().any(|&v| v < -1e-12) {
                    continue;
                }
                let mut b = vec![0.0; k];
                for (c, &i) in rows.iter().enumerate() {
                    b[i] = x[c].max(0.0);
                }
                // the true guaranteed value of b, robust to near-singular solves
                best = best.max(m.dual(&b));
            }
        }
    }
    best
}

/// max over rows of the column mixture's payoff, by direct evaluation.
pub fn primal_value(m: &GameMatrix, a: &[f64]) -> f64 {
    m.primal(a)
}
