//! Loss families.
//!
//! Multiclass GLM losses live here; scalar losses for the binary track are in
//! [`binary`], threshold proper losses and the proper-loss decomposition in
//! [`proper`].

pub mod binary;
pub mod proper;

use std::fmt::Debug;

use crate::error::{Error, Result};

/// ℓ(t, y) = scale·(ω(t) − t_y) on the box [-1,1]^k.
pub trait GlmLoss: Debug + Send + Sync {
    fn id(&self) -> &str;
    fn k(&self) -> usize;
    fn scale(&self) -> f64;
    /// Unscaled potential ω.
    fn omega(&self, t: &[f64]) -> f64;
    /// ∇ω(t) ∈ Δ^k (a subgradient where ω is not differentiable).
    fn grad_omega(&self, t: &[f64]) -> Vec<f64>;
    /// Minimizer of ω(t) − ⟨t, p⟩ over the box, in canonical form.
    fn ex_ante(&self, p: &[f64]) -> Vec<f64>;

    /// Whether ω is differentiable everywhere.
    fn smooth(&self) -> bool {
        true
    }

    /// Loss without a domain check.
    fn value(&self, t: &[f64], y: usize) -> f64 {
        self.scale() * (self.omega(t) - t[y])
    }

    /// E_{y∼p} ℓ(t, y).
    fn expected(&self, t: &[f64], p: &[f64]) -> f64 {
        self.scale() * (self.omega(t) - crate::simplex::dot(t, p))
    }

    /// d_ℓ(t) = −scale·t, the per-class loss vector up to a shift along 1_k.
    fn discrete_derivative(&self, t: &[f64]) -> Vec<f64> {
        t.iter().map(|v| -self.scale() * v).collect()
    }
}

fn check_box(t: &[f64]) -> Result<()> {
    for (i, &v) in t.iter().enumerate() {
        if !(v.abs() <= 1.0 + 1e-12) {
            return Err(Error::OutOfBox { index: i, value: v });
        }
    }
    Ok(())
}

/// ℓ(t, y) with the box and label checked.
pub fn glm_value(loss: &dyn GlmLoss, t: &[f64], y: usize) -> Result<f64> {
    if t.len() != loss.k() {
        return Err(Error::DimensionMismatch { expected: loss.k(), got: t.len() });
    }
    if y >= loss.k() {
        return Err(Error::Invalid(format!("label {y} out of range for k={}", loss.k())));
    }
    check_box(t)?;
    Ok(loss.value(t, y))
}

/// Per-class loss vector (ℓ(t, e_i))_i minus `shift`, for losses outside the
/// GLM family.
pub fn discrete_derivative_general(loss: impl Fn(usize) -> f64, k: usize, shift: f64) -> Vec<f64> {
    (0..k).map(|i| loss(i) - shift).collect()
}

/// Scaled cross-entropy: ω = log Σ e^{t_i}, scale 1/(log k + 2).
#[derive(Debug, Clone)]
pub struct CrossEntropy {
    k: usize,
}

impl CrossEntropy {
    pub fn new(k: usize) -> Self {
        Self { k }
    }
}

fn log_sum_exp(t: &[f64]) -> f64 {
    let m = t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + t.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

impl GlmLoss for CrossEntropy {
    fn id(&self) -> &str {
        "cross-entropy"
    }
    fn k(&self) -> usize {
        self.k
    }
    fn scale(&self) -> f64 {
        1.0 / ((self.k as f64).ln() + 2.0)
    }
    fn omega(&self, t: &[f64]) -> f64 {
        log_sum_exp(t)
    }
    fn grad_omega(&self, t: &[f64]) -> Vec<f64> {
        let z = log_sum_exp(t);
        t.iter().map(|v| (v - z).exp()).collect()
    }
    fn ex_ante(&self, p: &[f64]) -> Vec<f64> {
        cross_entropy_ex_ante(p)
    }
}

/// Box-constrained minimizer of log Σ e^{t_i} − ⟨t,p⟩.
///
/// The optimum is t_i = clamp(log p_i + a, −1, 1) with a = log Z(t). When no
/// clamping is needed the solution is only defined up to a shift; we center
/// it so that max t + min t = 0.
pub fn cross_entropy_ex_ante(p: &[f64]) -> Vec<f64> {
    let lp: Vec<f64> = p.iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect();
    let hi_lp = lp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo_lp = lp.iter().cloned().fold(f64::INFINITY, f64::min);
    if lo_lp.is_finite() && hi_lp - lo_lp <= 2.0 {
        let a = -(hi_lp + lo_lp) / 2.0;
        return lp.iter().map(|v| (v + a).clamp(-1.0, 1.0)).collect();
    }
    let clamped = |a: f64| -> Vec<f64> { lp.iter().map(|v| (v + a).clamp(-1.0, 1.0)).collect() };
    let h = |a: f64| log_sum_exp(&clamped(a)) - a;
    // h is nonincreasing; h(lo) ≥ 0 because every coordinate sits at −1 there
    let lo0 = -1.0 - hi_lp;
    let mut lo = lo0;
    let min_pos = lp.iter().cloned().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
    let mut hi = 1.0 - min_pos;
    while h(hi) > 0.0 {
        hi += 1.0 + (hi - lo0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    clamped(0.5 * (lo + hi))
}

/// Euclidean projection onto the simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).expect("finite input"));
    let mut css = 0.0;
    let mut tau = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        css += ui;
        let cand = (css - 1.0) / (i as f64 + 1.0);
        if ui - cand > 0.0 {
            tau = cand;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

/// Brier-type GLM: ω = ψ* for ψ(q) = ½‖q‖² on the simplex, scale ½.
#[derive(Debug, Clone)]
pub struct BrierGlm {
    k: usize,
}

impl BrierGlm {
    pub fn new(k: usize) -> Self {
        Self { k }
    }
}

impl GlmLoss for BrierGlm {
    fn id(&self) -> &str {
        "brier"
    }
    fn k(&self) -> usize {
        self.k
    }
    fn scale(&self) -> f64 {
        0.5
    }
    fn omega(&self, t: &[f64]) -> f64 {
        let q = project_simplex(t);
        crate::simplex::dot(t, &q) - 0.5 * crate::simplex::dot(&q, &q)
    }
    fn grad_omega(&self, t: &[f64]) -> Vec<f64> {
        project_simplex(t)
    }
    fn ex_ante(&self, p: &[f64]) -> Vec<f64> {
        p.to_vec()
    }
}

/// Max-linear: ω = max_i t_i, scale ½.
#[derive(Debug, Clone)]
pub struct MaxLinear {
    k: usize,
}

impl MaxLinear {
    pub fn new(k: usize) -> Self {
        Self { k }
    }
}

impl GlmLoss for MaxLinear {
    fn id(&self) -> &str {
        "max-linear"
    }
    fn k(&self) -> usize {
        self.k
    }
    fn scale(&self) -> f64 {
        0.5
    }
    fn omega(&self, t: &[f64]) -> f64 {
        t.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
    fn smooth(&self) -> bool {
        false
    }
    fn grad_omega(&self, t: &[f64]) -> Vec<f64> {
        let mut best = 0;
        for (i, &v) in t.iter().enumerate() {
            if v > t[best] {
                best = i;
            }
        }
        let mut g = vec![0.0; t.len()];
        g[best] = 1.0;
        g
    }
    /// Scan of box vertices, starting from 1_k; the objective is ≥ 0 with
    /// equality on constant vectors, so the scan always ends at 1_k.
    fn ex_ante(&self, p: &[f64]) -> Vec<f64> {
        let k = self.k;
        if k > 16 {
            return vec![1.0; k];
        }
        let mut best = (f64::INFINITY, vec![1.0; k]);
        for mask in (0u32..(1 << k)).rev() {
            let t: Vec<f64> = (0..k).map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
            let v = self.omega(&t) - crate::simplex::dot(&t, p);
            if v < best.0 {
                best = (v, t);
            }
        }
        best.1
    }
}

/// Names accepted by `loss_by_name`.
pub const MULTICLASS_BANK: [&str; 3] = ["cross-entropy", "brier", "max-linear"];

pub fn loss_by_name(name: &str, k: usize) -> Result<Box<dyn GlmLoss>> {
    Ok(match name {
        "cross-entropy" => Box::new(CrossEntropy::new(k)),
        "brier" => Box::new(BrierGlm::new(k)),
        "max-linear" => Box::new(MaxLinear::new(k)),
        other => return Err(Error::UnknownLoss(other.to_string())),
    })
}

pub fn multiclass_bank(k: usize) -> Vec<Box<dyn GlmLoss>> {
    MULTICLASS_BANK.iter().map(|n| loss_by_name(n, k).expect("bank names resolve")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_entropy_value_example() {
        let l = CrossEntropy::new(2);
        let v = glm_value(&l, &[0.0, 0.0], 0).unwrap();
        let ln2 = 2f64.ln();
        assert!((v - ln2 / (ln2 + 2.0)).abs() < 1e-15);
        assert!(glm_value(&l, &[1.5, 0.0], 0).is_err());
    }

    #[test]
    fn max_linear_examples() {
        let l = MaxLinear::new(2);
        assert_eq!(glm_value(&l, &[1.0, -1.0], 0).unwrap(), 0.0);
        let p = [0.8, 0.2];
        assert!((l.expected(&[1.0, -1.0], &p) - 0.5 * 0.4).abs() < 1e-12);
        assert!((l.expected(&[-1.0, 1.0], &p) - 0.5 * 1.6).abs() < 1e-12);
        assert!(l.expected(&l.ex_ante(&p), &p) <= l.expected(&[1.0, -1.0], &p));
    }

    #[test]
    fn brier_vertex_value() {
        let l = BrierGlm::new(3);
        let y = [0.0, 1.0, 0.0];
        assert!((l.omega(&y) - 0.5).abs() < 1e-15);
        assert!((glm_value(&l, &y, 1).unwrap() + 0.25).abs() < 1e-15);
    }

    #[test]
    fn ce_symmetric_canonical() {
        assert_eq!(cross_entropy_ex_ante(&[0.5, 0.5]), vec![0.0, 0.0]);
        let t = cross_entropy_ex_ante(&[1.0, 0.0, 0.0]);
        assert_eq!(t, vec![1.0, -1.0, -1.0]);
    }

    #[test]
    fn derivative_examples() {
        let l = MaxLinear::new(2);
        assert_eq!(l.discrete_derivative(&[1.0, -1.0]), vec![-0.5, 0.5]);
        assert_eq!(l.discrete_derivative(&[0.0, 0.0]), vec![-0.0, -0.0]);
        let d = discrete_derivative_general(|i| i as f64 + 3.0, 3, 3.0);
        assert_eq!(d, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn simplex_projection() {
        let q = project_simplex(&[0.2, 0.3, 0.5]);
        assert!((q[0] - 0.2).abs() < 1e-15 && (q[2] - 0.5).abs() < 1e-15);
        assert_eq!(project_simplex(&[3.0, 0.0]), vec![1.0, 0.0]);
    }
}
