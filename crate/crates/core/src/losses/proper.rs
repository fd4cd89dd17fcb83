//! Threshold proper losses and the decomposition of piecewise-linear proper
//! losses into them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::sign;

/// ℓ_s(p, y) = −|p − s| + (p − y)·sign(p − s), with sign(0) = 1.
pub fn threshold_value(s: f64, p: f64, y: u8) -> f64 {
    -(p - s).abs() + (p - y as f64) * sign(p - s)
}

/// ℓ_s(p, 1) − ℓ_s(p, 0) = −sign(p − s).
pub fn threshold_derivative(s: f64, p: f64) -> f64 {
    -sign(p - s)
}

/// Convex piecewise-linear ψ on [0, 1].
///
/// `slopes[0]` applies on [0, breakpoints[0]), `slopes[i]` on
/// [breakpoints[i-1], breakpoints[i]), and so on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    pub value_at_zero: f64,
    pub breakpoints: Vec<f64>,
    pub slopes: Vec<f64>,
}

impl PiecewiseLinear {
    /// Linear interpolation of `f` at the given sorted nodes, which must start
    /// at 0 and end at 1.
    pub fn interpolate(nodes: &[f64], f: impl Fn(f64) -> f64) -> Self {
        let slopes = nodes.windows(2).map(|w| (f(w[1]) - f(w[0])) / (w[1] - w[0])).collect();
        Self { value_at_zero: f(nodes[0]), breakpoints: nodes[1..nodes.len() - 1].to_vec(), slopes }
    }

    fn segment(&self, p: f64) -> usize {
        self.breakpoints.iter().take_while(|&&b| p >= b).count()
    }

    /// Right derivative at p.
    pub fn slope(&self, p: f64) -> f64 {
        self.slopes[self.segment(p)]
    }

    pub fn value(&self, p: f64) -> f64 {
        let mut v = self.value_at_zero;
        let mut left = 0.0;
        for (i, &b) in self.breakpoints.iter().enumerate() {
            if p < b {
                return v + self.slopes[i] * (p - left);
            }
            v += self.slopes[i] * (b - left);
            left = b;
        }
        v + self.slopes[self.breakpoints.len()] * (p - left)
    }

    /// ℓ(p, y) = −ψ(p) + (p − y)·ψ'(p).
    pub fn proper_loss(&self, p: f64, y: u8) -> f64 {
        -self.value(p) + (p - y as f64) * self.slope(p)
    }
}

/// ℓ(p, y) = a·y + b + Σ_i w_i ℓ_{s_i}(p, y) with w_i = λ_i / 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProperDecomposition {
    pub breakpoints: Vec<f64>,
    /// slope jumps λ_i
    pub lambdas: Vec<f64>,
    pub a: f64,
    pub b: f64,
}

impl ProperDecomposition {
    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.lambdas.iter().map(|l| l / 2.0)
    }

    pub fn reconstruct(&self, p: f64, y: u8) -> f64 {
        self.a * y as f64
            + self.b
            + self.breakpoints.iter().zip(self.weights()).map(|(&s, w)| w * threshold_value(s, p, y)).sum::<f64>()
    }

    /// Total threshold weight once the affine slope a is moved onto the
    /// endpoint thresholds.
    pub fn folded_weight(&self) -> f64 {
        self.weights().sum::<f64>() + self.a.abs()
    }
}

pub fn decompose_proper(psi: &PiecewiseLinear) -> Result<ProperDecomposition> {
    if psi.slopes.len() != psi.breakpoints.len() + 1 {
        return Err(Error::Invalid("need one more slope than breakpoints".into()));
    }
    for w in psi.breakpoints.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::Invalid("breakpoints must be strictly increasing".into()));
        }
    }
    if psi.breakpoints.iter().any(|&s| !(s > 0.0 && s < 1.0)) {
        return Err(Error::Invalid("breakpoints must lie in (0, 1)".into()));
    }
    if psi.slopes.iter().any(|d| d.abs() > 2.0 + 1e-12) {
        return Err(Error::Invalid("slopes must be bounded by 2".into()));
    }
    let mut lambdas = Vec::with_capacity(psi.breakpoints.len());
    for (i, &s) in psi.breakpoints.iter().enumerate() {
        let jump = psi.slopes[i + 1] - psi.slopes[i];
        if jump < -1e-12 {
            return Err(Error::NegativeSlopeJump { at: s, jump });
        }
        lambdas.push(jump.max(0.0));
    }
    let half_sum: f64 = lambdas.iter().sum::<f64>() / 2.0;
    let half_moment: f64 = lambdas.iter().zip(&psi.breakpoints).map(|(l, s)| l * s).sum::<f64>() / 2.0;
    // ψ(p) = A + B p + ½ Σ λ_i |p − s_i|
    let big_a = psi.value_at_zero - half_moment;
    let big_b = psi.slopes[0] + half_sum;
    Ok(ProperDecomposition { breakpoints: psi.breakpoints.clone(), lambdas, a: -big_b, b: -big_a })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_examples() {
        assert_eq!(threshold_value(0.5, 0.5, 1), -0.5);
        for p in [0.0, 0.3, 1.0] {
            assert_eq!(threshold_value(0.0, p, 1), -1.0);
            assert_eq!(threshold_value(0.0, p, 0), 0.0);
        }
        assert!((threshold_value(1.0, 0.4, 0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn linear_psi_has_no_jumps() {
        let psi = PiecewiseLinear { value_at_zero: 0.3, breakpoints: vec![], slopes: vec![1.5] };
        let d = decompose_proper(&psi).unwrap();
        assert!(d.lambdas.is_empty());
        for p in [0.0, 0.4, 1.0] {
            for y in [0, 1] {
                assert!((d.reconstruct(p, y) - psi.proper_loss(p, y)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn abs_psi_single_jump() {
        let psi = PiecewiseLinear { value_at_zero: 0.5, breakpoints: vec![0.5], slopes: vec![-1.0, 1.0] };
        let d = decompose_proper(&psi).unwrap();
        assert_eq!(d.lambdas, vec![2.0]);
        assert_eq!(d.breakpoints, vec![0.5]);
    }

    #[test]
    fn rejects_concave_kink() {
        let psi = PiecewiseLinear { value_at_zero: 0.0, breakpoints: vec![0.5], slopes: vec![1.0, -1.0] };
        assert!(matches!(decompose_proper(&psi), Err(Error::NegativeSlopeJump { .. })));
    }

    #[test]
    fn square_interpolant_recovers_brier() {
        let nodes: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        let psi = PiecewiseLinear::interpolate(&nodes, |p| p * p);
        let d = decompose_proper(&psi).unwrap();
        assert!(d.folded_weight() <= 4.0 + 1e-9);
        for i in 0..100 {
            let p = (i as f64 + 0.5) / 100.0;
            for y in [0u8, 1] {
                // −p² + (p − y)2p = (p − y)² − y
                let direct = (p - y as f64).powi(2) - y as f64;
                assert!((d.reconstruct(p, y) - direct).abs() <= 1e-3);
                assert!((d.reconstruct(p, y) - psi.proper_loss(p, y)).abs() <= 1e-9);
            }
        }
    }
}
