//! Scalar GLM losses for binary labels: ℓ(t, y) = scale·(ω(t) − t·y) with
//! t ∈ [-1, 1], y ∈ {0, 1} and ω' ∈ [0, 1].

use std::fmt::Debug;

use crate::error::{Error, Result};
use crate::simplex::sign;

pub trait BinaryLoss: Debug + Send + Sync {
    fn id(&self) -> String;
    fn scale(&self) -> f64;
    fn omega(&self, t: f64) -> f64;
    /// ω'(t) ∈ [0, 1].
    fn omega_prime(&self, t: f64) -> f64;
    /// Minimizer of ω(t) − t·p over [-1, 1].
    fn ex_ante(&self, p: f64) -> f64;

    fn smooth(&self) -> bool {
        true
    }

    fn value(&self, t: f64, y: u8) -> f64 {
        self.scale() * (self.omega(t) - t * y as f64)
    }

    fn expected(&self, t: f64, p: f64) -> f64 {
        self.scale() * (self.omega(t) - t * p)
    }

    /// ℓ(t, 1) − ℓ(t, 0) = −scale·t.
    fn derivative(&self, t: f64) -> f64 {
        -self.scale() * t
    }
}

/// Squared loss in GLM form: ω(t) = (t+1)²/4, link t = 2p − 1, so that
/// ℓ(2p−1, y) = (p − y)².
#[derive(Debug, Clone, Copy)]
pub struct Squared;

impl BinaryLoss for Squared {
    fn id(&self) -> String {
        "squared".into()
    }
    fn scale(&self) -> f64 {
        1.0
    }
    fn omega(&self, t: f64) -> f64 {
        (t + 1.0) * (t + 1.0) / 4.0
    }
    fn omega_prime(&self, t: f64) -> f64 {
        (t + 1.0) / 2.0
    }
    fn ex_ante(&self, p: f64) -> f64 {
        2.0 * p - 1.0
    }
}

/// Logistic loss ω(t) = log(1 + e^t) scaled by 1/log(1 + e).
#[derive(Debug, Clone, Copy)]
pub struct Logistic;

impl BinaryLoss for Logistic {
    fn id(&self) -> String {
        "log".into()
    }
    fn scale(&self) -> f64 {
        1.0 / (1.0 + std::f64::consts::E).ln()
    }
    fn omega(&self, t: f64) -> f64 {
        if t > 0.0 {
            t + (-t).exp().ln_1p()
        } else {
            t.exp().ln_1p()
        }
    }
    fn omega_prime(&self, t: f64) -> f64 {
        1.0 / (1.0 + (-t).exp())
    }
    fn ex_ante(&self, p: f64) -> f64 {
        if p <= 0.0 {
            -1.0
        } else if p >= 1.0 {
            1.0
        } else {
            (p / (1.0 - p)).ln().clamp(-1.0, 1.0)
        }
    }
}

/// Threshold loss ℓ_s in GLM form: ω(t) = s·t, ℓ(t, y) = t(s − y); at
/// t = sign(p − s) it equals the proper threshold loss.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdGlm {
    pub s: f64,
}

impl BinaryLoss for ThresholdGlm {
    fn id(&self) -> String {
        format!("thresh-{}", self.s)
    }
    fn scale(&self) -> f64 {
        1.0
    }
    fn omega(&self, t: f64) -> f64 {
        self.s * t
    }
    fn omega_prime(&self, _t: f64) -> f64 {
        self.s
    }
    fn smooth(&self) -> bool {
        false
    }
    fn ex_ante(&self, p: f64) -> f64 {
        sign(p - self.s)
    }
}

/// Checked ℓ(t, y).
pub fn binary_value(loss: &dyn BinaryLoss, t: f64, y: u8) -> Result<f64> {
    if !(t.abs() <= 1.0 + 1e-12) {
        return Err(Error::OutOfBox { index: 0, value: t });
    }
    if y > 1 {
        return Err(Error::Invalid(format!("binary label {y}")));
    }
    Ok(loss.value(t, y))
}

/// Squared, logistic, and thresholds at 0.1, …, 0.9.
pub fn binary_bank() -> Vec<Box<dyn BinaryLoss>> {
    let mut bank: Vec<Box<dyn BinaryLoss>> = vec![Box::new(Squared), Box::new(Logistic)];
    for i in 1..10 {
        bank.push(Box::new(ThresholdGlm { s: i as f64 / 10.0 }));
    }
    bank
}

pub fn binary_loss_by_name(name: &str) -> Result<Box<dyn BinaryLoss>> {
    match name {
        "squared" => Ok(Box::new(Squared)),
        "log" => Ok(Box::new(Logistic)),
        _ => {
            let s = name
                .strip_prefix("thresh-")
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|s| (0.0..=1.0).contains(s))
                .ok_or_else(|| Error::UnknownLoss(name.to_string()))?;
            Ok(Box::new(ThresholdGlm { s }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::proper::threshold_value;

    #[test]
    fn squared_matches_brier() {
        for i in 0..=20 {
            let p = i as f64 / 20.0;
            for y in [0u8, 1] {
                let direct = (p - y as f64).powi(2);
                assert!((Squared.value(Squared.ex_ante(p), y) - direct).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn threshold_glm_matches_proper_form() {
        for i in 0..=20 {
            let p = i as f64 / 20.0;
            for s in [0.0, 0.3, 0.5, 1.0] {
                let l = ThresholdGlm { s };
                for y in [0u8, 1] {
                    let glm = l.value(l.ex_ante(p), y);
                    assert!((glm - threshold_value(s, p, y)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn values_in_unit_range() {
        for l in binary_bank() {
            for i in 0..=40 {
                let t = -1.0 + i as f64 / 20.0;
                for y in [0u8, 1] {
                    let v = binary_value(l.as_ref(), t, y).unwrap();
                    assert!((-1.0..=1.0).contains(&v), "{} {t} {y} {v}", l.id());
                }
            }
        }
    }

    #[test]
    fn names_roundtrip() {
        for l in binary_bank() {
            assert_eq!(binary_loss_by_name(&l.id()).unwrap().id(), l.id());
        }
        assert!(binary_loss_by_name("hinge").is_err());
    }
}
