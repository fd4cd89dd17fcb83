//! Simplex geometry: probability vectors, lattice ε-nets, nearest-point
//! lookup and index sampling.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Tolerance on negative entries before clipping.
pub const NEG_TOL: f64 = 1e-12;
/// Tolerance on the total mass before renormalization.
pub const SUM_TOL: f64 = 1e-9;
/// Default hard cap on net size.
pub const DEFAULT_NET_CAP: usize = 2_000_000;

/// A probability vector in the k-simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimplexPoint {
    coords: Vec<f64>,
}

impl SimplexPoint {
    /// Validates, clips tiny negatives and renormalizes.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidK(coords.len()));
        }
        let coords = normalize(&coords)?;
        Ok(Self { coords })
    }

    /// Standard basis vector e_i.
    pub fn vertex(k: usize, i: usize) -> Self {
        let mut coords = vec![0.0; k];
        coords[i] = 1.0;
        Self { coords }
    }

    pub fn uniform(k: usize) -> Self {
        Self { coords: vec![1.0 / k as f64; k] }
    }

    pub fn k(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// Clip entries in [-NEG_TOL, 0) to zero and rescale to unit mass.
pub fn normalize(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(v.len());
    for (i, &x) in v.iter().enumerate() {
        if !x.is_finite() || x < -NEG_TOL {
            return Err(Error::NotNormalizable(format!("entry {i} = {x}")));
        }
        out.push(x.max(0.0));
    }
    let total: f64 = out.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::NotNormalizable(format!("mass {total}")));
    }
    for x in &mut out {
        *x /= total;
    }
    Ok(out)
}

pub fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

pub fn l2(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sign with sign(0) = 1.
#[inline]
pub fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Number of lattice points {m/n : m ∈ Z^k_{≥0}, Σm = n}, i.e. C(n+k-1, k-1).
pub fn lattice_count(k: usize, n: u64) -> u128 {
    let mut c: u128 = 1;
    let top = n as u128 + k as u128 - 1;
    for i in 0..(k as u128 - 1) {
        c = c * (top - i) / (i + 1);
    }
    c
}

/// Lattice denominator for a requested ℓ1 radius: h = eps / (2(k-1)) rounded
/// down to a reciprocal integer.
pub fn lattice_denominator(k: usize, eps: f64) -> u64 {
    let raw = 2.0 * (k as f64 - 1.0) / eps;
    // guard against 4.000000000001 style rounding
    (raw - 1e-9).ceil().max(1.0) as u64
}

/// Finite ℓ1 covering of the k-simplex by the lattice with step 1/n.
///
/// Enumeration order treats the last coordinate as most significant, so for
/// k = 2 point j is (1 - j/n, j/n).
#[derive(Debug, Clone)]
pub struct SimplexNet {
    k: usize,
    eps: f64,
    n: u64,
    points: Vec<SimplexPoint>,
    index: HashMap<Vec<u32>, usize>,
}

#[derive(Serialize, Deserialize)]
struct NetJson {
    k: usize,
    eps: f64,
    step: f64,
    points: Vec<Vec<f64>>,
}

impl SimplexNet {
    pub fn new(k: usize, eps: f64) -> Result<Self> {
        Self::with_cap(k, eps, DEFAULT_NET_CAP)
    }

    /// Same as `new` but radii above 1 are clamped to 1 instead of rejected.
    pub fn with_clamped_eps(k: usize, eps: f64) -> Result<Self> {
        let eps = if eps > 1.0 { 1.0 } else { eps };
        Self::new(k, eps)
    }

    pub fn with_cap(k: usize, eps: f64, cap: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidK(k));
        }
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidEps(eps));
        }
        let n = lattice_denominator(k, eps);
        let size = lattice_count(k, n);
        if size > cap as u128 {
            return Err(Error::NetTooLarge { size, cap });
        }
        let mut points = Vec::with_capacity(size as usize);
        let mut index = HashMap::with_capacity(size as usize);
        let mut m = vec![0u32; k];
        enumerate(k - 1, n as u32, &mut m, &mut |m| {
            let coords = m.iter().map(|&mi| mi as f64 / n as f64).collect();
            index.insert(m.to_vec(), points.len());
            points.push(SimplexPoint { coords });
        });
        Ok(Self { k, eps, n, points, index })
    }

    pub fn k(&self) -> usize {
        self.k
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    /// Lattice step 1/n.
    pub fn step(&self) -> f64 {
        1.0 / self.n as f64
    }
    pub fn denominator(&self) -> u64 {
        self.n
    }
    pub fn len(&self) -> usize {
        self.points.len()
    }
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
    pub fn points(&self) -> &[SimplexPoint] {
        &self.points
    }
    pub fn point(&self, i: usize) -> &[f64] {
        self.points[i].coords()
    }

    /// Position of the lattice point with integer coordinates m.
    pub fn index_of(&self, m: &[u32]) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// Position of vertex e_i.
    pub fn vertex_index(&self, i: usize) -> usize {
        let mut m = vec![0u32; self.k];
        m[i] = self.n as u32;
        self.index[&m]
    }

    /// Closest net point in ℓ1, lowest index on ties.
    pub fn nearest(&self, p: &[f64]) -> Result<usize> {
        if p.len() != self.k {
            return Err(Error::DimensionMismatch { expected: self.k, got: p.len() });
        }
        let mut best = (f64::INFINITY, 0usize);
        for (i, s) in self.points.iter().enumerate() {
            let d = l1(p, s.coords());
            if d < best.0 {
                best = (d, i);
            }
        }
        Ok(best.1)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(NetJson {
            k: self.k,
            eps: self.eps,
            step: self.step(),
            points: self.points.iter().map(|p| p.coords.clone()).collect(),
        })
        .expect("net serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let raw: NetJson = serde_json::from_value(v.clone())?;
        let net = SimplexNet::new(raw.k, raw.eps)?;
        if net.len() != raw.points.len() {
            return Err(Error::Invalid("net JSON does not match its (k, eps)".into()));
        }
        Ok(net)
    }
}

fn enumerate(pos: usize, remaining: u32, m: &mut [u32], emit: &mut impl FnMut(&[u32])) {
    if pos == 0 {
        m[0] = remaining;
        emit(m);
        return;
    }
    for v in 0..=remaining {
        m[pos] = v;
        enumerate(pos - 1, remaining - v, m, emit);
    }
}

/// Draw index i with probability dist[i].
pub fn sample_index(dist: &[f64], rng: &mut Rng) -> Result<usize> {
    if dist.is_empty() {
        return Err(Error::NotNormalizable("empty distribution".into()));
    }
    let p = normalize(dist)?;
    let u = rng.uniform();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &pi) in p.iter().enumerate() {
        if pi > 0.0 {
            acc += pi;
            last = i;
            if u < acc {
                return Ok(i);
            }
        }
    }
    Ok(last)
}

/// Sparse mixture over net indices.
pub type Mixture = Vec<(usize, f64)>;

/// Draw from a sparse mixture.
pub fn sample_mixture(a: &Mixture, rng: &mut Rng) -> Result<usize> {
    let weights: Vec<f64> = a.iter().map(|&(_, w)| w).collect();
    Ok(a[sample_index(&weights, rng)?].0)
}
