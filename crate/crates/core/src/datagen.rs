//! Synthetic streams with known ground truth.

use std::io::{Read, Write};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::simplex::{normalize, sample_index};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StreamKind {
    /// y ∼ softmax(C* x)
    SoftmaxLinear,
    /// y ∼ Bernoulli(σ(⟨c*, x⟩)), k = 2
    LogisticBinary,
    /// y ∼ q regardless of x
    FixedMarginal,
    /// labels cycle through the classes
    AdversarialAlternating,
}

impl std::str::FromStr for StreamKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "softmax-linear" => StreamKind::SoftmaxLinear,
            "logistic-binary" => StreamKind::LogisticBinary,
            "fixed-marginal" => StreamKind::FixedMarginal,
            "adversarial-alternating" => StreamKind::AdversarialAlternating,
            other => return Err(Error::Invalid(format!("unknown stream kind `{other}`"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpec {
    pub kind: StreamKind,
    pub d: usize,
    pub k: usize,
    #[serde(rename = "T")]
    pub horizon: usize,
    /// Ground-truth comparator, k × d row-major (1 × d for logistic-binary).
    /// Drawn from the seed when absent.
    #[serde(default)]
    pub truth: Option<Vec<f64>>,
    /// Label marginal for fixed-marginal streams.
    #[serde(default)]
    pub marginal: Option<Vec<f64>>,
    pub seed: u64,
    /// Row norm of a drawn ground truth; larger means less label noise.
    #[serde(default = "default_signal")]
    pub signal: f64,
}

fn default_signal() -> f64 {
    3.0
}

impl StreamSpec {
    pub fn new(kind: StreamKind, d: usize, k: usize, horizon: usize, seed: u64) -> Self {
        Self { kind, d, k, horizon, truth: None, marginal: None, seed, signal: default_signal() }
    }

    fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidK(self.k));
        }
        if self.kind == StreamKind::LogisticBinary && self.k != 2 {
            return Err(Error::Invalid("logistic-binary streams have k = 2".into()));
        }
        if self.d == 0 {
            return Err(Error::Invalid("feature dimension must be positive".into()));
        }
        if let Some(t) = &self.truth {
            let rows = if self.kind == StreamKind::LogisticBinary { 1 } else { self.k };
            if t.len() != rows * self.d {
                return Err(Error::DimensionMismatch { expected: rows * self.d, got: t.len() });
            }
        }
        if self.kind == StreamKind::FixedMarginal {
            let q = self.marginal.as_ref().ok_or_else(|| Error::Invalid("fixed-marginal needs q".into()))?;
            if q.len() != self.k {
                return Err(Error::DimensionMismatch { expected: self.k, got: q.len() });
            }
            normalize(q)?;
        }
        Ok(())
    }
}

/// Uniform draw from the unit ball in R^d.
pub fn unit_ball(d: usize, rng: &mut Rng) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = crate::simplex::l2(&g);
        if n > 0.0 {
            let r = rng.uniform().powf(1.0 / d as f64);
            return g.into_iter().map(|v| v / n * r).collect();
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// A materialized stream plus the law it was drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    pub spec: StreamSpec,
    /// Ground truth actually used (drawn if the spec had none).
    pub truth: Vec<f64>,
    pub xs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Stream {
    pub fn binary_labels(&self) -> Vec<u8> {
        self.labels.iter().map(|&y| y as u8).collect()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Vec<f64>, usize)> + '_ {
        self.xs.iter().cloned().zip(self.labels.iter().copied())
    }
}

/// Sampler for the conditional law of a spec; also used as an i.i.d.
/// source by the statistical pipelines.
#[derive(Debug, Clone)]
pub struct Source {
    pub spec: StreamSpec,
    pub truth: Vec<f64>,
    rng: Rng,
    t: usize,
}

impl Source {
    pub fn new(spec: StreamSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = Rng::new(spec.seed);
        let mut truth_rng = rng.split();
        let rows = if spec.kind == StreamKind::LogisticBinary { 1 } else { spec.k };
        let truth = match &spec.truth {
            Some(t) => t.clone(),
            None => (0..rows)
                .flat_map(|_| {
                    let g: Vec<f64> = (0..spec.d).map(|_| StandardNormal.sample(&mut truth_rng)).collect();
                    let n = crate::simplex::l2(&g).max(1e-300);
                    g.into_iter().map(|v| v / n * spec.signal).collect::<Vec<_>>()
                })
                .collect(),
        };
        Ok(Self { spec, truth, rng, t: 0 })
    }

    /// Conditional label distribution at x.
    pub fn conditional(&self, x: &[f64], t: usize) -> Vec<f64> {
        let spec = &self.spec;
        match spec.kind {
            StreamKind::SoftmaxLinear => {
                let z: Vec<f64> = self.truth.chunks(spec.d).map(|r| crate::simplex::dot(r, x)).collect();
                softmax(&z)
            }
            StreamKind::LogisticBinary => {
                let p = sigmoid(crate::simplex::dot(&self.truth, x));
                vec![1.0 - p, p]
            }
            StreamKind::FixedMarginal => normalize(spec.marginal.as_ref().expect("validated")).expect("validated"),
            StreamKind::AdversarialAlternating => {
                let mut q = vec![0.0; spec.k];
                q[t % spec.k] = 1.0;
                q
            }
        }
    }

    pub fn draw(&mut self) -> Result<(Vec<f64>, usize)> {
        let x = unit_ball(self.spec.d, &mut self.rng);
        let q = self.conditional(&x, self.t);
        let y = sample_index(&q, &mut self.rng)?;
        self.t += 1;
        Ok((x, y))
    }
}

impl Iterator for Source {
    type Item = (Vec<f64>, usize);
    fn next(&mut self) -> Option<Self::Item> {
        self.draw().ok()
    }
}

pub fn generate(spec: &StreamSpec) -> Result<Stream> {
    let mut src = Source::new(spec.clone())?;
    let mut xs = Vec::with_capacity(spec.horizon);
    let mut labels = Vec::with_capacity(spec.horizon);
    for _ in 0..spec.horizon {
        let (x, y) = src.draw()?;
        xs.push(x);
        labels.push(y);
    }
    Ok(Stream { spec: spec.clone(), truth: src.truth, xs, labels })
}

/// CSV with columns x0..x{d-1}, label.
pub fn write_csv(xs: &[Vec<f64>], labels: &[usize], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let d = xs.first().map_or(0, |x| x.len());
    let mut header: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for (x, y) in xs.iter().zip(labels) {
        let mut row: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
        row.push(y.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(input: impl Read) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let mut r = csv::Reader::from_reader(input);
    let mut xs = Vec::new();
    let mut labels = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let n = rec.len();
        if n == 0 {
            continue;
        }
        let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Invalid(format!("bad number `{s}`: {e}")));
        let x = rec.iter().take(n - 1).map(parse).collect::<Result<Vec<_>>>()?;
        let y = rec[n - 1].trim().parse::<usize>().map_err(|e| Error::Invalid(format!("bad label: {e}")))?;
        if crate::simplex::l2(&x) > 1.0 + 1e-9 {
            return Err(Error::Invalid(format!("feature row {} outside the unit ball", xs.len())));
        }
        xs.push(x);
        labels.push(y);
    }
    Ok((xs, labels))
}
