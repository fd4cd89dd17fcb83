//! Calibration, multiaccuracy and omniprediction-gap evaluators, plus the
//! ERM comparator benchmark.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::binary::BinaryLoss;
use crate::losses::GlmLoss;
use crate::simplex::{l2, SimplexNet};

/// Threshold calibration scores C(s) = (1/T) Σ_t (p_t − y_t)·sign(p_t − s)
/// for every threshold s.
pub fn threshold_scores(thresholds: &[f64], preds: &[f64], labels: &[u8]) -> Vec<f64> {
    let t = preds.len();
    if t == 0 {
        return vec![0.0; thresholds.len()];
    }
    let mut pairs: Vec<(f64, f64)> = preds.iter().zip(labels).map(|(&p, &y)| (p, p - y as f64)).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite predictions"));
    let total: f64 = pairs.iter().map(|e| e.1).sum();
    // suffix[i] = Σ errors of predictions at sorted position ≥ i
    let mut suffix = vec![0.0; t + 1];
    for i in (0..t).rev() {
        suffix[i] = suffix[i + 1] + pairs[i].1;
    }
    thresholds
        .iter()
        .map(|&s| {
            let first = pairs.partition_point(|e| e.0 < s);
            let above = suffix[first];
            (2.0 * above - total) / t as f64
        })
        .collect()
}

/// max_s C(s) over the thresholds.
pub fn thresh_calibration(thresholds: &[f64], preds: &[f64], labels: &[u8]) -> f64 {
    threshold_scores(thresholds, preds, labels).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// max_s |C(s)|.
pub fn thresh_calibration_abs(thresholds: &[f64], preds: &[f64], labels: &[u8]) -> f64 {
    threshold_scores(thresholds, preds, labels).into_iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// (1/T) Σ_s ‖Σ_{t: p_t = s} (s − y_t)‖₁.
pub fn linf_calibration(net: &SimplexNet, preds: &[usize], labels: &[usize]) -> f64 {
    let k = net.k();
    let mut sums = vec![0.0; net.len() * k];
    for (&s, &y) in preds.iter().zip(labels) {
        let p = net.point(s);
        for j in 0..k {
            sums[s * k + j] += p[j] - if j == y { 1.0 } else { 0.0 };
        }
    }
    if preds.is_empty() {
        return 0.0;
    }
    sums.iter().map(|v| v.abs()).sum::<f64>() / preds.len() as f64
}

/// (1/T) Σ_i ‖Σ_t (p_t − y_t)_i x_t‖₂ for net predictions.
pub fn linear_multiaccuracy(net: &SimplexNet, preds: &[usize], labels: &[usize], xs: &[Vec<f64>]) -> f64 {
    let k = net.k();
    let d = xs.first().map_or(0, |x| x.len());
    let mut acc = vec![0.0; k * d];
    for ((&s, &y), x) in preds.iter().zip(labels).zip(xs) {
        let p = net.point(s);
        for i in 0..k {
            let e = p[i] - if i == y { 1.0 } else { 0.0 };
            for (a, xv) in acc[i * d..(i + 1) * d].iter_mut().zip(x) {
                *a += e * xv;
            }
        }
    }
    if preds.is_empty() {
        return 0.0;
    }
    (0..k).map(|i| l2(&acc[i * d..(i + 1) * d])).sum::<f64>() / preds.len() as f64
}

/// (1/T) ‖Σ_t (p_t − y_t) x_t‖₂ for scalar predictions.
pub fn binary_multiaccuracy(preds: &[f64], labels: &[u8], xs: &[Vec<f64>]) -> f64 {
    let d = xs.first().map_or(0, |x| x.len());
    let mut acc = vec![0.0; d];
    for ((&p, &y), x) in preds.iter().zip(labels).zip(xs) {
        let e = p - y as f64;
        for (a, xv) in acc.iter_mut().zip(x) {
            *a += e * xv;
        }
    }
    if preds.is_empty() {
        return 0.0;
    }
    l2(&acc) / preds.len() as f64
}

/// Feature maps for comparator families; outputs stay in the unit ball when
/// inputs do.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMap {
    #[serde(alias = "linear")]
    Identity,
    /// coordinatewise square
    Square,
}

impl FeatureMap {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            FeatureMap::Identity => x.to_vec(),
            FeatureMap::Square => x.iter().map(|v| v * v).collect(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FeatureMap::Identity => "linear",
            FeatureMap::Square => "square",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "linear" | "identity" => Ok(FeatureMap::Identity),
            "square" => Ok(FeatureMap::Square),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }
}

/// x ↦ C φ(x) with C a rows × cols matrix whose rows have norm ≤ 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearComparator {
    pub rows: usize,
    pub cols: usize,
    pub weights: Vec<f64>,
    pub map: FeatureMap,
}

impl LinearComparator {
    pub fn zero(rows: usize, cols: usize, map: FeatureMap) -> Self {
        Self { rows, cols, weights: vec![0.0; rows * cols], map }
    }

    /// Rescales any row of norm above 1.
    pub fn projected(mut self) -> Self {
        for row in self.weights.chunks_mut(self.cols) {
            let n = l2(row);
            if n > 1.0 {
                row.iter_mut().for_each(|v| *v /= n);
            }
        }
        self
    }

    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        let phi = self.map.apply(x);
        self.weights.chunks(self.cols).map(|row| row.iter().zip(&phi).map(|(a, b)| a * b).sum()).collect()
    }
}

fn clamp_box(t: &mut [f64]) {
    // guards the last ulp of row-norm rescaling
    for v in t {
        *v = v.clamp(-1.0, 1.0);
    }
}

/// Average multiclass loss of a comparator.
pub fn comparator_loss(loss: &dyn GlmLoss, c: &LinearComparator, labels: &[usize], xs: &[Vec<f64>]) -> f64 {
    let total: f64 = labels
        .iter()
        .zip(xs)
        .map(|(&y, x)| {
            let mut t = c.predict(x);
            clamp_box(&mut t);
            loss.value(&t, y)
        })
        .sum();
    total / labels.len().max(1) as f64
}

/// Average binary loss of a comparator with one row.
pub fn binary_comparator_loss(loss: &dyn BinaryLoss, c: &LinearComparator, labels: &[u8], xs: &[Vec<f64>]) -> f64 {
    let total: f64 = labels.iter().zip(xs).map(|(&y, x)| loss.value(c.predict(x)[0].clamp(-1.0, 1.0), y)).sum();
    total / labels.len().max(1) as f64
}

/// Iterations of projected gradient descent used for the ERM benchmark.
pub const ERM_ITERS: usize = 200;

/// Projected (sub)gradient descent on the average loss over the row-ball.
/// Smooth losses use step 1/scale; others a 1/(scale√i) schedule. Returns the
/// best iterate seen.
pub fn erm_multiclass(loss: &dyn GlmLoss, labels: &[usize], xs: &[Vec<f64>], map: FeatureMap) -> LinearComparator {
    let k = loss.k();
    let feats: Vec<Vec<f64>> = xs.iter().map(|x| map.apply(x)).collect();
    let d = feats.first().map_or(0, |f| f.len());
    let n = labels.len().max(1) as f64;
    let scale = loss.scale();
    let mut c = LinearComparator::zero(k, d, map);
    let mut best = (f64::INFINITY, c.clone());
    let mut t = vec![0.0; k];
    let mut grad = vec![0.0; k * d];
    // each pass scores the current iterate and computes its gradient
    for it in 0..=ERM_ITERS {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut total = 0.0;
        for (&y, f) in labels.iter().zip(&feats) {
            for (ti, row) in t.iter_mut().zip(c.weights.chunks(d)) {
                *ti = row.iter().zip(f).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0);
            }
            total += loss.value(&t, y);
            let g = loss.grad_omega(&t);
            for i in 0..k {
                let r = scale * (g[i] - if i == y { 1.0 } else { 0.0 }) / n;
                for (gv, fv) in grad[i * d..(i + 1) * d].iter_mut().zip(f) {
                    *gv += r * fv;
                }
            }
        }
        if total / n < best.0 {
            best = (total / n, c.clone());
        }
        if it == ERM_ITERS {
            break;
        }
        let step = if loss.smooth() { 1.0 / scale } else { 1.0 / (scale * ((it + 1) as f64).sqrt()) };
        for (w, g) in c.weights.iter_mut().zip(&grad) {
            *w -= step * g;
        }
        c = c.projected();
    }
    best.1
}

/// Binary analogue of `erm_multiclass` over the unit ball.
pub fn erm_binary(loss: &dyn BinaryLoss, labels: &[u8], xs: &[Vec<f64>], map: FeatureMap) -> LinearComparator {
    let feats: Vec<Vec<f64>> = xs.iter().map(|x| map.apply(x)).collect();
    let d = feats.first().map_or(0, |f| f.len());
    let n = labels.len().max(1) as f64;
    let scale = loss.scale();
    let mut c = LinearComparator::zero(1, d, map);
    let mut best = (f64::INFINITY, c.clone());
    let mut grad = vec![0.0; d];
    for it in 0..=ERM_ITERS {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut total = 0.0;
        for (&y, f) in labels.iter().zip(&feats) {
            let t = c.weights.iter().zip(f).map(|(a, b)| a * b).sum::<f64>().clamp(-1.0, 1.0);
            total += loss.value(t, y);
            let r = scale * (loss.omega_prime(t) - y as f64) / n;
            for (gv, fv) in grad.iter_mut().zip(f) {
                *gv += r * fv;
            }
        }
        if total / n < best.0 {
            best = (total / n, c.clone());
        }
        if it == ERM_ITERS {
            break;
        }
        let step = if loss.smooth() { 1.0 / scale } else { 1.0 / (scale * ((it + 1) as f64).sqrt()) };
        for (w, g) in c.weights.iter_mut().zip(&grad) {
            *w -= step * g;
        }
        c = c.projected();
    }
    best.1
}

/// Per-loss quantities of the omniprediction decomposition on a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossMetrics {
    /// avg ℓ(k*(p_t), y_t) − min over the benchmark of avg ℓ(c(x_t), y_t)
    pub gap: f64,
    pub predictor_loss: f64,
    pub benchmark_loss: f64,
    /// index of the best benchmark comparator
    pub benchmark_index: usize,
    /// (1/T) Σ ⟨p_t − y_t, −d_ℓ(k*(p_t))⟩
    pub calibration_w: f64,
    /// sup over F = {d_ℓ ∘ c} of the averaged multiaccuracy payoff
    pub multiaccuracy_f: f64,
    /// (1/T) Σ ⟨d_ℓ(c*(x_t)), p_t − y_t⟩ at the best benchmark comparator
    pub multiaccuracy_at_benchmark: f64,
}

impl LossMetrics {
    /// multiaccuracy_f + calibration_w − gap; nonnegative up to rounding.
    pub fn decomposition_slack(&self) -> f64 {
        self.multiaccuracy_f + self.calibration_w - self.gap
    }
}

/// avg ℓ(k*(p_t), y_t) − min_c avg ℓ(c(x_t), y_t) for net predictions.
pub fn omni_gap(
    loss: &dyn GlmLoss,
    net: &SimplexNet,
    preds: &[usize],
    labels: &[usize],
    xs: &[Vec<f64>],
    benchmark: &[LinearComparator],
) -> f64 {
    multiclass_loss_metrics(loss, net, preds, labels, xs, benchmark, 0.0).gap
}

/// Full decomposition for one multiclass loss. `multiaccuracy_sup` is the
/// closed-form sup over the comparator class of the averaged multiaccuracy
/// payoff (before loss scaling).
pub fn multiclass_loss_metrics(
    loss: &dyn GlmLoss,
    net: &SimplexNet,
    preds: &[usize],
    labels: &[usize],
    xs: &[Vec<f64>],
    benchmark: &[LinearComparator],
    multiaccuracy_sup: f64,
) -> LossMetrics {
    let t = preds.len().max(1) as f64;
    let k = net.k();
    // k* is evaluated once per net point
    let mut cache: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut pred_loss = 0.0;
    let mut cal = 0.0;
    for (&s, &y) in preds.iter().zip(labels) {
        let ks = cache.entry(s).or_insert_with(|| loss.ex_ante(net.point(s)));
        pred_loss += loss.value(ks, y);
        let p = net.point(s);
        let d = loss.discrete_derivative(ks);
        for j in 0..k {
            let e = p[j] - if j == y { 1.0 } else { 0.0 };
            cal -= e * d[j];
        }
    }
    let (mut best_i, mut best) = (0, f64::INFINITY);
    for (i, c) in benchmark.iter().enumerate() {
        let v = comparator_loss(loss, c, labels, xs);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let mut ma_at = 0.0;
    if let Some(c) = benchmark.get(best_i) {
        for ((&s, &y), x) in preds.iter().zip(labels).zip(xs) {
            let mut tc = c.predict(x);
            clamp_box(&mut tc);
            let d = loss.discrete_derivative(&tc);
            let p = net.point(s);
            for j in 0..k {
                ma_at += d[j] * (p[j] - if j == y { 1.0 } else { 0.0 });
            }
        }
    }
    LossMetrics {
        gap: pred_loss / t - best,
        predictor_loss: pred_loss / t,
        benchmark_loss: best,
        benchmark_index: best_i,
        calibration_w: cal / t,
        multiaccuracy_f: loss.scale() * multiaccuracy_sup,
        multiaccuracy_at_benchmark: ma_at / t,
    }
}

/// Full decomposition for one binary loss with scalar predictions.
pub fn binary_loss_metrics(
    loss: &dyn BinaryLoss,
    preds: &[f64],
    labels: &[u8],
    xs: &[Vec<f64>],
    benchmark: &[LinearComparator],
    multiaccuracy_sup: f64,
) -> LossMetrics {
    let t = preds.len().max(1) as f64;
    let mut pred_loss = 0.0;
    let mut cal = 0.0;
    for (&p, &y) in preds.iter().zip(labels) {
        let ks = loss.ex_ante(p);
        pred_loss += loss.value(ks, y);
        cal -= (p - y as f64) * loss.derivative(ks);
    }
    let (mut best_i, mut best) = (0, f64::INFINITY);
    for (i, c) in benchmark.iter().enumerate() {
        let v = binary_comparator_loss(loss, c, labels, xs);
        if v < best {
            best = v;
            best_i = i;
        }
    }
    let mut ma_at = 0.0;
    if let Some(c) = benchmark.get(best_i) {
        for ((&p, &y), x) in preds.iter().zip(labels).zip(xs) {
            ma_at += loss.derivative(c.predict(x)[0].clamp(-1.0, 1.0)) * (p - y as f64);
        }
    }
    LossMetrics {
        gap: pred_loss / t - best,
        predictor_loss: pred_loss / t,
        benchmark_loss: best,
        benchmark_index: best_i,
        calibration_w: cal / t,
        multiaccuracy_f: loss.scale() * multiaccuracy_sup,
        multiaccuracy_at_benchmark: ma_at / t,
    }
}

/// Learner and weight diagnostics for one approachability set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetDiagnostics {
    pub id: String,
    /// sup over the set's class of the averaged payoff
    pub sup_average: f64,
    /// (1/T) Σ g̃_t
    pub realized_average: f64,
    /// oracle ε + (learner regret + weight regret)/T
    pub theoretical_bound: f64,
}

/// Summary of one run; serialized as the machine-readable report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub track: String,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub seed: u64,
    pub k: usize,
    pub eps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresh_cal: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linf_cal: Option<f64>,
    /// absolute-value variant of the calibration metric
    pub calibration_abs: f64,
    pub multiaccuracy: f64,
    /// per comparator family, for unions
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub family_multiaccuracy: BTreeMap<String, f64>,
    pub losses: BTreeMap<String, LossMetrics>,
    pub max_gap: f64,
    /// theorem-level accuracy budget for this track
    pub theorem_budget: f64,
    pub sets: Vec<SetDiagnostics>,
    pub config: serde_json::Value,
}

impl MetricsReport {
    pub fn calibration(&self) -> f64 {
        self.thresh_cal.or(self.linf_cal).unwrap_or(f64::NAN)
    }

    /// Largest violation of gap ≤ multiaccuracy_f + calibration_w over the bank.
    pub fn worst_decomposition_slack(&self) -> f64 {
        self.losses.values().map(|m| m.decomposition_slack()).fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.calibration().is_finite()
            && self.multiaccuracy.is_finite()
            && self.losses.values().all(|m| m.gap.is_finite() && m.calibration_w.is_finite())
    }
}
