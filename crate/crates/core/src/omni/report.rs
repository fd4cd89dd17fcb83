//! Report assembly: calibration, multiaccuracy and the per-loss
//! decomposition measured on a prediction trace.

use std::collections::BTreeMap;

use super::config::{binary_grid, Dataset, PipelineConfig};
use crate::error::{Error, Result};
use crate::eval::{
    binary_loss_metrics, binary_multiaccuracy, erm_binary, erm_multiclass, linear_multiaccuracy, linf_calibration,
    multiclass_loss_metrics, thresh_calibration, thresh_calibration_abs, FeatureMap, LinearComparator, MetricsReport,
    SetDiagnostics,
};
use crate::losses::binary::{binary_bank, binary_loss_by_name, BinaryLoss};
use crate::losses::{loss_by_name, multiclass_bank, GlmLoss};
use crate::simplex::SimplexNet;

pub(crate) fn binary_losses(cfg: &PipelineConfig) -> Result<Vec<Box<dyn BinaryLoss>>> {
    if cfg.losses.is_empty() {
        return Ok(binary_bank());
    }
    cfg.losses.iter().map(|n| binary_loss_by_name(n)).collect()
}

pub(crate) fn multiclass_losses(cfg: &PipelineConfig) -> Result<Vec<Box<dyn GlmLoss>>> {
    if cfg.losses.is_empty() {
        return Ok(multiclass_bank(cfg.k));
    }
    cfg.losses.iter().map(|n| loss_by_name(n, cfg.k)).collect()
}

/// Accuracy multiplier of the guarantee each track targets.
pub(crate) fn budget_multiplier(track: &str) -> f64 {
    match track {
        "multiclass-online" | "union" => 12.0,
        "multiclass-stat" => 9.0,
        _ => 15.0,
    }
}

/// ERM per loss, the generating comparator projected into the unit ball,
/// and the zero comparator.
pub fn binary_benchmark(cfg: &PipelineConfig, data: &Dataset) -> Result<Vec<LinearComparator>> {
    let labels = data.binary_labels();
    let d = data.dim();
    let mut out: Vec<LinearComparator> =
        binary_losses(cfg)?.iter().map(|l| erm_binary(l.as_ref(), &labels, &data.xs, FeatureMap::Identity)).collect();
    if let Some(t) = data.truth.as_ref().filter(|t| t.len() == d) {
        out.push(LinearComparator { rows: 1, cols: d, weights: t.clone(), map: FeatureMap::Identity }.projected());
    }
    out.push(LinearComparator::zero(1, d, FeatureMap::Identity));
    Ok(out)
}

/// ERM per loss and family, the generating comparator (projected) for the
/// identity family, and the zero comparator.
pub fn multiclass_benchmark(cfg: &PipelineConfig, data: &Dataset) -> Result<Vec<LinearComparator>> {
    let d = data.dim();
    let mut out = Vec::new();
    for loss in multiclass_losses(cfg)? {
        for &map in &cfg.families {
            out.push(erm_multiclass(loss.as_ref(), &data.labels, &data.xs, map));
        }
    }
    if cfg.families.contains(&FeatureMap::Identity) {
        if let Some(t) = data.truth.as_ref().filter(|t| t.len() == cfg.k * d) {
            out.push(
                LinearComparator { rows: cfg.k, cols: d, weights: t.clone(), map: FeatureMap::Identity }.projected(),
            );
        }
    }
    out.push(LinearComparator::zero(cfg.k, d, cfg.families[0]));
    Ok(out)
}

fn check_lengths(preds: usize, data: &Dataset) -> Result<()> {
    if preds != data.len() {
        return Err(Error::DimensionMismatch { expected: data.len(), got: preds });
    }
    Ok(())
}

/// The config with its training horizon resolved; `T` of the report counts
/// evaluated rounds, which differ from it for statistical runs.
fn config_value(cfg: &PipelineConfig, binary: bool) -> Result<serde_json::Value> {
    let horizon = if binary { cfg.binary_horizon() } else { cfg.multiclass_horizon() };
    let resolved = PipelineConfig { horizon: Some(horizon), ..cfg.clone() };
    Ok(serde_json::to_value(resolved)?)
}

/// Metrics for scalar predictions in [0, 1].
pub fn evaluate_binary(
    track: &str,
    cfg: &PipelineConfig,
    preds: &[f64],
    data: &Dataset,
    benchmark: &[LinearComparator],
    sets: Vec<SetDiagnostics>,
) -> Result<MetricsReport> {
    check_lengths(preds.len(), data)?;
    data.check_labels(2)?;
    let grid = binary_grid(cfg.eps)?;
    let labels = data.binary_labels();
    let ma = binary_multiaccuracy(preds, &labels, &data.xs);
    let mut losses = BTreeMap::new();
    for loss in binary_losses(cfg)? {
        losses.insert(loss.id(), binary_loss_metrics(loss.as_ref(), preds, &labels, &data.xs, benchmark, ma));
    }
    let max_gap = losses.values().map(|m| m.gap).fold(f64::NEG_INFINITY, f64::max);
    Ok(MetricsReport {
        track: track.into(),
        horizon: preds.len(),
        seed: cfg.seed,
        k: 2,
        eps: cfg.eps,
        thresh_cal: Some(thresh_calibration(&grid, preds, &labels)),
        linf_cal: None,
        calibration_abs: thresh_calibration_abs(&grid, preds, &labels),
        multiaccuracy: ma,
        family_multiaccuracy: BTreeMap::new(),
        losses,
        max_gap,
        theorem_budget: budget_multiplier(track) * cfg.eps,
        sets,
        config: config_value(cfg, true)?,
    })
}

/// Metrics for net-index predictions.
pub fn evaluate_multiclass(
    track: &str,
    cfg: &PipelineConfig,
    net: &SimplexNet,
    preds: &[usize],
    data: &Dataset,
    benchmark: &[LinearComparator],
    sets: Vec<SetDiagnostics>,
) -> Result<MetricsReport> {
    check_lengths(preds.len(), data)?;
    data.check_labels(net.k())?;
    if let Some(&s) = preds.iter().find(|&&s| s >= net.len()) {
        return Err(Error::Invalid(format!("prediction index {s} outside the net of size {}", net.len())));
    }
    let mut family_ma = BTreeMap::new();
    for &map in &cfg.families {
        let feats: Vec<Vec<f64>> = data.xs.iter().map(|x| map.apply(x)).collect();
        family_ma.insert(map.name().to_string(), linear_multiaccuracy(net, preds, &data.labels, &feats));
    }
    let ma = family_ma.values().cloned().fold(0.0, f64::max);
    let mut losses = BTreeMap::new();
    for loss in multiclass_losses(cfg)? {
        let m = multiclass_loss_metrics(loss.as_ref(), net, preds, &data.labels, &data.xs, benchmark, ma);
        losses.insert(loss.id().to_string(), m);
    }
    let max_gap = losses.values().map(|m| m.gap).fold(f64::NEG_INFINITY, f64::max);
    let linf = linf_calibration(net, preds, &data.labels);
    Ok(MetricsReport {
        track: track.into(),
        horizon: preds.len(),
        seed: cfg.seed,
        k: net.k(),
        eps: cfg.eps,
        thresh_cal: None,
        linf_cal: Some(linf),
        calibration_abs: linf,
        multiaccuracy: ma,
        family_multiaccuracy: family_ma,
        losses,
        max_gap,
        theorem_budget: budget_multiplier(track) * cfg.eps,
        sets,
        config: config_value(cfg, false)?,
    })
}
