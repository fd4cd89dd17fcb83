//! Seeded end-to-end runs of the omniprediction pipelines.

use omnipred::datagen::{generate, Source, StreamKind, StreamSpec};
use omnipred::eval::FeatureMap;
use omnipred::omni::{
    fit_online_binary, fit_online_multiclass, fit_statistical_binary, fit_statistical_multiclass, fit_union, Dataset,
    PipelineConfig,
};
use omnipred::Rng;

fn logistic(horizon: usize, seed: u64) -> Dataset {
    generate(&StreamSpec::new(StreamKind::LogisticBinary, 4, 2, horizon, seed)).unwrap().into()
}

fn softmax(k: usize, horizon: usize, seed: u64) -> Dataset {
    generate(&StreamSpec::new(StreamKind::SoftmaxLinear, 4, k, horizon, seed)).unwrap().into()
}

#[test]
fn two_class_multiclass_agrees_with_binary() {
    let data = logistic(5000, 11);
    let bin_cfg = PipelineConfig { eps: 0.1, horizon: Some(5000), seed: 1, ..Default::default() };
    let multi_cfg = PipelineConfig { k: 2, ..bin_cfg.clone() };
    let (b, _) = fit_online_binary(&data, &bin_cfg).unwrap();
    let (m, _) = fit_online_multiclass(&data, &multi_cfg).unwrap();
    // class-1 probability of each prediction
    let pb: Vec<f64> = b.preds.clone();
    let pm: Vec<f64> = m.preds.iter().map(|&s| m.net.point(s)[1]).collect();
    let ys: Vec<f64> = data.labels.iter().map(|&y| y as f64).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let brier = |p: &[f64]| p.iter().zip(&ys).map(|(a, y)| (a - y).powi(2)).sum::<f64>() / p.len() as f64;
    assert!((mean(&pb) - mean(&pm)).abs() < 0.05, "{} vs {}", mean(&pb), mean(&pm));
    assert!((brier(&pb) - brier(&pm)).abs() < 0.05, "{} vs {}", brier(&pb), brier(&pm));
}

#[test]
fn two_class_sets_within_theoretical_bounds() {
    let data = softmax(2, 5000, 12);
    let cfg = PipelineConfig { k: 2, eps: 0.2, horizon: Some(5000), seed: 2, ..Default::default() };
    let (run, report) = fit_online_multiclass(&data, &cfg).unwrap();
    assert_eq!(run.sets.len(), 2);
    for s in &report.sets {
        assert!(s.sup_average <= s.theoretical_bound, "{}: {} > {}", s.id, s.sup_average, s.theoretical_bound);
    }
}

#[test]
fn union_of_two_families_within_budget() {
    let data = softmax(3, 4000, 13);
    let cfg = PipelineConfig {
        k: 3,
        eps: 0.25,
        horizon: Some(4000),
        families: vec![FeatureMap::Identity, FeatureMap::Square],
        seed: 3,
        ..Default::default()
    };
    let (run, report) = fit_union(&data, &cfg).unwrap();
    assert_eq!(run.sets.len(), 3);
    assert_eq!(report.family_multiaccuracy.len(), 2);
    assert!(report.max_gap <= report.theorem_budget, "{} > {}", report.max_gap, report.theorem_budget);
    assert!(report.worst_decomposition_slack() >= -1e-9);
}

#[test]
fn duplicated_family_changes_little() {
    let data = softmax(3, 3000, 14);
    let one = PipelineConfig { k: 3, eps: 0.25, horizon: Some(3000), seed: 4, ..Default::default() };
    let two = PipelineConfig { families: vec![FeatureMap::Identity, FeatureMap::Identity], ..one.clone() };
    let (_, a) = fit_union(&data, &one).unwrap();
    let (_, b) = fit_union(&data, &two).unwrap();
    assert!((a.linf_cal.unwrap() - b.linf_cal.unwrap()).abs() < 0.1);
    assert!((a.multiaccuracy - b.multiaccuracy).abs() < 0.05);
    assert!((a.max_gap - b.max_gap).abs() < 0.05);
}

#[test]
fn same_seed_same_report() {
    let data = softmax(3, 500, 15);
    let cfg = PipelineConfig { k: 3, eps: 0.5, horizon: Some(500), seed: 5, ..Default::default() };
    let (_, a) = fit_online_multiclass(&data, &cfg).unwrap();
    let (_, b) = fit_online_multiclass(&data, &cfg).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn statistical_predictor_is_honest() {
    let spec = StreamSpec::new(StreamKind::SoftmaxLinear, 3, 3, 0, 16);
    let cfg = PipelineConfig { k: 3, eps: 0.5, horizon: Some(300), seed: 6, ..Default::default() };
    let pred = fit_statistical_multiclass(Source::new(spec).unwrap(), &cfg).unwrap();
    let x = vec![0.3, -0.2, 0.4];
    // exact mean: uniform round, then that round's mixture
    let mut exact = vec![0.0; 3];
    for t in 0..pred.horizon() {
        for (s, w) in pred.mixture_at(t, &x).unwrap() {
            for (e, p) in exact.iter_mut().zip(pred.point(s)) {
                *e += w * p / pred.horizon() as f64;
            }
        }
    }
    let n = 4000;
    let mut rng = Rng::new(99);
    let mut mean = [0.0; 3];
    for _ in 0..n {
        let s = pred.predict_with(&x, &mut rng).unwrap();
        for (m, p) in mean.iter_mut().zip(pred.point(s)) {
            *m += p / n as f64;
        }
    }
    for (m, e) in mean.iter().zip(&exact) {
        assert!((m - e).abs() <= 3.0 / (n as f64).sqrt(), "{m} vs {e}");
    }
}

#[test]
fn statistical_binary_generalizes() {
    let spec = StreamSpec::new(StreamKind::LogisticBinary, 3, 2, 0, 17);
    let cfg = PipelineConfig { eps: 0.2, horizon: Some(2000), seed: 7, ..Default::default() };
    let mut source = Source::new(spec).unwrap();
    let mut pred = fit_statistical_binary(source.by_ref(), &cfg).unwrap();
    let (xs, labels): (Vec<_>, Vec<_>) = source.take(3000).unzip();
    let holdout = Dataset::new(xs, labels).unwrap();
    let report = pred.evaluate(&holdout, &cfg).unwrap();
    assert_eq!(report.track, "binary-stat");
    assert!(report.thresh_cal.unwrap() <= 0.2, "{}", report.thresh_cal.unwrap());
    assert!(report.max_gap <= report.theorem_budget);
}
