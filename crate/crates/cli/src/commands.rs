//! Subcommands other than pipeline runs.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::PathBuf;

use clap::Args;
use omnipred::approach::RoundRecord;
use omnipred::counterexamples::{demo_mloo_impossibility, random_actions, verify_isotonic_counterexample};
use omnipred::datagen::{generate, write_csv, StreamKind, StreamSpec};
use omnipred::eval::{thresh_calibration, MetricsReport};
use omnipred::omni::{
    binary_benchmark, binary_grid, evaluate_binary, evaluate_multiclass, multiclass_benchmark, run_binary_online,
    Dataset, PipelineConfig,
};
use omnipred::oracles::multiclass::{BroadcastAdjoint, IdentityAdjoint};
use omnipred::oracles::{
    binary_cmloo, binary_payoff, mloo_payoff, multiclass_mloo, solve_matrix_game, BinaryOracleInput, GameMatrix,
};
use omnipred::{Rng, SimplexNet};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::config_error;
use crate::run::TraceHeader;

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// JSONL trace written by a run with --trace
    #[arg(long)]
    pub trace: PathBuf,
    /// write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Recomputes the metrics of an online run from its trace. Set diagnostics
/// need learner state and are left empty.
pub fn eval(args: &EvalArgs) -> anyhow::Result<MetricsReport> {
    let file =
        File::open(&args.trace).map_err(|e| config_error(format!("cannot read {}: {e}", args.trace.display())))?;
    let mut lines = BufReader::new(file).lines();
    let header: TraceHeader = match lines.next() {
        Some(line) => serde_json::from_str(&line?).map_err(|e| config_error(format!("trace header: {e}")))?,
        None => return Err(config_error("empty trace")),
    };
    let (mut xs, mut labels, mut actions) = (Vec::new(), Vec::new(), Vec::new());
    for line in lines {
        let r: RoundRecord<Vec<f64>, usize> = serde_json::from_str(&line?)?;
        let a = r.action.ok_or_else(|| config_error(format!("round {} has no played action", r.t)))?;
        xs.push(r.context);
        labels.push(r.outcome);
        actions.push(a);
    }
    let data = Dataset::new(xs, labels)?;
    let cfg = &header.config;
    let report = if header.track.starts_with("binary") {
        let grid = binary_grid(cfg.eps)?;
        let preds: Vec<f64> = actions.iter().map(|&j| grid[j]).collect();
        evaluate_binary(&header.track, cfg, &preds, &data, &binary_benchmark(cfg, &data)?, vec![])?
    } else {
        let net = SimplexNet::with_cap(cfg.k, cfg.eps, cfg.net_cap)?;
        evaluate_multiclass(&header.track, cfg, &net, &actions, &data, &multiclass_benchmark(cfg, &data)?, vec![])?
    };
    Ok(report)
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long, default_value = "softmax-linear")]
    pub kind: StreamKind,
    #[arg(long, default_value_t = 5)]
    pub d: usize,
    /// classes; inferred from --q for fixed-marginal streams
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "T", default_value_t = 1000)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// label marginal for fixed-marginal streams, comma-separated
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,
    /// row norm of the drawn ground truth
    #[arg(long)]
    pub signal: Option<f64>,
    /// output CSV; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn gen(args: &GenArgs) -> anyhow::Result<()> {
    let k = match (args.k, &args.q, args.kind) {
        (Some(k), _, _) => k,
        (None, Some(q), _) => q.len(),
        (None, None, StreamKind::SoftmaxLinear) => 3,
        (None, None, _) => 2,
    };
    let mut spec = StreamSpec::new(args.kind, args.d, k, args.horizon, args.seed);
    spec.marginal = args.q.clone();
    if let Some(s) = args.signal {
        spec.signal = s;
    }
    let stream = generate(&spec)?;
    match &args.out {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| config_error(format!("cannot create {}: {e}", path.display())))?;
            write_csv(&stream.xs, &stream.labels, file)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_csv(&stream.xs, &stream.labels, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

/// One line of the verification report.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn binary_oracle_suite(rng: &mut Rng) -> Check {
    let grid = binary_grid(0.05).expect("valid eps");
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..2000 {
        let q = rng.uniform();
        let mut u: Vec<f64> = (0..grid.len()).map(|_| rng.uniform()).collect();
        let z: f64 = u.iter().sum();
        u.iter_mut().for_each(|v| *v /= z);
        let input = BinaryOracleInput { q, r: 1.0 - q, u, d: 2.0 * rng.uniform() - 1.0 };
        let Ok(a) = binary_cmloo(&input, &grid) else {
            return Check { name: "binary oracle", pass: false, detail: "oracle error".into() };
        };
        let h = input.h(&grid);
        for b in [0.0, 1.0] {
            worst = worst.max(binary_payoff(&h, &grid, &a, b));
        }
    }
    Check {
        name: "binary oracle",
        pass: worst <= 0.05 + 1e-12,
        detail: format!("2000 inputs, max payoff {worst:.5}, margin {:.5}", 0.05 - worst),
    }
}

fn multiclass_oracle_suite(rng: &mut Rng) -> Check {
    let mut worst = f64::NEG_INFINITY;
    for (k, eps) in [(2usize, 0.1), (3, 0.5), (4, 1.0)] {
        let net = SimplexNet::new(k, eps).expect("valid net");
        for _ in 0..200 {
            let w = rng.uniform();
            let u1: Vec<f64> = (0..k * net.len()).map(|_| 2.0 * rng.uniform() - 1.0).collect();
            let u2: Vec<f64> = (0..k).map(|_| 2.0 * rng.uniform() - 1.0).collect();
            let Ok(out) =
                multiclass_mloo(&[w, 1.0 - w], &[&IdentityAdjoint(&u1), &BroadcastAdjoint(&u2)], &net, 1.0, net.eps())
            else {
                return Check { name: "multiclass oracle", pass: false, detail: "oracle error".into() };
            };
            let f: Vec<f64> = (0..k * net.len()).map(|i| w * u1[i] + (1.0 - w) * u2[i % k]).collect();
            for j in 0..k {
                worst = worst.max(mloo_payoff(&f, &net, &out.mixture, j) - 2.0 * net.eps() - out.gap);
            }
        }
    }
    Check {
        name: "multiclass oracle",
        pass: worst <= 1e-12,
        detail: format!("600 inputs, k in 2..=4, max payoff − (2ε + gap) = {worst:.5}"),
    }
}

fn game_solver_suite(rng: &mut Rng) -> Check {
    let mut worst_gap = 0.0f64;
    let mut consistent = true;
    for i in 0..100 {
        let rows = 1 + i % 4;
        let cols = 1 + rng.below(50);
        let data: Vec<f64> = (0..rows * cols).map(|_| 2.0 * rng.uniform() - 1.0).collect();
        let m = GameMatrix::new(rows, cols, data).expect("sized");
        let Ok(sol) = solve_matrix_game(&m, 0.01) else {
            return Check { name: "game solver", pass: false, detail: "solver error".into() };
        };
        worst_gap = worst_gap.max(sol.gap());
        consistent &= (m.primal(&sol.a) - sol.value).abs() <= 1e-12;
    }
    Check {
        name: "game solver",
        pass: worst_gap <= 0.01 && consistent,
        detail: format!("100 matrices up to 4×50, max certificate gap {worst_gap:.5} (eps 0.01)"),
    }
}

fn impossibility_suite(rng: &mut Rng) -> Check {
    let mut worst_sum = 0.0f64;
    let mut min_max = f64::INFINITY;
    let mut worst_solo = 0.0f64;
    for _ in 0..100 {
        let horizon = 1 + rng.below(500);
        match demo_mloo_impossibility(&random_actions(horizon, rng)) {
            Ok(r) => {
                worst_sum = worst_sum.max((r.sum - 1.0).abs());
                min_max = min_max.min(r.max);
                worst_solo = worst_solo.max(r.solo[0].max(r.solo[1]));
            }
            Err(e) => return Check { name: "joint approachability", pass: false, detail: e.to_string() },
        }
    }
    Check {
        name: "joint approachability",
        pass: worst_sum <= 1e-12 && min_max >= 0.5 && worst_solo < 1e-3,
        detail: format!(
            "100 sequences: max |sum − 1| {worst_sum:.1e}, min max {min_max:.4}, max solo payoff {worst_solo:.1e}"
        ),
    }
}

fn isotonic_suite() -> Check {
    match verify_isotonic_counterexample(1e-6, 1e-3) {
        Ok(v) => Check {
            name: "isotonic loss dependence",
            pass: v.passed,
            detail: format!(
                "squared minimizer error {:.1e}, t_sq {:.8}, t_log {:.8}, separation {:.5}, candidate improvement {:.5}",
                v.squared_error, v.squared_t, v.log_t, v.separation, v.candidate_improvement
            ),
        },
        Err(e) => Check { name: "isotonic loss dependence", pass: false, detail: e.to_string() },
    }
}

pub fn verify(seed: u64) -> Vec<Check> {
    let mut rng = Rng::new(seed);
    vec![
        impossibility_suite(&mut rng),
        isotonic_suite(),
        binary_oracle_suite(&mut rng),
        multiclass_oracle_suite(&mut rng),
        game_solver_suite(&mut rng),
    ]
}

#[derive(Debug, Clone, Args)]
pub struct RatesArgs {
    #[arg(long, default_value_t = 20)]
    pub seeds: usize,
    /// shorter horizon; the study also runs twice this
    #[arg(long = "T", default_value_t = 10_000)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 5)]
    pub d: usize,
    /// data seed of seed index 0; index i uses data_seed + i
    #[arg(long, default_value_t = 3000)]
    pub data_seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// per-seed CSV (seed, T, thresh_cal)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateStudy {
    #[serde(rename = "T")]
    pub horizon: usize,
    pub seeds: usize,
    pub median_short: f64,
    pub median_long: f64,
    /// median at 2T over median at T
    pub ratio: f64,
    pub target: [f64; 2],
    pub within_target: bool,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Threshold calibration of the binary online pipeline at T and 2T on one
/// logistic stream per seed; the T run uses the stream's prefix.
pub fn rates(args: &RatesArgs) -> anyhow::Result<RateStudy> {
    if args.seeds == 0 || args.horizon == 0 || args.workers == 0 {
        return Err(config_error("seeds, T and workers must be positive"));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.workers).build()?;
    let long = 2 * args.horizon;
    let rows: Vec<(f64, f64)> = pool.install(|| {
        (0..args.seeds)
            .into_par_iter()
            .map(|i| -> anyhow::Result<(f64, f64)> {
                let spec = StreamSpec::new(StreamKind::LogisticBinary, args.d, 2, long, args.data_seed + i as u64);
                let data: Dataset = generate(&spec)?.into();
                let mut out = [0.0; 2];
                for (slot, horizon) in out.iter_mut().zip([args.horizon, long]) {
                    let cfg =
                        PipelineConfig { eps: args.eps, horizon: Some(horizon), seed: i as u64, ..Default::default() };
                    let run = run_binary_online(&data, &cfg)?;
                    let labels: Vec<u8> = data.labels[..horizon].iter().map(|&y| y as u8).collect();
                    *slot = thresh_calibration(&run.grid, &run.preds, &labels);
                }
                Ok((out[0], out[1]))
            })
            .collect::<anyhow::Result<_>>()
    })?;
    if let Some(path) = &args.out {
        let mut csv = String::from("seed,T,thresh_cal\n");
        for (i, (a, b)) in rows.iter().enumerate() {
            csv.push_str(&format!("{i},{},{a}\n{i},{long},{b}\n", args.horizon));
        }
        std::fs::write(path, csv).map_err(|e| config_error(format!("cannot write {}: {e}", path.display())))?;
    }
    let median_short = median(rows.iter().map(|r| r.0).collect());
    let median_long = median(rows.iter().map(|r| r.1).collect());
    let ratio = median_long / median_short;
    let target = [0.5, 0.95];
    Ok(RateStudy {
        horizon: args.horizon,
        seeds: args.seeds,
        median_short,
        median_long,
        ratio,
        target,
        within_target: ratio >= target[0] && ratio <= target[1],
    })
}
