//! End-to-end omnipredictors: binary and multiclass, online and statistical,
//! and unions of comparator families.
//!
//! Every pipeline runs the approachability driver with one calibration set
//! and one multiaccuracy set per comparator family. The oracle mixes their
//! adjoints, so adding a family only adds a set.

mod config;
mod oracle;
mod pipelines;
mod report;
mod sets;
mod stat;

pub use config::{binary_grid, Dataset, PipelineConfig};
pub use oracle::{BinaryOracle, MulticlassOracle};
pub use pipelines::{
    fit_online_binary, fit_online_multiclass, fit_statistical_binary, fit_statistical_multiclass, fit_union,
    run_binary_online, run_multiclass_online, BinaryRun, MulticlassRun, Trace,
};
pub use report::{binary_benchmark, evaluate_binary, evaluate_multiclass, multiclass_benchmark};
pub use sets::{BinaryLinearSet, BoxCalibrationSet, LinearFamilySet, ThresholdCalibrationSet};
pub use stat::{StatOracle, StatPredictor};
