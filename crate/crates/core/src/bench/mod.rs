//! Synthetic workloads, accuracy metrics and wall-clock sweeps comparing
//! the two sketchers.

mod harness;
mod metrics;
mod synthetic;

pub use harness::{
    defined, median, nnz_trend, run_sweep, spearman, timed_run, timed_sketch, BenchPlan, Cell,
    MetricsRow, Sweep, TrendReport,
};
pub use metrics::{
    cov_err, exact_tail, exact_tail_dense, exact_tail_randomized, proj_err, residual_energy,
    Evaluator, Tail, COV_ERR_ITERATIONS, DENSE_TAIL_MAX_D, TAIL_MAX_SWEEPS, UNDEFINED_TAIL_REL,
};
pub use synthetic::{SyntheticRows, SyntheticSpec};
