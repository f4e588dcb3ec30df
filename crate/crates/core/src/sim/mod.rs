//! Agent-based Monte Carlo: synthetic applicant pools, shortlisting
//! policies, the hiring agent and the grid benchmark.

mod bench;
mod policy;
mod pool;

pub use bench::{
    bootstrap_ci, bootstrap_ci_with, replication_stream, run_benchmark, stream_rng, Benchmark, BenchmarkReport,
    BenchmarkSpec, Interval, PolicyReport, QualityModel, SkippedCell,
};
pub use policy::{hire, shortlist, Policy, PolicyKind, Shortlist};
pub use pool::{gen_pool, gen_true_quality, sample_pool, symmetric_sqrt, Applicant, PoolSpec};
