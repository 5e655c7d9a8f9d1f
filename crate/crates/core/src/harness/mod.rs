//! Ensembles, distribution comparison, convergence and timing studies.

mod bench;
mod convergence;
mod ensemble;
mod stats;

pub use bench::{speedup_benchmark, BenchRow};
pub use convergence::{
    convergence_study, coupled_errors, ConvergenceOptions, ConvergenceRow, ConvergenceTable,
};
pub use ensemble::{
    run_ensemble, simulate_replicate, EngineKind, EngineSpec, EnsembleConfig, EnsembleResult, EnsembleStats,
    ReplicateFailure, SpeciesStats,
};
pub use stats::{
    histogram, histogram_with_edges, kolmogorov_survival, ks_one_sample, ks_two_sample, total_variation,
    Bins, Histogram, KsResult, StatsError,
};
