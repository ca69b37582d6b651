//! Reproducible experiments: convergence-rate sweeps, the conformal-bump
//! toy, lattice flatness suites, hypothesis audits, and CSV/JSON reporting.
//!
//! A config plus a seed fully determines every output byte: sampling is
//! ChaCha8-seeded, parallel maps preserve index order, and all writers are
//! deterministic.

mod config;
mod experiments;
mod ratefit;
mod report;

pub use config::{
    CentersPolicy, ExperimentKind, RadiiPolicy, RunConfig, SamplerConfig, SectionalConfig,
};
pub use experiments::{
    baseline_lattice, run_bump_experiment, run_flatness_suite, run_hypothesis_audit,
    run_sectional_experiment, BumpLevel, BumpOutcome, CenterStat, DimFlatness, FlatnessReport,
    HarnessError, HypothesisSeries, SectionalCenter, SectionalOutcome, SectionalRecord,
};
pub use ratefit::{
    envelope_coverage, fit_envelope, fit_loglog_slope, median, LevelStat, RateFit,
};
pub use report::{read_csv, report, write_csv, write_gnuplot, write_json, ReportPaths, CSV_HEADER};

use std::sync::OnceLock;

/// Thread cap from `COUNTCURV_THREADS` (0 or unset leaves rayon's default).
pub fn thread_cap() -> usize {
    static CAP: OnceLock<usize> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var("COUNTCURV_THREADS")
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .unwrap_or(0)
    })
}

fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut builder = rayon::ThreadPoolBuilder::new();
        let cap = thread_cap();
        if cap > 0 {
            builder = builder.num_threads(cap);
        }
        builder.build().expect("thread pool")
    })
}

/// Parallel map with deterministic output order (index-stable), honouring
/// the `COUNTCURV_THREADS` cap.
pub fn maybe_par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    if items.len() < 2 || thread_cap() == 1 {
        return items.iter().map(f).collect();
    }
    pool().install(|| items.par_iter().map(f).collect())
}
