//! Configuration-driven experiments for Helmholtz machines: representation
//! probes, replication of small train sets, ten-machine generated datasets
//! and the architecture sweep, with CSV/PGM report output.

pub mod config;
pub mod data;
pub mod error;
pub mod experiments;
pub mod report;
pub mod sampling;

pub use config::{ExperimentConfig, ExperimentKind, InitKind};
pub use error::{ExpError, Result};
pub use experiments::{
    dry_run, run, run_multi_dataset_experiment, run_probe_experiment, run_replication_experiment,
    run_ten_machine_experiment, run_transcend_experiment,
};
pub use report::{emit_report, Report, Row};
pub use sampling::{sample_random_architecture, ArchConstraints};

/// Runs `f` on a dedicated pool of `threads` workers (all cores when 0).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> std::result::Result<R, String> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| e.to_string())?;
    Ok(pool.install(f))
}
