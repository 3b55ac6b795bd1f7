//! Configuration files, experiment runs, the verify suite and report
//! artifacts (`report.txt`, `summary.csv`, `trajectory.jsonl`, `*.svg`).

mod config;
mod run;
pub mod svg;
mod verify;

pub use config::{
    AverageParams, DegreeParams, Experiment, ExperimentConfig, ExperimentKind, FieldSpec,
    OrbitParams, PshParams, DEFAULT_OUTPUT,
};
pub use run::{run, run_verify, Entry, RunReport};
pub use verify::{
    gradient_fd_error, planted_targets, verify_suite, Check, Corpus, CorpusField, SuiteReport,
    SuiteSizes, Well, CROSS, HARMONIC, PERTURBED_A, PERTURBED_B, QUARTIC, ROUND,
};
