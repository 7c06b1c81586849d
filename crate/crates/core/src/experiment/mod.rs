//! Experiment configs, chain files and the command implementations behind the
//! `abcmu` binary.

mod analyze;
mod config;
mod csvio;
mod oracle;
mod reproduce;
mod run;

pub use analyze::{
    analyze_files, cmd_analyze, collect_chain_files, heat_csv, marginal_csv, AnalysisReport,
};
pub use config::{
    Experiment, ExperimentConfig, KernelConfig, OutputConfig, PredictiveConfig, SamplerKind, Tau,
};
pub use csvio::{
    fmt_f64, parse_chain_csv, read_chain_csv, render_chain_csv, write_atomic, ChainFile, ChainRow,
    VERSION,
};
pub use oracle::{cmd_oracle, parse_real, CURVE_TAUS, ORACLE_NAMES};
pub use reproduce::{
    appendix_rejection, cmd_reproduce, mcmc_preset, Claim, Manifest, Verdict, DEFAULT_SEED,
    FIG6_TAUS, FIGURES,
};
pub use run::{
    cmd_run, execute, resolve_out_dir, run_config, RunOptions, RunOutput, RunSummary, DATA_DIR_ENV,
};

use crate::error::AbcError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_CLAIM: i32 = 4;

/// Process exit code for an error.
pub fn exit_code(err: &AbcError) -> i32 {
    match err {
        AbcError::BudgetExhausted { .. } => EXIT_BUDGET,
        AbcError::NumericalFault { .. } | AbcError::InvariantBreach(_) | AbcError::Io(_) => {
            EXIT_INTERNAL
        }
        AbcError::Input(_)
        | AbcError::Config(_)
        | AbcError::InsufficientSample(_)
        | AbcError::DegenerateWeights(_) => EXIT_INPUT,
    }
}
