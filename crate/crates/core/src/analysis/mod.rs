//! Verification statistics: staircase-path and translation invariance,
//! modulus-of-continuity tails, convergence studies and the fixed-time
//! slice diagnostic.

mod convergence;
mod gibbs;
mod invariance;
mod modulus;
mod path;
pub mod stats;
pub mod suite;

pub use convergence::{convergence_study, ConvergenceRow, ConvergenceTable, Target, MONOTONE_SLACK};
pub use gibbs::{gibbs_slice_diagnostic, GibbsSliceReport, GibbsSliceSums};
pub use invariance::{
    chain_invariance_test, standard_paths, translation_invariance_test, Decision, EnsembleConfig,
    StatsReport, TestStatistic,
};
pub use modulus::{h_modulus, modulus_report, ModulusReport, TailCurve, DEFAULT_PAIRS};
pub use path::{extract_path, StaircasePath};
pub use suite::{run_suite, Check, Suite, SuiteConfig, SuiteReport};
