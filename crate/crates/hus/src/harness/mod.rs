//! Experiment orchestration: perturbed candidates from exact seeds,
//! sampled sup-norms, and the full verification battery behind a
//! machine-readable report.

mod config;
mod experiment;
mod grid;
mod perturb;

pub use config::{
    ComplexSpec, EvalWindow, ExactSolutionSpec, ExperimentConfig, ForcingSpec, ScalarSeed,
};
pub use experiment::{
    make_candidate, run_experiment, BoundCheck, CorrectionSummary, ReportLimits,
    VerificationReport, WallTimes,
};
pub use grid::{estimate_sup_norm, try_estimate_sup_norm, AxisSpec, SampleGrid, SupEstimate};
pub use perturb::{build_perturbation, Perturbation, PerturbationShape, PerturbationSpec};
