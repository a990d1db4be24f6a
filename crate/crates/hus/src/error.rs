//! Error types shared by all modules.

use num_complex::Complex64;
use thiserror::Error;

/// Pipeline stage labels used when wrapping errors from an experiment run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    BuildField,
    BuildProblem,
    BuildCandidate,
    Correct,
    Verify,
    WriteOutput,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::BuildField => "build-field",
            Stage::BuildProblem => "build-problem",
            Stage::BuildCandidate => "build-candidate",
            Stage::Correct => "correct",
            Stage::Verify => "verify",
            Stage::WriteOutput => "write-output",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    /// A trajectory left the declared coordinate domain. The field may not be
    /// complete on this domain, or the requested time window is too wide.
    #[error("trajectory left the domain at t = {time:.6e} near {point:?}")]
    DomainExit { time: f64, point: Vec<f64> },

    /// The adaptive step size collapsed below machine-representable scale,
    /// which signals blow-up or stiffness beyond the explicit solver.
    #[error("step size underflow at t = {time:.6e} (h = {step:.3e}); suspected blow-up or stiffness")]
    StepUnderflow { time: f64, step: f64 },

    /// The correction is only defined for Re(lambda) != 0.
    #[error("lambda = {lambda} has zero real part; the correction requires Re(lambda) != 0")]
    InvalidLambda { lambda: Complex64 },

    /// A sampled integrand magnitude exceeded the declared bound by more than
    /// 10%, invalidating the tail estimate of the improper integral.
    #[error("integrand magnitude {observed:.6e} at s = {at:.6e} exceeds the declared bound {bound:.6e}")]
    BoundViolated { at: f64, observed: f64, bound: f64 },

    #[error("invalid field parameters: {0}")]
    InvalidParams(String),

    #[error("invalid tolerances: {0}")]
    InvalidTolerances(String),

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("config validation error: {0}")]
    Validation(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Flow time at which an integration failure occurred, when the error
    /// carries one.
    pub fn time_of_failure(&self) -> Option<f64> {
        match self {
            Error::DomainExit { time, .. } | Error::StepUnderflow { time, .. } => Some(*time),
            Error::Stage { source, .. } => source.time_of_failure(),
            _ => None,
        }
    }

    pub fn in_stage(self, stage: Stage) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Process exit code: 2 for usage/parse/config problems, 3 for numerical
    /// failures. Verification failures (exit 1) are not errors and are decided
    /// from report verdicts by the caller.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DomainExit { .. }
            | Error::StepUnderflow { .. }
            | Error::BoundViolated { .. } => 3,
            Error::Stage { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
