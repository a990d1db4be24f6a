//! The stability construction: measuring a candidate's defect and
//! correcting the candidate to the exact solution the defect bounds.

mod along_flow;
mod curve;
mod problem;
pub(crate) mod residual;

pub use along_flow::{check_flow_compatibility, correct_along_flow};
pub use curve::{correct_curve, CurveCorrection};
pub use problem::{hus_bound, CandidateSolution, CorrectionResult, StabilityProblem};
pub use residual::residual_field;
