//! Problem statement and solution-candidate types for the stability
//! equation `Vy = lambda y + f` along a vector field `V`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::VectorField;
use crate::numerics::{central_jacobian, DampedQuadPlan};
use crate::types::{CVec, Norm, PointFn, TryPointFn};

/// The equation data: a field, a spectral parameter with nonzero real
/// part, a forcing term, and the norm used for every sup-norm estimate.
#[derive(Clone)]
pub struct StabilityProblem {
    field: VectorField,
    lambda: Complex64,
    forcing: PointFn,
    norm: Norm,
}

impl StabilityProblem {
    /// Rejects `lambda` on the imaginary axis: the stability constant
    /// `1 / |Re lambda|` would be infinite and the damped correction
    /// integral has no decaying direction.
    pub fn new(
        field: VectorField,
        lambda: Complex64,
        forcing: PointFn,
        norm: Norm,
    ) -> Result<StabilityProblem> {
        if lambda.re == 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidLambda { lambda });
        }
        Ok(StabilityProblem {
            field,
            lambda,
            forcing,
            norm,
        })
    }

    pub fn field(&self) -> &VectorField {
        &self.field
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn forcing(&self) -> &PointFn {
        &self.forcing
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    /// Direction of the correction window: +1 integrates forward along the
    /// flow, -1 backward.
    pub fn omega_sign(&self) -> f64 {
        self.lambda.re.signum()
    }
}

impl std::fmt::Debug for StabilityProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StabilityProblem")
            .field("field", &self.field)
            .field("lambda", &self.lambda)
            .field("norm", &self.norm)
            .finish()
    }
}

/// An approximate solution `y`, optionally with an analytic Jacobian
/// (rows: output component, columns: coordinate direction).
#[derive(Clone)]
pub struct CandidateSolution {
    value: PointFn,
    gradient: Option<std::sync::Arc<dyn Fn(&[f64]) -> Vec<CVec> + Send + Sync>>,
}

impl CandidateSolution {
    pub fn new(value: PointFn) -> CandidateSolution {
        CandidateSolution {
            value,
            gradient: None,
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&[f64]) -> Vec<CVec> + Send + Sync + 'static,
    ) -> CandidateSolution {
        self.gradient = Some(std::sync::Arc::new(gradient));
        self
    }

    pub fn value(&self) -> &PointFn {
        &self.value
    }

    pub fn eval(&self, x: &[f64]) -> CVec {
        (self.value)(x)
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn gradient_at(&self, x: &[f64]) -> Option<Vec<CVec>> {
        self.gradient.as_ref().map(|g| g(x))
    }

    /// Cross-checks the declared Jacobian against central differences at
    /// the given points; a disagreement above `tol_abs` means the analytic
    /// gradient cannot be trusted for residual evaluation.
    pub fn verify_gradient(&self, points: &[Vec<f64>], tol_abs: f64) -> Result<()> {
        let Some(grad) = &self.gradient else {
            return Ok(());
        };
        for x in points {
            let numeric = central_jacobian(&|p: &[f64]| (self.value)(p), x, 1e-6);
            let claimed = grad(x);
            if claimed.len() != numeric.len() {
                return Err(Error::Validation(format!(
                    "gradient has {} rows but the value has {} components",
                    claimed.len(),
                    numeric.len()
                )));
            }
            for (i, (crow, nrow)) in claimed.iter().zip(&numeric).enumerate() {
                for (j, (c, n)) in crow.iter().zip(nrow).enumerate() {
                    if (c - n).norm() > tol_abs {
                        return Err(Error::Validation(format!(
                            "gradient entry ({i}, {j}) at {x:?} disagrees with \
                             central differences by {:.3e} (allowed {tol_abs:.0e})",
                            (c - n).norm()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

impl std::fmt::Debug for CandidateSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CandidateSolution")
            .field("has_gradient", &self.has_gradient())
            .finish()
    }
}

/// Output of the flow correction: the exact solution as a lazy function,
/// the measured defect, and the stability bound it induces.
#[derive(Clone)]
pub struct CorrectionResult {
    /// The corrected solution `z`, evaluable at any domain point.
    pub corrected: TryPointFn,
    /// Estimated sup of the candidate's defect over the sample set.
    pub epsilon_measured: f64,
    /// `epsilon_measured / |Re lambda|`.
    pub bound: f64,
    /// Estimated sup of `|y - z|` over the evaluation points.
    pub distance_measured: f64,
    /// +1 when the correction integrates forward along the flow, -1
    /// backward.
    pub omega_sign: f64,
    /// Frozen quadrature layout shared by every evaluation of `corrected`.
    pub plan: DampedQuadPlan,
}

impl std::fmt::Debug for CorrectionResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CorrectionResult")
            .field("epsilon_measured", &self.epsilon_measured)
            .field("bound", &self.bound)
            .field("distance_measured", &self.distance_measured)
            .field("omega_sign", &self.omega_sign)
            .field("plan", &self.plan)
            .finish()
    }
}

/// The stability constant applied to a defect size: `epsilon / |Re lambda|`.
pub fn hus_bound(epsilon: f64, lambda: Complex64) -> Result<f64> {
    if lambda.re == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidLambda { lambda });
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidParams(format!(
            "defect size must be nonnegative, got {epsilon}"
        )));
    }
    Ok(epsilon / lambda.re.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{catalog_field, FieldSpec};
    use crate::types::complexify;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn any_field() -> VectorField {
        catalog_field(&FieldSpec::Rotation { rates: vec![1.0] }).unwrap()
    }

    fn zero_forcing() -> PointFn {
        Arc::new(|_: &[f64]| vec![Complex64::new(0.0, 0.0)])
    }

    #[test]
    fn imaginary_axis_lambda_is_rejected() {
        let err = StabilityProblem::new(
            any_field(),
            Complex64::new(0.0, 1.0),
            zero_forcing(),
            Norm::MaxModulus,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidLambda { .. }));
    }

    #[test]
    fn omega_sign_follows_the_real_part() {
        let p = |re: f64| {
            StabilityProblem::new(
                any_field(),
                Complex64::new(re, 0.3),
                zero_forcing(),
                Norm::MaxModulus,
            )
            .unwrap()
        };
        assert_eq!(p(2.0).omega_sign(), 1.0);
        assert_eq!(p(-0.5).omega_sign(), -1.0);
    }

    #[test]
    fn bound_matches_hand_values() {
        assert_eq!(hus_bound(0.0, Complex64::new(1.0, 0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(
            hus_bound(0.1, Complex64::new(2.0, 1.0)).unwrap(),
            0.05,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            hus_bound(1.0, Complex64::new(-0.5, 0.0)).unwrap(),
            2.0,
            epsilon = 1e-15
        );
        assert!(hus_bound(1.0, Complex64::new(0.0, 2.0)).is_err());
        assert!(hus_bound(-1.0, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn correct_gradient_passes_verification() {
        let y = CandidateSolution::new(Arc::new(|x: &[f64]| {
            vec![Complex64::new(x[0] * x[0], 0.0)]
        }))
        .with_gradient(|x: &[f64]| vec![vec![Complex64::new(2.0 * x[0], 0.0), Complex64::new(0.0, 0.0)]]);
        y.verify_gradient(&[vec![0.5, 1.0], vec![-1.0, 2.0]], 1e-4)
            .unwrap();
    }

    #[test]
    fn wrong_gradient_fails_verification() {
        let y = CandidateSolution::new(Arc::new(|x: &[f64]| complexify(&[x[0] * x[0]])))
            .with_gradient(|x: &[f64]| vec![vec![Complex64::new(3.0 * x[0], 0.0)]]);
        let err = y.verify_gradient(&[vec![1.0]], 1e-4).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }
}
