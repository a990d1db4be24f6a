//! The defect of a candidate solution: `alpha = Vy - lambda y - f`.
//!
//! `Vy` is a derivative along the flow, so it is computed either from the
//! candidate's analytic Jacobian contracted with the field, or by central
//! differences of `y` along short flow arcs. Correction integrals sample
//! `alpha` densely along one orbit; `OrbitAccess` backs those samples with
//! a single stored trajectory instead of one solve per sample.

use std::sync::Arc;

use crate::correction::problem::{CandidateSolution, StabilityProblem};
use crate::error::{Error, Result};
use crate::geometry::FlowMap;
use crate::numerics::{Tolerances, Trajectory};
use crate::types::{CVec, TryPointFn};

/// Point on the orbit of a fixed base point at signed flow time `s`.
///
/// `Direct` evaluates the flow per call (closed forms make that cheap);
/// `Dense` reads the stored dense output of one trajectory per time
/// direction, prepared up front to cover the whole sampling window.
pub(crate) enum OrbitAccess {
    Direct {
        flow: Arc<FlowMap>,
        base: Vec<f64>,
    },
    Dense {
        sign: f64,
        main: Arc<Trajectory>,
        spill: Arc<Trajectory>,
    },
}

impl OrbitAccess {
    /// Prepares coverage of `s in sign * [0, horizon]` plus a `pad`-sized
    /// overhang on both ends for finite-difference probes.
    pub(crate) fn prepare(
        flow: &Arc<FlowMap>,
        x: &[f64],
        sign: f64,
        horizon: f64,
        pad: f64,
    ) -> Result<OrbitAccess> {
        if flow.field().has_closed_form() {
            return Ok(OrbitAccess::Direct {
                flow: Arc::clone(flow),
                base: x.to_vec(),
            });
        }
        let main = flow.orbit(x, sign * (horizon + 2.0 * pad))?;
        let spill = flow.orbit(x, -sign * 2.0 * pad)?;
        Ok(OrbitAccess::Dense { sign, main, spill })
    }

    pub(crate) fn at(&self, s: f64) -> Result<Vec<f64>> {
        match self {
            OrbitAccess::Direct { flow, base } => flow.flow_at(s, base),
            OrbitAccess::Dense { sign, main, spill } => {
                let traj = if s * sign >= 0.0 { main } else { spill };
                traj.eval(s).ok_or_else(|| {
                    Error::InvalidParams(format!(
                        "prepared orbit window does not cover flow time {s}"
                    ))
                })
            }
        }
    }
}

fn check_finite(v: CVec, at: f64, assumed_bound: f64) -> Result<CVec> {
    if v.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        Ok(v)
    } else {
        Err(Error::BoundViolated {
            at,
            observed: f64::INFINITY,
            bound: assumed_bound,
        })
    }
}

/// Defect at the orbit point `Phi(s, x)` of a prepared orbit.
pub(crate) fn residual_along(
    problem: &StabilityProblem,
    y: &CandidateSolution,
    access: &OrbitAccess,
    s: f64,
    tol: &Tolerances,
    assumed_bound: f64,
) -> Result<CVec> {
    let p = access.at(s)?;
    let lambda = problem.lambda();
    let vy: CVec = if y.has_gradient() {
        let jac = y.gradient_at(&p).expect("gradient present");
        let v = problem.field().eval(&p);
        jac.iter()
            .map(|row| row.iter().zip(&v).map(|(j, vi)| j * *vi).sum())
            .collect()
    } else {
        let delta = tol.fd_step_scale;
        let plus = y.eval(&access.at(s + delta)?);
        let minus = y.eval(&access.at(s - delta)?);
        plus.iter()
            .zip(&minus)
            .map(|(a, b)| (a - b) / (2.0 * delta))
            .collect()
    };
    let yp = y.eval(&p);
    let fp = (problem.forcing())(&p);
    let alpha: CVec = vy
        .iter()
        .zip(yp.iter().zip(&fp))
        .map(|(d, (yv, fv))| d - lambda * yv - fv)
        .collect();
    check_finite(alpha, s, assumed_bound)
}

/// The defect as a standalone function of the base point.
///
/// Finite-difference probes here run short flow arcs from each queried
/// point; inside correction integrals prefer [`residual_along`], which
/// reuses one trajectory for all samples.
pub fn residual_field(
    problem: &StabilityProblem,
    y: &CandidateSolution,
    flow: &Arc<FlowMap>,
    tol: &Tolerances,
) -> TryPointFn {
    let problem = problem.clone();
    let y = y.clone();
    let flow = Arc::clone(flow);
    let tol = tol.clone();
    Arc::new(move |x: &[f64]| {
        let access = OrbitAccess::Direct {
            flow: Arc::clone(&flow),
            base: x.to_vec(),
        };
        // A closed-access orbit falls back to short numeric arcs through
        // flow_at when the field has no formula; both probe times are
        // within one step of zero, so the cost stays bounded.
        residual_along(&problem, &y, &access, 0.0, &tol, f64::INFINITY)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{catalog_field, FieldSpec};
    use crate::types::{complexify, Norm, PointFn};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn zero_forcing(m: usize) -> PointFn {
        Arc::new(move |_: &[f64]| vec![Complex64::new(0.0, 0.0); m])
    }

    fn problem_on(spec: &FieldSpec, lambda: Complex64) -> (StabilityProblem, Arc<FlowMap>) {
        let field = catalog_field(spec).unwrap();
        let flow = Arc::new(FlowMap::new(field.clone(), Tolerances::default()));
        let problem = StabilityProblem::new(field, lambda, zero_forcing(1), Norm::MaxModulus).unwrap();
        (problem, flow)
    }

    #[test]
    fn exact_zero_solution_has_zero_residual() {
        let (problem, flow) = problem_on(
            &FieldSpec::Rotation { rates: vec![1.0] },
            Complex64::new(1.0, 0.0),
        );
        let y = CandidateSolution::new(Arc::new(|_: &[f64]| {
            vec![Complex64::new(0.0, 0.0)]
        }));
        let tol = Tolerances::default();
        let alpha = residual_field(&problem, &y, &flow, &tol);
        let v = alpha(&[0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(v[0].norm(), 0.0, epsilon = 1e-8);
    }

    #[test]
    fn scaling_field_on_square_gives_square_back() {
        // V = x d/dx, lambda = 1, y = x^2: Vy - y = 2x^2 - x^2 = x^2.
        let (problem, flow) = problem_on(
            &FieldSpec::Euler {
                offset: 1.0,
                weights: vec![0.0],
            },
            Complex64::new(1.0, 0.0),
        );
        let tol = Tolerances::default();
        let y_fd = CandidateSolution::new(Arc::new(|x: &[f64]| complexify(&[x[0] * x[0]])));
        let y_grad = y_fd
            .clone()
            .with_gradient(|x: &[f64]| vec![vec![Complex64::new(2.0 * x[0], 0.0)]]);
        for y in [y_fd, y_grad] {
            let alpha = residual_field(&problem, &y, &flow, &tol);
            let v = alpha(&[1.5]).unwrap();
            assert_abs_diff_eq!(v[0].re, 2.25, epsilon = 1e-6);
            assert_abs_diff_eq!(v[0].im, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn constant_candidate_on_rotation_field_feels_only_lambda() {
        // Vy = 0 for constant y, so alpha = -lambda c.
        let (problem, flow) = problem_on(
            &FieldSpec::Rotation { rates: vec![1.0] },
            Complex64::new(1.0, 0.0),
        );
        let c = Complex64::new(0.7, -0.2);
        let y = CandidateSolution::new(Arc::new(move |_: &[f64]| vec![c]));
        let tol = Tolerances::default();
        let alpha = residual_field(&problem, &y, &flow, &tol);
        let v = alpha(&[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(v[0].re, -0.7, epsilon = 1e-8);
        assert_abs_diff_eq!(v[0].im, 0.2, epsilon = 1e-8);
    }

    #[test]
    fn dense_access_matches_closed_form_along_the_orbit() {
        let spec = FieldSpec::Rotation { rates: vec![1.0] };
        let field = catalog_field(&spec).unwrap();
        // Strip the closed form to force dense trajectories.
        let stripped = crate::geometry::VectorField::custom(field.domain().clone(), {
            let f = field.clone();
            move |x| f.eval(x)
        });
        let flow = Arc::new(FlowMap::new(stripped, Tolerances::default()));
        let access = OrbitAccess::prepare(&flow, &[1.0, 0.0], 1.0, 3.0, 1e-3).unwrap();
        for s in [-1e-4, 0.0, 0.5, 2.9, 3.001] {
            let got = access.at(s).unwrap();
            assert_abs_diff_eq!(got[0], s.cos(), epsilon = 1e-7);
            assert_abs_diff_eq!(got[1], s.sin(), epsilon = 1e-7);
        }
    }

    #[test]
    fn non_finite_candidate_reports_bound_violation() {
        let (problem, flow) = problem_on(
            &FieldSpec::Euler {
                offset: 1.0,
                weights: vec![0.0],
            },
            Complex64::new(1.0, 0.0),
        );
        let y = CandidateSolution::new(Arc::new(|x: &[f64]| {
            complexify(&[1.0 / (x[0] - 1.0)])
        }));
        let tol = Tolerances::default();
        let alpha = residual_field(&problem, &y, &flow, &tol);
        let err = alpha(&[1.0]).unwrap_err();
        assert!(matches!(err, Error::BoundViolated { .. }));
    }
}
