//! Low-level numerical kernels: adaptive ODE stepping, exponentially damped
//! improper quadrature, and finite differences.
//!
//! Everything here is a pure function of its inputs and safe to call from any
//! number of threads.

mod diff;
mod ode;
mod quad;

pub use diff::{central_jacobian, directional_derivative, try_directional_derivative};
pub use ode::{solve_ivp, Trajectory};
pub use quad::{
    integrate_complex, integrate_complex_panels, plan_damped_quad, quad_exp_decay,
    quad_exp_decay_with_plan, truncation_horizon, DampedIntegrand, DampedQuadPlan,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Error targets for the numerical kernels.
///
/// `ode_rel`/`ode_abs` control the per-step error of [`solve_ivp`], `quad_tol`
/// is the absolute error budget of the damped improper quadrature, and
/// `fd_step_scale` scales finite-difference steps as `h = fd_step_scale * max(1, |t|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub ode_rel: f64,
    pub ode_abs: f64,
    pub quad_tol: f64,
    pub fd_step_scale: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ode_rel: 1e-10,
            ode_abs: 1e-12,
            quad_tol: 1e-7,
            fd_step_scale: 1e-5,
        }
    }
}

impl Tolerances {
    /// All fields must be strictly positive and the error targets at most
    /// 1e-2; looser targets make the runs meaningless.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("ode_rel", self.ode_rel),
            ("ode_abs", self.ode_abs),
            ("quad_tol", self.quad_tol),
            ("fd_step_scale", self.fd_step_scale),
        ];
        for (name, value) in fields {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidTolerances(format!(
                    "{name} must be strictly positive, got {value}"
                )));
            }
        }
        for (name, value) in &fields[..3] {
            if *value > 1e-2 {
                return Err(Error::InvalidTolerances(format!(
                    "{name} must be at most 1e-2, got {value}"
                )));
            }
        }
        Ok(())
    }
}
