//! The one-dimensional correction: from an approximate solution of the
//! scalar linear ODE `u' = lambda u + h` on the real line to the exact
//! solution nearest to it.
//!
//! With defect `alpha(s) = a'(s) - lambda a(s) - h(s)` and window sign
//! `w = sign(Re lambda)`, the exact solution is
//!
//! `b(t) = a(t) + integral of alpha(t + w s) exp(-lambda w s) w ds, s >= 0`.
//!
//! This is the constant-variation solution anchored at `a(0)` with its
//! integral basepoint shifted from 0 to `t`; the shifted form never
//! multiplies a quadrature result by `exp(lambda t)`, so its error stays
//! flat across the evaluation window instead of growing exponentially
//! toward the window end.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{
    plan_damped_quad, quad_exp_decay_with_plan, truncation_horizon, DampedQuadPlan, Tolerances,
};
use crate::types::{max_modulus, max_modulus_diff, CVec, TryCurveFn};

/// Exact solution near a given curve, with the measured defect data.
#[derive(Clone)]
pub struct CurveCorrection {
    /// The exact solution `b`, evaluable at any time.
    pub corrected: TryCurveFn,
    /// Largest defect magnitude seen on the pre-pass samples.
    pub epsilon_measured: f64,
    /// Largest `|a - b|` over the requested sample times.
    pub sup_distance: f64,
    /// Frozen quadrature layout shared by every evaluation of `b`.
    pub plan: DampedQuadPlan,
}

impl std::fmt::Debug for CurveCorrection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CurveCorrection")
            .field("epsilon_measured", &self.epsilon_measured)
            .field("sup_distance", &self.sup_distance)
            .field("plan", &self.plan)
            .finish()
    }
}

fn finite_or_violated(v: CVec, at: f64, assumed: f64) -> Result<CVec> {
    if v.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
        Ok(v)
    } else {
        Err(Error::BoundViolated {
            at,
            observed: f64::INFINITY,
            bound: assumed,
        })
    }
}

/// Corrects an approximate solution `a` of `u' = lambda u + h`.
///
/// `sample_times` sets the window over which the defect is pre-sampled and
/// the distance `|a - b|` is estimated; evaluations of `b` are valid at
/// any time, with the defect-boundedness tripwire armed from the pre-pass.
pub fn correct_curve(
    a: &TryCurveFn,
    h: &TryCurveFn,
    lambda: Complex64,
    sample_times: &[f64],
    tol: &Tolerances,
) -> Result<CurveCorrection> {
    tol.validate()?;
    if lambda.re == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidLambda { lambda });
    }
    let w = lambda.re.signum();
    let rate = lambda * w;

    let fd = tol.fd_step_scale;
    let alpha = {
        let a = a.clone();
        let h = h.clone();
        move |s: f64| -> Result<CVec> {
            let delta = fd * (1.0 + s.abs());
            let plus = a(s + delta)?;
            let minus = a(s - delta)?;
            let mid = a(s)?;
            let hv = h(s)?;
            Ok(plus
                .iter()
                .zip(&minus)
                .zip(mid.iter().zip(&hv))
                .map(|((p, m), (av, hvv))| (p - m) / (2.0 * delta) - lambda * av - hvv)
                .collect())
        }
    };

    // Pre-pass: bound the defect over every argument the evaluations will
    // touch, i.e. the sample window stretched by the horizon toward the
    // decaying side.
    let lo = sample_times.iter().copied().fold(0.0_f64, f64::min);
    let hi = sample_times.iter().copied().fold(0.0_f64, f64::max);
    let floor = tol.quad_tol * rate.re / 10.0;
    let mut horizon = truncation_horizon(rate.re, 1.0, tol.quad_tol);
    let mut eps = 0.0_f64;
    for pass in 0..2 {
        let (from, to) = if w > 0.0 {
            (lo, hi + horizon)
        } else {
            (lo - horizon, hi)
        };
        let samples = 64 * (pass + 1);
        for k in 0..=samples {
            let s = from + (to - from) * k as f64 / samples as f64;
            eps = eps.max(max_modulus(&finite_or_violated(
                alpha(s)?,
                s,
                1.5 * eps,
            )?));
        }
        let wider = truncation_horizon(rate.re, (1.5 * eps).max(floor), tol.quad_tol);
        if wider <= horizon * 1.01 {
            break;
        }
        horizon = wider;
    }
    let u_max = (1.5 * eps).max(floor);

    let plan = plan_damped_quad(
        &|s: f64| alpha(w * s),
        rate,
        Some(u_max),
        tol.quad_tol,
    )?;

    let corrected: TryCurveFn = {
        let a = a.clone();
        let plan = plan.clone();
        std::sync::Arc::new(move |t: f64| -> Result<CVec> {
            let shifted = |s: f64| alpha(t + w * s);
            let q = quad_exp_decay_with_plan(&shifted, &plan)?;
            let base = a(t)?;
            Ok(base.iter().zip(&q).map(|(av, qv)| av + w * qv).collect())
        })
    };

    let mut sup_distance = 0.0_f64;
    for &t in sample_times {
        let av = a(t)?;
        let bv = corrected(t)?;
        sup_distance = sup_distance.max(max_modulus_diff(&av, &bv));
    }

    Ok(CurveCorrection {
        corrected,
        epsilon_measured: eps,
        sup_distance,
        plan,
    })
}
