//! The flow correction: from an approximate solution of `Vy = lambda y + f`
//! on a domain to the exact solution within the stability bound.
//!
//! With defect `alpha = Vy - lambda y - f` and window sign
//! `w = sign(Re lambda)`, the exact solution is
//!
//! `z(x) = y(x) + w * integral of alpha(Phi(w s, x)) exp(-lambda w s) ds`
//!
//! over `s >= 0`, where `Phi` is the flow of `V`. Restricted to one orbit
//! this is exactly the one-dimensional correction of [`correct_curve`],
//! which is how the two stay consistent.
//!
//! The quadrature layout (horizon, panel count, defect bound) is planned
//! once per correction, from the evaluation grid plus a sampling pass
//! along the worst point's orbit, then frozen. Every evaluation of `z`
//! shares the plan, so the quadrature error varies smoothly from point to
//! point; differentiating `z` numerically then sees the equation residual,
//! not re-adaptation noise.

use std::sync::Arc;

use crate::correction::problem::{
    hus_bound, CandidateSolution, CorrectionResult, StabilityProblem,
};
use crate::correction::residual::{residual_along, OrbitAccess};
use crate::correction::curve::correct_curve;
use crate::error::{Error, Result};
use crate::geometry::FlowMap;
use crate::numerics::{plan_damped_quad, quad_exp_decay_with_plan, truncation_horizon, Tolerances};
use crate::types::{max_modulus, max_modulus_diff, CVec, Point, TryCurveFn};

/// Corrects `y` to the exact solution `z`, measuring the defect and the
/// distance moved over `eval_points`.
///
/// The returned `corrected` function evaluates `z` lazily at any domain
/// point under the frozen quadrature plan; evaluation can fail with
/// `DomainExit` where the field is not complete, or `BoundViolated` when
/// the defect outgrows the bound sampled at planning time.
pub fn correct_along_flow(
    problem: &StabilityProblem,
    y: &CandidateSolution,
    flow: &Arc<FlowMap>,
    eval_points: &[Point],
    tol: &Tolerances,
) -> Result<CorrectionResult> {
    tol.validate()?;
    if eval_points.is_empty() {
        return Err(Error::InvalidParams(
            "correction needs at least one evaluation point".into(),
        ));
    }
    let lambda = problem.lambda();
    let w = problem.omega_sign();
    let rate = lambda * w;
    let pad = tol.fd_step_scale;
    let norm = problem.norm();

    // Defect over the evaluation grid; track the worst point to plan on.
    let mut eps_norm = 0.0_f64;
    let mut eps_mm = 0.0_f64;
    let mut plan_base = &eval_points[0];
    for x in eval_points {
        if !problem.field().domain().contains(x) {
            return Err(Error::InvalidParams(format!(
                "evaluation point {x:?} lies outside {}",
                problem.field().domain().description()
            )));
        }
        let direct = OrbitAccess::Direct {
            flow: Arc::clone(flow),
            base: x.clone(),
        };
        let av = residual_along(problem, y, &direct, 0.0, tol, f64::INFINITY)?;
        let mm = max_modulus(&av);
        if mm > eps_mm {
            eps_mm = mm;
            plan_base = x;
        }
        eps_norm = eps_norm.max(norm.of(&av));
    }

    // Horizon and defect bound, refined by sampling along the plan orbit.
    let floor = tol.quad_tol * rate.re / 10.0;
    let mut u_max = (1.5 * eps_mm).max(floor);
    let mut horizon = truncation_horizon(rate.re, u_max, tol.quad_tol);
    for pass in 0..2 {
        let access = OrbitAccess::prepare(flow, plan_base, w, horizon, pad)?;
        let nodes = 64 * (pass + 1);
        let mut orbit_max = 0.0_f64;
        for k in 0..=nodes {
            let sigma = horizon * k as f64 / nodes as f64;
            let av = residual_along(problem, y, &access, w * sigma, tol, u_max)?;
            orbit_max = orbit_max.max(max_modulus(&av));
        }
        u_max = (1.5 * eps_mm.max(orbit_max)).max(floor);
        let wider = truncation_horizon(rate.re, u_max, tol.quad_tol);
        if wider <= horizon * 1.01 {
            horizon = horizon.max(wider);
            break;
        }
        horizon = wider;
    }

    let plan = {
        let access = OrbitAccess::prepare(flow, plan_base, w, horizon, pad)?;
        plan_damped_quad(
            &|sigma: f64| residual_along(problem, y, &access, w * sigma, tol, u_max),
            rate,
            Some(u_max),
            tol.quad_tol,
        )?
    };

    let corrected = {
        let problem = problem.clone();
        let y = y.clone();
        let flow = Arc::clone(flow);
        let tol = tol.clone();
        let plan = plan.clone();
        Arc::new(move |x: &[f64]| -> Result<CVec> {
            let access = OrbitAccess::prepare(&flow, x, w, plan.horizon, pad)?;
            let u = |sigma: f64| residual_along(&problem, &y, &access, w * sigma, &tol, plan.u_max);
            let q = quad_exp_decay_with_plan(&u, &plan)?;
            let base = y.eval(x);
            Ok(base.iter().zip(&q).map(|(yv, qv)| yv + w * qv).collect())
        })
    };

    let mut distance = 0.0_f64;
    for x in eval_points {
        let zv = corrected(x)?;
        let yv = y.eval(x);
        let diff: CVec = yv.iter().zip(&zv).map(|(a, b)| a - b).collect();
        distance = distance.max(norm.of(&diff));
    }

    Ok(CorrectionResult {
        corrected,
        epsilon_measured: eps_norm,
        bound: hus_bound(eps_norm, lambda)?,
        distance_measured: distance,
        omega_sign: w,
        plan,
    })
}

/// Consistency of the flow correction with the one-dimensional correction
/// applied along orbits: the maximum over samples `(t, x)` of
/// `|z(Phi(t, x)) - b_x(t)|`, where `b_x` corrects the restriction of `y`
/// to the orbit of `x`. Exactness of `z` along orbits in one number.
pub fn check_flow_compatibility(
    problem: &StabilityProblem,
    y: &CandidateSolution,
    flow: &Arc<FlowMap>,
    result: &CorrectionResult,
    samples: &[(f64, Point)],
    tol: &Tolerances,
) -> Result<f64> {
    let mut worst = 0.0_f64;
    for (t, x) in samples {
        let moved = flow.flow_at(*t, x)?;
        let z_moved = (result.corrected)(&moved)?;

        let a_x: TryCurveFn = {
            let flow = Arc::clone(flow);
            let y = y.clone();
            let x = x.clone();
            Arc::new(move |s: f64| Ok(y.eval(&flow.flow_at(s, &x)?)))
        };
        let h_x: TryCurveFn = {
            let flow = Arc::clone(flow);
            let forcing = problem.forcing().clone();
            let x = x.clone();
            Arc::new(move |s: f64| Ok(forcing(&flow.flow_at(s, &x)?)))
        };
        let on_orbit = correct_curve(&a_x, &h_x, problem.lambda(), &[*t], tol)?;
        let b_t = (on_orbit.corrected)(*t)?;
        worst = worst.max(max_modulus_diff(&z_moved, &b_t));
    }
    Ok(worst)
}
