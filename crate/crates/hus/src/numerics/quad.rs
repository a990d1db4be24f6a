//! Quadrature for complex vector-valued integrands.
//!
//! Finite windows use composite 8-point Gauss-Legendre panels with dyadic
//! refinement. Improper integrals of exponentially damped integrands are
//! truncated at a horizon chosen from an a-priori tail bound and evaluated
//! with a frozen panel layout, so repeated evaluations (at nearby base
//! points, say) see quadrature error that varies smoothly rather than
//! jumping with per-call adaptivity.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::types::{max_modulus, max_modulus_diff, CVec};

// 8-point Gauss-Legendre nodes and weights on [-1, 1].
const GL_NODES: [f64; 8] = [
    -0.96028985649753623168,
    -0.79666647741362673959,
    -0.52553240991632898582,
    -0.18343464249564980494,
    0.18343464249564980494,
    0.52553240991632898582,
    0.79666647741362673959,
    0.96028985649753623168,
];
const GL_WEIGHTS: [f64; 8] = [
    0.10122853629037625915,
    0.22238103445337447054,
    0.31370664587788728734,
    0.36268378337836198297,
    0.36268378337836198297,
    0.31370664587788728734,
    0.22238103445337447054,
    0.10122853629037625915,
];

const MAX_PANELS: usize = 1 << 16;

/// Fallible sampled integrand: flow parameter to complex vector value.
pub type DampedIntegrand<'a> = dyn Fn(f64) -> Result<CVec> + 'a;

fn panel_sum(f: &DampedIntegrand, a: f64, half: f64, acc: &mut CVec) -> Result<()> {
    let mid = a + half;
    for (node, weight) in GL_NODES.iter().zip(&GL_WEIGHTS) {
        let v = f(mid + half * node)?;
        if acc.is_empty() {
            acc.resize(v.len(), Complex64::new(0.0, 0.0));
        }
        for (s, vi) in acc.iter_mut().zip(&v) {
            *s += weight * half * vi;
        }
    }
    Ok(())
}

/// Composite Gauss-Legendre integral of `f` over `[a, b]` with a fixed
/// number of equal panels. `b < a` yields the signed integral.
pub fn integrate_complex_panels(
    f: &DampedIntegrand,
    a: f64,
    b: f64,
    panels: usize,
) -> Result<CVec> {
    assert!(panels > 0, "need at least one panel");
    let width = (b - a) / panels as f64;
    let half = width / 2.0;
    let mut acc = CVec::new();
    for p in 0..panels {
        panel_sum(f, a + p as f64 * width, half, &mut acc)?;
    }
    Ok(acc)
}

/// Integral of `f` over `[a, b]` with dyadic panel refinement until two
/// successive refinements agree within `tol / 2` in max modulus. Returns the
/// refined value and the panel count it used.
pub fn integrate_complex(
    f: &DampedIntegrand,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<(CVec, usize)> {
    assert!(tol > 0.0, "tolerance must be positive");
    let mut panels = 1;
    let mut coarse = integrate_complex_panels(f, a, b, panels)?;
    loop {
        let next = panels * 2;
        let fine = integrate_complex_panels(f, a, b, next)?;
        if max_modulus_diff(&fine, &coarse) <= tol / 2.0 {
            return Ok((fine, next));
        }
        if next >= MAX_PANELS {
            return Err(Error::InvalidParams(format!(
                "quadrature on [{a}, {b}] did not reach tolerance {tol:.3e} \
                 within {MAX_PANELS} panels"
            )));
        }
        panels = next;
        coarse = fine;
    }
}

/// Truncation horizon for `integral of u(s) exp(-rate*s) over s >= 0` with
/// `|u| <= u_max`: beyond the horizon the tail is below `tol / 2`. Clamped
/// to `[1, 1e4]` so degenerate bounds still give a usable window.
pub fn truncation_horizon(re_rate: f64, u_max: f64, tol: f64) -> f64 {
    debug_assert!(re_rate > 0.0);
    let u = u_max.max(f64::MIN_POSITIVE);
    let t = (2.0 * u / (tol * re_rate)).ln() / re_rate;
    t.clamp(1.0, 1e4)
}

/// Frozen evaluation layout for one family of damped improper integrals:
/// the complex decay rate, the truncation horizon, the panel count on
/// `[0, horizon]`, and the magnitude bound backing the tail estimate.
#[derive(Debug, Clone)]
pub struct DampedQuadPlan {
    pub rate: Complex64,
    pub horizon: f64,
    pub panels: usize,
    pub u_max: f64,
    pub tol: f64,
}

impl DampedQuadPlan {
    /// Tail mass discarded by truncation, assuming `|u| <= u_max` holds.
    pub fn tail_bound(&self) -> f64 {
        self.u_max * (-self.rate.re * self.horizon).exp() / self.rate.re
    }
}

fn estimate_u_max(u: &DampedIntegrand, horizon: f64, samples: usize) -> Result<f64> {
    let mut m = 0.0_f64;
    for k in 0..=samples {
        let s = horizon * k as f64 / samples as f64;
        m = m.max(max_modulus(&u(s)?));
    }
    Ok(m)
}

/// Builds a frozen plan for `integral of u(s) exp(-rate*s) over s >= 0`.
///
/// The magnitude bound is taken from `u_max_hint` or estimated by coarse
/// sampling in two passes (the first pass fixes a provisional horizon, the
/// second re-samples if the bound pushed the horizon out). The panel count
/// is then refined on the planning integrand until dyadic halving moves the
/// value by at most `tol / 2`.
pub fn plan_damped_quad(
    u: &DampedIntegrand,
    rate: Complex64,
    u_max_hint: Option<f64>,
    tol: f64,
) -> Result<DampedQuadPlan> {
    if !(rate.re > 0.0) {
        return Err(Error::InvalidLambda { lambda: rate });
    }
    assert!(tol > 0.0, "tolerance must be positive");
    let floor = tol * rate.re / 10.0;
    let u_max = match u_max_hint {
        Some(m) => m.max(floor),
        None => {
            let t0 = truncation_horizon(rate.re, 1.0, tol);
            let mut m = estimate_u_max(u, t0, 32)?;
            let mut bound = (1.5 * m).max(floor);
            let t1 = truncation_horizon(rate.re, bound, tol);
            if t1 > t0 * 1.01 {
                m = m.max(estimate_u_max(u, t1, 64)?);
                bound = (1.5 * m).max(floor);
            }
            bound
        }
    };
    let horizon = truncation_horizon(rate.re, u_max, tol);

    // Resolve oscillation and decay: a panel per few radians of phase and
    // per unit of decay, refined from there.
    let phase_scale = rate.im.abs() + rate.re;
    let mut panels = ((horizon * phase_scale / 3.0).ceil() as usize)
        .max((horizon / 5.0).ceil() as usize)
        .max(4)
        .next_power_of_two();
    let damped = |s: f64| -> Result<CVec> {
        let v = u(s)?;
        let w = (-rate * s).exp();
        Ok(v.iter().map(|c| c * w).collect())
    };
    let mut coarse = integrate_complex_panels(&damped, 0.0, horizon, panels)?;
    loop {
        let next = panels * 2;
        let fine = integrate_complex_panels(&damped, 0.0, horizon, next)?;
        if max_modulus_diff(&fine, &coarse) <= tol / 2.0 {
            return Ok(DampedQuadPlan {
                rate,
                horizon,
                panels: next,
                u_max,
                tol,
            });
        }
        if next >= MAX_PANELS {
            return Err(Error::InvalidParams(format!(
                "damped quadrature did not reach tolerance {tol:.3e} \
                 within {MAX_PANELS} panels on [0, {horizon:.3}]"
            )));
        }
        panels = next;
        coarse = fine;
    }
}

/// Evaluates `integral of u(s) exp(-rate*s) over s >= 0` under a frozen
/// plan. Every sampled magnitude is checked against the plan's bound; a
/// sample exceeding it by more than 10% invalidates the tail estimate and
/// fails with [`Error::BoundViolated`].
pub fn quad_exp_decay_with_plan(u: &DampedIntegrand, plan: &DampedQuadPlan) -> Result<CVec> {
    let limit = 1.1 * plan.u_max;
    let damped = |s: f64| -> Result<CVec> {
        let v = u(s)?;
        let m = max_modulus(&v);
        if m > limit {
            return Err(Error::BoundViolated {
                at: s,
                observed: m,
                bound: plan.u_max,
            });
        }
        let w = (-plan.rate * s).exp();
        Ok(v.iter().map(|c| c * w).collect())
    };
    integrate_complex_panels(&damped, 0.0, plan.horizon, plan.panels)
}

/// One-shot damped improper integral: plan, then evaluate under the plan.
pub fn quad_exp_decay(
    u: &DampedIntegrand,
    rate: Complex64,
    u_max_hint: Option<f64>,
    tol: f64,
) -> Result<CVec> {
    let plan = plan_damped_quad(u, rate, u_max_hint, tol)?;
    quad_exp_decay_with_plan(u, &plan)
}
