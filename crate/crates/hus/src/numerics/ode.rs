//! Adaptive Runge-Kutta integration of integral curves.
//!
//! The stepper is the Dormand-Prince embedded 5(4) pair with PI step-size
//! control and the classical fourth-order dense-output interpolant, so stored
//! trajectories can be evaluated continuously between accepted steps.

use crate::error::{Error, Result};
use crate::numerics::Tolerances;

// Dormand-Prince 5(4) tableau. Stage times are omitted: the fields here
// are autonomous.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
// Fifth-order solution weights; the seventh stage is FSAL.
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense-output coefficients.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const STEP_GROWTH_EXP: f64 = 0.2 - BETA * 0.75;
const MAX_SHRINK: f64 = 5.0;
const MAX_GROWTH: f64 = 10.0;

/// One accepted step in internal (nonnegative) time, with the interpolation
/// coefficients for dense evaluation on `[t0, t0 + h]`.
struct Segment {
    t0: f64,
    h: f64,
    cont: [Vec<f64>; 5],
}

/// A computed integral curve: accepted samples plus a dense interpolant.
///
/// For backward integration (`t_final < 0`) the curve is parametrized by the
/// original signed time; `eval` accepts any `t` between 0 and `t_final`.
pub struct Trajectory {
    dim: usize,
    sign: f64,
    span: f64,
    samples: Vec<(f64, Vec<f64>)>,
    segments: Vec<Segment>,
}

impl Trajectory {
    fn single_point(x0: &[f64]) -> Trajectory {
        Trajectory {
            dim: x0.len(),
            sign: 1.0,
            span: 0.0,
            samples: vec![(0.0, x0.to_vec())],
            segments: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Signed final time of the curve.
    pub fn t_final(&self) -> f64 {
        self.sign * self.span
    }

    /// Accepted (t, x) samples in signed time, ordered from 0 to `t_final`.
    pub fn samples(&self) -> &[(f64, Vec<f64>)] {
        &self.samples
    }

    pub fn final_state(&self) -> &[f64] {
        &self.samples.last().expect("trajectory has samples").1
    }

    /// Dense evaluation at signed time `t` between 0 and `t_final`.
    /// Returns `None` outside the covered window.
    pub fn eval(&self, t: f64) -> Option<Vec<f64>> {
        let slack = 1e-9 * (1.0 + self.span);
        let tau = self.sign * t;
        if tau < -slack || tau > self.span + slack {
            return None;
        }
        let tau = tau.clamp(0.0, self.span);
        if self.segments.is_empty() {
            return Some(self.samples[0].1.clone());
        }
        // Binary search for the segment containing tau.
        let idx = match self
            .segments
            .binary_search_by(|seg| seg.t0.partial_cmp(&tau).expect("finite times"))
        {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let seg = &self.segments[idx.min(self.segments.len() - 1)];
        let theta = ((tau - seg.t0) / seg.h).clamp(0.0, 1.0);
        let theta1 = 1.0 - theta;
        let mut out = vec![0.0; self.dim];
        for i in 0..self.dim {
            let c = [
                seg.cont[0][i],
                seg.cont[1][i],
                seg.cont[2][i],
                seg.cont[3][i],
                seg.cont[4][i],
            ];
            out[i] = c[0] + theta * (c[1] + theta1 * (c[2] + theta * (c[3] + theta1 * c[4])));
        }
        Some(out)
    }
}

fn scaled_rms(v: &[f64], scale: &[f64]) -> f64 {
    let sum: f64 = v
        .iter()
        .zip(scale)
        .map(|(e, sc)| (e / sc) * (e / sc))
        .sum();
    (sum / v.len() as f64).sqrt()
}

/// Initial step-size heuristic: match the scale of the state against the
/// scale of the derivative, then refine with one explicit Euler probe.
fn initial_step(
    field: &dyn Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    f0: &[f64],
    span: f64,
    tol: &Tolerances,
) -> f64 {
    let scale: Vec<f64> = x0.iter().map(|x| tol.ode_abs + tol.ode_rel * x.abs()).collect();
    let d0 = scaled_rms(x0, &scale);
    let d1 = scaled_rms(f0, &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * (d0 / d1)
    };
    let h0 = h0.min(span);
    let probe: Vec<f64> = x0.iter().zip(f0).map(|(x, f)| x + h0 * f).collect();
    let f1 = field(&probe);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = scaled_rms(&diff, &scale) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Integrates `x' = field(x)` from `x0` over `[0, t_final]` with adaptive
/// error control; `t_final` may be negative, in which case the time-reversed
/// field is integrated. `guard`, when given, must hold at every accepted
/// state or the solve stops with [`Error::DomainExit`].
pub fn solve_ivp(
    field: &dyn Fn(&[f64]) -> Vec<f64>,
    x0: &[f64],
    t_final: f64,
    tol: &Tolerances,
    guard: Option<&dyn Fn(&[f64]) -> bool>,
) -> Result<Trajectory> {
    tol.validate()?;
    let dim = x0.len();
    if let Some(g) = guard {
        if !g(x0) {
            return Err(Error::DomainExit {
                time: 0.0,
                point: x0.to_vec(),
            });
        }
    }
    if t_final == 0.0 {
        return Ok(Trajectory::single_point(x0));
    }
    let sign = t_final.signum();
    let span = t_final.abs();
    let rhs = |x: &[f64]| -> Vec<f64> {
        let mut v = field(x);
        if sign < 0.0 {
            for vi in &mut v {
                *vi = -*vi;
            }
        }
        v
    };

    let mut t = 0.0_f64;
    let mut y = x0.to_vec();
    let mut k1 = rhs(&y);
    let mut h = initial_step(&rhs, &y, &k1, span, tol);
    let mut facold = 1e-4_f64;
    let mut rejected = false;

    let mut samples = vec![(0.0, y.clone())];
    let mut segments = Vec::new();

    while t < span {
        let h_min = 100.0 * f64::EPSILON * t.abs().max(1.0);
        if h < h_min {
            return Err(Error::StepUnderflow {
                time: sign * t,
                step: h,
            });
        }
        let last = t + h >= span;
        if last {
            h = span - t;
        }

        let stage = |base: &[f64], coeffs: &[(f64, &[f64])]| -> Vec<f64> {
            let mut out = base.to_vec();
            for i in 0..dim {
                for (a, k) in coeffs {
                    out[i] += h * a * k[i];
                }
            }
            out
        };
        let k2 = rhs(&stage(&y, &[(A21, &k1)]));
        let k3 = rhs(&stage(&y, &[(A31, &k1), (A32, &k2)]));
        let k4 = rhs(&stage(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = rhs(&stage(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = rhs(&stage(
            &y,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ));
        let y1 = stage(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = rhs(&y1);

        let mut err_vec = vec![0.0; dim];
        let mut scale = vec![0.0; dim];
        for i in 0..dim {
            err_vec[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            scale[i] = tol.ode_abs + tol.ode_rel * y[i].abs().max(y1[i].abs());
        }
        let err = scaled_rms(&err_vec, &scale);

        if err <= 1.0 {
            // Accept: record the dense-output segment for [t, t + h].
            let mut cont = [
                vec![0.0; dim],
                vec![0.0; dim],
                vec![0.0; dim],
                vec![0.0; dim],
                vec![0.0; dim],
            ];
            for i in 0..dim {
                let ydiff = y1[i] - y[i];
                let bspl = h * k1[i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * k7[i] - bspl;
                cont[4][i] = h
                    * (D1 * k1[i]
                        + D3 * k3[i]
                        + D4 * k4[i]
                        + D5 * k5[i]
                        + D6 * k6[i]
                        + D7 * k7[i]);
            }
            segments.push(Segment { t0: t, h, cont });

            t = if last { span } else { t + h };
            y = y1;
            k1 = k7; // FSAL
            if let Some(g) = guard {
                if !g(&y) {
                    return Err(Error::DomainExit {
                        time: sign * t,
                        point: y,
                    });
                }
            }
            samples.push((sign * t, y.clone()));

            let fac11 = err.max(1e-16).powf(STEP_GROWTH_EXP);
            let mut fac = fac11 / facold.powf(BETA);
            fac = (fac / SAFETY).clamp(1.0 / MAX_GROWTH, MAX_SHRINK);
            let mut h_new = h / fac;
            if rejected {
                h_new = h_new.min(h);
            }
            facold = err.max(1e-4);
            rejected = false;
            h = h_new;
        } else {
            let fac11 = err.powf(STEP_GROWTH_EXP);
            h /= (fac11 / SAFETY).min(MAX_SHRINK);
            rejected = true;
        }
    }

    Ok(Trajectory {
        dim,
        sign,
        span,
        samples,
        segments,
    })
}
