//! Central finite differences for complex vector-valued maps on R^n.

use crate::error::Result;
use crate::types::{max_abs, CVec};

/// Step actually taken for a nominal scale `h` at base point `x`: relative
/// to the size of `x` so the difference stays well conditioned.
fn effective_step(h: f64, x: &[f64]) -> f64 {
    h * (1.0 + max_abs(x))
}

/// Central-difference derivative of `f` at `x` along direction `v` with
/// nominal step scale `h`.
pub fn directional_derivative(
    f: &dyn Fn(&[f64]) -> CVec,
    x: &[f64],
    v: &[f64],
    h: f64,
) -> CVec {
    try_directional_derivative(&|p| Ok(f(p)), x, v, h).expect("infallible map")
}

/// Fallible variant of [`directional_derivative`] for maps that can leave
/// their domain during the probe.
pub fn try_directional_derivative(
    f: &dyn Fn(&[f64]) -> Result<CVec>,
    x: &[f64],
    v: &[f64],
    h: f64,
) -> Result<CVec> {
    let step = effective_step(h, x);
    let plus: Vec<f64> = x.iter().zip(v).map(|(xi, vi)| xi + step * vi).collect();
    let minus: Vec<f64> = x.iter().zip(v).map(|(xi, vi)| xi - step * vi).collect();
    let fp = f(&plus)?;
    let fm = f(&minus)?;
    let denom = 2.0 * step;
    Ok(fp
        .iter()
        .zip(&fm)
        .map(|(a, b)| (a - b) / denom)
        .collect())
}

/// Central-difference Jacobian of `f` at `x`: row `i`, column `j` holds the
/// partial derivative of component `i` along coordinate `j`.
pub fn central_jacobian(f: &dyn Fn(&[f64]) -> CVec, x: &[f64], h: f64) -> Vec<CVec> {
    let n = x.len();
    let step = effective_step(h, x);
    let mut columns = Vec::with_capacity(n);
    let mut rows = 0;
    for j in 0..n {
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[j] += step;
        minus[j] -= step;
        let fp = f(&plus);
        let fm = f(&minus);
        rows = fp.len();
        let col: CVec = fp
            .iter()
            .zip(&fm)
            .map(|(a, b)| (a - b) / (2.0 * step))
            .collect();
        columns.push(col);
    }
    (0..rows)
        .map(|i| (0..n).map(|j| columns[j][i]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn quadratic(x: &[f64]) -> CVec {
        vec![
            Complex64::new(x[0] * x[0], 0.0),
            Complex64::new(x[0] * x[1], 0.0),
        ]
    }

    #[test]
    fn directional_derivative_of_quadratic_is_exact() {
        // Central differences have no error on quadratics beyond rounding.
        let d = directional_derivative(&quadratic, &[1.0, 2.0], &[1.0, 0.0], 1e-6);
        assert_abs_diff_eq!(d[0].re, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d[1].re, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn complex_phase_derivative_matches_oracle() {
        // d/dx exp(ix) = i exp(ix).
        let f = |x: &[f64]| vec![Complex64::new(0.0, x[0]).exp()];
        let x = [0.7];
        let d = directional_derivative(&f, &x, &[1.0], 1e-6);
        let want = Complex64::new(0.0, 1.0) * Complex64::new(0.0, x[0]).exp();
        assert_abs_diff_eq!(d[0].re, want.re, epsilon = 1e-8);
        assert_abs_diff_eq!(d[0].im, want.im, epsilon = 1e-8);
    }

    #[test]
    fn jacobian_of_quadratic_matches_oracle() {
        let j = central_jacobian(&quadratic, &[1.0, 2.0], 1e-6);
        let want = [[2.0, 0.0], [2.0, 1.0]];
        for (row, wrow) in j.iter().zip(&want) {
            for (entry, w) in row.iter().zip(wrow) {
                assert_abs_diff_eq!(entry.re, *w, epsilon = 1e-8);
                assert_abs_diff_eq!(entry.im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn fallible_probe_propagates_errors() {
        let f = |x: &[f64]| -> Result<CVec> {
            if x[0] > 1.0 {
                Err(crate::error::Error::DomainExit {
                    time: 0.0,
                    point: x.to_vec(),
                })
            } else {
                Ok(vec![Complex64::new(x[0], 0.0)])
            }
        };
        let err = try_directional_derivative(&f, &[1.0], &[1.0], 1e-3).unwrap_err();
        assert!(matches!(err, crate::error::Error::DomainExit { .. }));
    }
}
