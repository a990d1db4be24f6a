//! Shared value types: points, complex vectors, and norms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::Result;

/// A point of the coordinate domain in R^n.
pub type Point = Vec<f64>;

/// A value in the target space C^m.
pub type CVec = Vec<Complex64>;

/// Function from the domain into C^m.
pub type PointFn = Arc<dyn Fn(&[f64]) -> CVec + Send + Sync>;

/// Fallible function from the domain into C^m (may require flow evaluations).
pub type TryPointFn = Arc<dyn Fn(&[f64]) -> Result<CVec> + Send + Sync>;

/// A curve R -> C^m.
pub type CurveFn = Arc<dyn Fn(f64) -> CVec + Send + Sync>;

/// Fallible curve R -> C^m.
pub type TryCurveFn = Arc<dyn Fn(f64) -> Result<CVec> + Send + Sync>;

/// Norm on the target space C^m used for all sup-norm estimates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Norm {
    /// Maximum of component moduli. Makes per-component reductions exact.
    #[default]
    MaxModulus,
    Euclidean,
}

impl Norm {
    pub fn of(&self, value: &[Complex64]) -> f64 {
        match self {
            Norm::MaxModulus => value.iter().map(|c| c.norm()).fold(0.0, f64::max),
            Norm::Euclidean => value.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt(),
        }
    }
}

/// Max-of-component-moduli norm, the default throughout the numerics layer.
pub fn max_modulus(value: &[Complex64]) -> f64 {
    value.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Max-norm of a real vector.
pub fn max_abs(value: &[f64]) -> f64 {
    value.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Max-norm distance between two real vectors of equal length.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Max-modulus distance between two complex vectors of equal length.
pub fn max_modulus_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Promote a real vector to C^m.
pub fn complexify(value: &[f64]) -> CVec {
    value.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}
