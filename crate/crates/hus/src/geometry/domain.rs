//! Coordinate domains standing in for manifolds.
//!
//! Everything downstream acts along flow lines inside a single chart, so a
//! domain is just a dimension plus a membership predicate.

use std::fmt;
use std::sync::Arc;

/// An open region of R^n given by a pure membership predicate.
#[derive(Clone)]
pub struct Domain {
    dim: usize,
    description: String,
    contains: Arc<dyn Fn(&[f64]) -> bool + Send + Sync>,
}

impl Domain {
    pub fn new(
        dim: usize,
        description: impl Into<String>,
        contains: impl Fn(&[f64]) -> bool + Send + Sync + 'static,
    ) -> Domain {
        assert!(dim > 0, "domain dimension must be positive");
        Domain {
            dim,
            description: description.into(),
            contains: Arc::new(contains),
        }
    }

    /// All of R^n.
    pub fn all(dim: usize) -> Domain {
        Domain::new(dim, format!("R^{dim}"), |_| true)
    }

    /// The open positive orthant: every coordinate strictly positive.
    pub fn positive_orthant(dim: usize) -> Domain {
        Domain::new(dim, format!("R^{dim} (positive orthant)"), |x: &[f64]| {
            x.iter().all(|&xi| xi > 0.0)
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim && x.iter().all(|xi| xi.is_finite()) && (self.contains)(x)
    }
}

impl fmt::Debug for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Domain")
            .field("dim", &self.dim)
            .field("description", &self.description)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_space_contains_everything_finite() {
        let d = Domain::all(2);
        assert!(d.contains(&[0.0, -5.0]));
        assert!(!d.contains(&[f64::NAN, 0.0]));
        assert!(!d.contains(&[1.0]));
    }

    #[test]
    fn positive_orthant_requires_strict_positivity() {
        let d = Domain::positive_orthant(2);
        assert!(d.contains(&[1.0, 0.5]));
        assert!(!d.contains(&[1.0, 0.0]));
        assert!(!d.contains(&[-1.0, 2.0]));
    }
}
