//! Experiment configuration: everything a verification run needs, in one
//! serializable document.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{catalog_field, FieldSpec, VectorField};
use crate::harness::grid::SampleGrid;
use crate::harness::perturb::PerturbationSpec;
use crate::numerics::Tolerances;
use crate::types::{CVec, Norm, PointFn};

/// Complex scalar as a pair of reals, the form used in config documents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexSpec {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl ComplexSpec {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Forcing term `f` of `Vy = lambda y + f`, scalar-valued.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ForcingSpec {
    Zero,
    Constant { re: f64, im: f64 },
    /// `f(x) = amplitude * sin(x_1)`.
    Sinusoidal { amplitude: f64 },
    /// `f(x) = (re + i im) * x_{index+1}`, for seeds linear in a coordinate.
    Linear { index: usize, re: f64, im: f64 },
}

impl Default for ForcingSpec {
    fn default() -> Self {
        ForcingSpec::Zero
    }
}

impl ForcingSpec {
    pub fn function(&self, dim: usize) -> Result<PointFn> {
        match self.clone() {
            ForcingSpec::Zero => Ok(Arc::new(|_: &[f64]| vec![Complex64::new(0.0, 0.0)])),
            ForcingSpec::Constant { re, im } => {
                let c = Complex64::new(re, im);
                Ok(Arc::new(move |_: &[f64]| vec![c]))
            }
            ForcingSpec::Sinusoidal { amplitude } => {
                Ok(Arc::new(move |x: &[f64]| {
                    vec![Complex64::new(amplitude * x[0].sin(), 0.0)]
                }))
            }
            ForcingSpec::Linear { index, re, im } => {
                if index >= dim {
                    return Err(Error::InvalidConfig(format!(
                        "linear forcing reads coordinate {} of a {dim}-dimensional field",
                        index + 1
                    )));
                }
                let c = Complex64::new(re, im);
                Ok(Arc::new(move |x: &[f64]| vec![c * x[index]]))
            }
        }
    }
}

/// Closed-form seed solution the perturbation is added to. Its exactness
/// against the configured forcing is verified, not trusted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExactSolutionSpec {
    Zero,
    Constant { re: f64, im: f64 },
    /// `y(x) = scale * x_{index+1}`.
    Coordinate { index: usize, scale: f64 },
}

impl Default for ExactSolutionSpec {
    fn default() -> Self {
        ExactSolutionSpec::Zero
    }
}

/// Scalar function together with its analytic gradient row.
pub type ScalarSeed = (PointFn, Arc<dyn Fn(&[f64]) -> Vec<CVec> + Send + Sync>);

impl ExactSolutionSpec {
    pub fn build(&self, dim: usize) -> Result<ScalarSeed> {
        match *self {
            ExactSolutionSpec::Zero => Ok((
                Arc::new(|_: &[f64]| vec![Complex64::new(0.0, 0.0)]),
                Arc::new(move |_: &[f64]| vec![vec![Complex64::new(0.0, 0.0); dim]]),
            )),
            ExactSolutionSpec::Constant { re, im } => {
                let c = Complex64::new(re, im);
                Ok((
                    Arc::new(move |_: &[f64]| vec![c]),
                    Arc::new(move |_: &[f64]| vec![vec![Complex64::new(0.0, 0.0); dim]]),
                ))
            }
            ExactSolutionSpec::Coordinate { index, scale } => {
                if index >= dim {
                    return Err(Error::InvalidConfig(format!(
                        "coordinate seed reads coordinate {} of a {dim}-dimensional field",
                        index + 1
                    )));
                }
                Ok((
                    Arc::new(move |x: &[f64]| vec![Complex64::new(scale * x[index], 0.0)]),
                    Arc::new(move |_: &[f64]| {
                        let mut row = vec![Complex64::new(0.0, 0.0); dim];
                        row[index] = Complex64::new(scale, 0.0);
                        vec![row]
                    }),
                ))
            }
        }
    }
}

/// Time window for the flow-compatibility check: `count` evenly spaced
/// sample times in `[t_min, t_max]`. A zero count skips the check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalWindow {
    pub t_min: f64,
    pub t_max: f64,
    pub count: usize,
}

impl EvalWindow {
    pub fn times(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![0.5 * (self.t_min + self.t_max)],
            n => (0..n)
                .map(|k| self.t_min + (self.t_max - self.t_min) * k as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

/// One full verification experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub field: FieldSpec,
    pub lambda: ComplexSpec,
    #[serde(default)]
    pub forcing: ForcingSpec,
    #[serde(default)]
    pub exact_solution: ExactSolutionSpec,
    pub perturbation: PerturbationSpec,
    pub sample_grid: SampleGrid,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub eval_window: EvalWindow,
    #[serde(default)]
    pub norm: Norm,
}

impl ExperimentConfig {
    pub fn lambda(&self) -> Complex64 {
        self.lambda.value()
    }

    /// Builds the catalog field after full validation.
    pub fn build_field(&self) -> Result<VectorField> {
        self.validate()?;
        catalog_field(&self.field)
    }

    /// Checks every declared invariant: tolerances, grid shape, domain
    /// membership of all sample points, spec indices, and the stability
    /// hypothesis on lambda.
    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        self.perturbation.validate()?;
        self.sample_grid.validate()?;
        let lambda = self.lambda();
        if !lambda.is_finite() {
            return Err(Error::Validation(format!("lambda = {lambda} is not finite")));
        }
        if lambda.re == 0.0 {
            return Err(Error::Validation(format!(
                "lambda = {lambda} violates the hypothesis Re(lambda) != 0; \
                 the stability constant 1/|Re(lambda)| is undefined"
            )));
        }
        let field = catalog_field(&self.field).map_err(|e| Error::Validation(e.to_string()))?;
        let dim = field.domain().dim();
        if self.sample_grid.dim() != dim {
            return Err(Error::Validation(format!(
                "sample grid has {} axes but the field is {dim}-dimensional",
                self.sample_grid.dim()
            )));
        }
        for point in self.sample_grid.points() {
            if !field.domain().contains(&point) {
                return Err(Error::Validation(format!(
                    "sample point {point:?} lies outside {}",
                    field.domain().description()
                )));
            }
        }
        self.forcing.function(dim).map_err(|e| Error::Validation(e.to_string()))?;
        self.exact_solution
            .build(dim)
            .map_err(|e| Error::Validation(e.to_string()))?;
        let w = self.eval_window;
        if !w.t_min.is_finite() || !w.t_max.is_finite() || w.t_min > w.t_max {
            return Err(Error::Validation(format!(
                "eval window [{}, {}] is not a valid time interval",
                w.t_min, w.t_max
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::grid::AxisSpec;
    use crate::harness::perturb::PerturbationShape;

    fn rotation_config() -> ExperimentConfig {
        ExperimentConfig {
            field: FieldSpec::Rotation { rates: vec![1.0] },
            lambda: ComplexSpec { re: 1.0, im: 0.0 },
            forcing: ForcingSpec::Zero,
            exact_solution: ExactSolutionSpec::Zero,
            perturbation: PerturbationSpec {
                shape: PerturbationShape::Bump,
                magnitude: 0.1,
                seed: 0,
            },
            sample_grid: SampleGrid {
                axes: vec![
                    AxisSpec { min: -2.0, max: 2.0, count: 9 },
                    AxisSpec { min: -2.0, max: 2.0, count: 9 },
                ],
                halton_count: 20,
            },
            tolerances: Tolerances::default(),
            eval_window: EvalWindow { t_min: -2.0, t_max: 2.0, count: 5 },
            norm: Norm::MaxModulus,
        }
    }

    #[test]
    fn valid_config_passes_validation() {
        rotation_config().validate().unwrap();
    }

    #[test]
    fn zero_real_part_names_the_violated_hypothesis() {
        let mut config = rotation_config();
        config.lambda = ComplexSpec { re: 0.0, im: 1.0 };
        let err = config.validate().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("Re(lambda) != 0"), "{msg}");
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn grid_outside_the_domain_is_rejected() {
        let mut config = rotation_config();
        config.field = FieldSpec::Euler { offset: 1.0, weights: vec![0.0, 0.0] };
        // The box straddles the boundary of the positive orthant.
        let err = config.validate().unwrap_err();
        assert!(err.to_string().contains("outside"), "{err}");
    }

    #[test]
    fn mismatched_grid_dimension_is_rejected() {
        let mut config = rotation_config();
        config.sample_grid.axes.pop();
        assert!(config.validate().is_err());
    }

    #[test]
    fn spec_indices_are_range_checked() {
        let mut config = rotation_config();
        config.forcing = ForcingSpec::Linear { index: 2, re: 1.0, im: 0.0 };
        assert!(config.validate().is_err());
        let mut config = rotation_config();
        config.exact_solution = ExactSolutionSpec::Coordinate { index: 5, scale: 1.0 };
        assert!(config.validate().is_err());
    }

    #[test]
    fn window_times_include_both_ends() {
        let w = EvalWindow { t_min: -2.0, t_max: 2.0, count: 5 };
        assert_eq!(w.times(), vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert!(EvalWindow { t_min: 0.0, t_max: 1.0, count: 0 }.times().is_empty());
    }
}
