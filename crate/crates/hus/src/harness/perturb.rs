//! Perturbation generators.
//!
//! A perturbation is added to an exact seed solution to make an approximate
//! solution whose defect is then *measured*, never assumed equal to the
//! requested magnitude. Every shape comes with its analytic gradient so the
//! defect can be evaluated through the fast gradient route, and every shape
//! obeys the hard cap `sup |p| <= magnitude`.
//!
//! Shapes that read coordinates do so through the trailing coordinate (or a
//! compactly supported profile): along the catalog's expanding directions a
//! coordinate-reading perturbation would otherwise have a defect growing
//! without bound along orbits, which the correction rejects by design.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::grid::SampleGrid;
use crate::types::{CVec, PointFn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationShape {
    /// `p = magnitude`, the tightness witness: its defect is exactly
    /// `|lambda| * magnitude` and the correction attains the bound.
    Constant,
    /// `p = magnitude * sin(x_n)` with its analytic cosine gradient.
    SinusoidalInCoordinates,
    /// A mollifier bump centered in the sample box, radius 0.45 of the
    /// narrowest half-width, so its support lies strictly inside the box.
    Bump,
    /// A seeded mixture of plane-wave sines with absolute weights summing
    /// to one; deterministic for a given seed.
    UniformRandomSmoothed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    pub shape: PerturbationShape,
    pub magnitude: f64,
    #[serde(default)]
    pub seed: u64,
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.magnitude.is_finite() || self.magnitude < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "perturbation magnitude must be finite and >= 0, got {}",
                self.magnitude
            )));
        }
        Ok(())
    }
}

/// A scalar-valued perturbation with its analytic gradient.
#[derive(Clone)]
pub struct Perturbation {
    pub value: PointFn,
    pub gradient: Arc<dyn Fn(&[f64]) -> Vec<CVec> + Send + Sync>,
}

fn re(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// Smooth compactly supported profile `exp(1 - 1/(1-u))` on `u < 1`.
fn mollifier(u: f64) -> f64 {
    if u >= 1.0 - 1e-12 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u)).exp()
    }
}

/// d/du of [`mollifier`]; decays to zero at the support edge despite the
/// diverging rational factor.
fn mollifier_deriv(u: f64) -> f64 {
    if u >= 1.0 - 1e-12 {
        0.0
    } else {
        let denom = 1.0 - u;
        -mollifier(u) / (denom * denom)
    }
}

/// Builds the perturbation for a spec over a given sample grid. The grid
/// fixes the geometry of the grid-adapted shapes (bump placement); the
/// function itself is defined on the whole ambient space.
pub fn build_perturbation(spec: &PerturbationSpec, grid: &SampleGrid) -> Result<Perturbation> {
    spec.validate()?;
    let dim = grid.dim();
    let mag = spec.magnitude;
    match spec.shape {
        PerturbationShape::Constant => Ok(Perturbation {
            value: Arc::new(move |_: &[f64]| vec![re(mag)]),
            gradient: Arc::new(move |x: &[f64]| vec![vec![re(0.0); x.len()]]),
        }),
        PerturbationShape::SinusoidalInCoordinates => {
            let last = dim - 1;
            Ok(Perturbation {
                value: Arc::new(move |x: &[f64]| vec![re(mag * x[last].sin())]),
                gradient: Arc::new(move |x: &[f64]| {
                    let mut row = vec![re(0.0); x.len()];
                    row[last] = re(mag * x[last].cos());
                    vec![row]
                }),
            })
        }
        PerturbationShape::Bump => {
            let center = grid.center();
            let radius = 0.45 * grid.min_half_width();
            if !(radius > 0.0) {
                return Err(Error::InvalidConfig(
                    "bump perturbation needs a sample box of positive width".into(),
                ));
            }
            let r2 = radius * radius;
            let c = center.clone();
            let value: PointFn = Arc::new(move |x: &[f64]| {
                let u = x
                    .iter()
                    .zip(&c)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    / r2;
                vec![re(mag * mollifier(u))]
            });
            let c = center;
            let gradient = Arc::new(move |x: &[f64]| {
                let u = x
                    .iter()
                    .zip(&c)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    / r2;
                let scale = mag * mollifier_deriv(u) * 2.0 / r2;
                vec![x.iter().zip(&c).map(|(a, b)| re(scale * (a - b))).collect()]
            });
            Ok(Perturbation { value, gradient })
        }
        PerturbationShape::UniformRandomSmoothed => {
            let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
            const TERMS: usize = 5;
            let mut waves = Vec::with_capacity(TERMS);
            let mut total = 0.0;
            for _ in 0..TERMS {
                let direction: Vec<f64> =
                    (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let weight: f64 = rng.gen_range(0.2..1.0);
                total += weight;
                waves.push((direction, phase, weight));
            }
            // Absolute weights sum to one, so sup |p| <= magnitude exactly.
            for wave in &mut waves {
                wave.2 *= mag / total;
            }
            let value_waves = waves.clone();
            let value: PointFn = Arc::new(move |x: &[f64]| {
                let s = value_waves
                    .iter()
                    .map(|(d, phi, c)| {
                        c * (d.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + phi).sin()
                    })
                    .sum::<f64>();
                vec![re(s)]
            });
            let gradient = Arc::new(move |x: &[f64]| {
                let mut row = vec![re(0.0); x.len()];
                for (d, phi, c) in &waves {
                    let arg = d.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + phi;
                    let factor = c * arg.cos();
                    for (slot, dir) in row.iter_mut().zip(d) {
                        *slot += re(factor * dir);
                    }
                }
                vec![row]
            });
            Ok(Perturbation { value, gradient })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::grid::{estimate_sup_norm, AxisSpec};
    use crate::numerics::central_jacobian;
    use crate::types::{max_modulus_diff, Norm};

    fn box2() -> SampleGrid {
        SampleGrid {
            axes: vec![
                AxisSpec { min: -2.0, max: 2.0, count: 41 },
                AxisSpec { min: -2.0, max: 2.0, count: 41 },
            ],
            halton_count: 100,
        }
    }

    fn spec(shape: PerturbationShape, magnitude: f64, seed: u64) -> PerturbationSpec {
        PerturbationSpec { shape, magnitude, seed }
    }

    #[test]
    fn every_shape_respects_the_magnitude_cap() {
        let grid = box2();
        for shape in [
            PerturbationShape::Constant,
            PerturbationShape::SinusoidalInCoordinates,
            PerturbationShape::Bump,
            PerturbationShape::UniformRandomSmoothed,
        ] {
            let p = build_perturbation(&spec(shape, 0.3, 7), &grid).unwrap();
            let est = estimate_sup_norm(&|x| (p.value)(x), &grid, Norm::MaxModulus);
            assert!(
                est.value <= 0.3 * (1.0 + 1e-9),
                "{shape:?} sup = {}",
                est.value
            );
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let grid = box2();
        for shape in [
            PerturbationShape::SinusoidalInCoordinates,
            PerturbationShape::Bump,
            PerturbationShape::UniformRandomSmoothed,
        ] {
            let p = build_perturbation(&spec(shape, 0.5, 11), &grid).unwrap();
            for x in [[0.1, 0.2], [0.4, -0.3], [-1.0, 0.9]] {
                let fd = central_jacobian(&|y| (p.value)(y), &x, 1e-6);
                let analytic = (p.gradient)(&x);
                assert!(
                    max_modulus_diff(&fd[0], &analytic[0]) <= 1e-7,
                    "{shape:?} gradient mismatch at {x:?}"
                );
            }
        }
    }

    #[test]
    fn seeded_shape_is_deterministic_and_seed_sensitive() {
        let grid = box2();
        let s = spec(PerturbationShape::UniformRandomSmoothed, 0.2, 99);
        let a = build_perturbation(&s, &grid).unwrap();
        let b = build_perturbation(&s, &grid).unwrap();
        let other = build_perturbation(
            &spec(PerturbationShape::UniformRandomSmoothed, 0.2, 100),
            &grid,
        )
        .unwrap();
        let probe = [[0.3, 0.7], [-1.2, 0.4], [1.9, -1.9]];
        let mut differs = false;
        for x in &probe {
            let va = (a.value)(x);
            let vb = (b.value)(x);
            assert_eq!(va[0].re.to_bits(), vb[0].re.to_bits(), "nondeterministic at {x:?}");
            differs |= va[0] != (other.value)(x)[0];
        }
        assert!(differs, "different seeds produced identical perturbations");
    }

    #[test]
    fn bump_vanishes_outside_its_support() {
        let grid = box2();
        let p = build_perturbation(&spec(PerturbationShape::Bump, 1.0, 0), &grid).unwrap();
        // Support radius is 0.45 * 2 = 0.9 around the origin.
        assert_eq!((p.value)(&[1.0, 0.0])[0].re, 0.0);
        assert_eq!((p.gradient)(&[0.0, 1.2])[0][1].re, 0.0);
        assert!((p.value)(&[0.0, 0.0])[0].re == 1.0);
        assert!((p.value)(&[0.3, 0.2])[0].re > 0.0);
    }

    #[test]
    fn negative_magnitude_is_rejected() {
        let grid = box2();
        let err = build_perturbation(&spec(PerturbationShape::Constant, -0.1, 0), &grid);
        assert!(matches!(err, Err(Error::InvalidConfig(_))));
    }
}
