//! Sample grids and sup-norm estimation.
//!
//! All sup-norms in the library are estimates: the maximum of a function
//! over a finite sample set standing in for a supremum that may not be
//! attained. A grid is a per-axis lattice with endpoints included,
//! optionally supplemented by low-discrepancy points that guard against
//! extrema hiding between lattice lines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{CVec, Norm, Point};

/// One coordinate axis of a sample lattice: `count` evenly spaced values
/// with both endpoints included (a single-count axis samples the midpoint).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisSpec {
    fn value(&self, k: usize) -> f64 {
        if self.count <= 1 {
            0.5 * (self.min + self.max)
        } else {
            self.min + (self.max - self.min) * k as f64 / (self.count - 1) as f64
        }
    }
}

/// Lattice plus low-discrepancy supplement over the same box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleGrid {
    pub axes: Vec<AxisSpec>,
    /// Number of Halton points added to the lattice.
    #[serde(default)]
    pub halton_count: usize,
}

/// Bases for the Halton supplement, one prime per coordinate.
const HALTON_BASES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut factor = inv;
    let mut value = 0.0;
    while index > 0 {
        value += factor * (index % base) as f64;
        index /= base;
        factor *= inv;
    }
    value
}

impl SampleGrid {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Total number of points: lattice product plus the Halton supplement.
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product::<usize>() + self.halton_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::InvalidConfig("sample grid needs at least one axis".into()));
        }
        for (i, axis) in self.axes.iter().enumerate() {
            if !axis.min.is_finite() || !axis.max.is_finite() || axis.min > axis.max {
                return Err(Error::InvalidConfig(format!(
                    "axis {} has invalid range [{}, {}]",
                    i + 1,
                    axis.min,
                    axis.max
                )));
            }
            if axis.count == 0 {
                return Err(Error::InvalidConfig(format!("axis {} has zero samples", i + 1)));
            }
        }
        if self.halton_count > 0 && self.dim() > HALTON_BASES.len() {
            return Err(Error::InvalidConfig(format!(
                "the low-discrepancy supplement supports up to {} dimensions, got {}",
                HALTON_BASES.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// The corner of the axis box nearest the origin of each axis range.
    pub fn center(&self) -> Point {
        self.axes.iter().map(|a| 0.5 * (a.min + a.max)).collect()
    }

    /// Half-width of the narrowest axis, the natural length scale for
    /// features that must fit inside the box.
    pub fn min_half_width(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| 0.5 * (a.max - a.min))
            .fold(f64::INFINITY, f64::min)
    }

    /// All sample points: the lattice in row-major order (last axis fastest),
    /// then the Halton supplement. The order is part of the determinism
    /// contract; reductions over points must not be reordered.
    pub fn points(&self) -> Vec<Point> {
        let dim = self.dim();
        let lattice: usize = self.axes.iter().map(|a| a.count).product();
        let mut out = Vec::with_capacity(lattice + self.halton_count);
        let mut index = vec![0usize; dim];
        for _ in 0..lattice {
            out.push(
                self.axes
                    .iter()
                    .zip(&index)
                    .map(|(a, &k)| a.value(k))
                    .collect(),
            );
            for d in (0..dim).rev() {
                index[d] += 1;
                if index[d] < self.axes[d].count {
                    break;
                }
                index[d] = 0;
            }
        }
        for j in 0..self.halton_count {
            out.push(
                self.axes
                    .iter()
                    .enumerate()
                    .map(|(d, a)| {
                        let u = radical_inverse(j as u64 + 1, HALTON_BASES[d]);
                        a.min + (a.max - a.min) * u
                    })
                    .collect(),
            );
        }
        out
    }

    /// Whether a point touches the boundary of the axis box. Used to flag
    /// sup-norm argmaxima that may keep growing outside the sampled region.
    pub fn on_boundary(&self, x: &[f64]) -> bool {
        self.axes.iter().zip(x).any(|(a, &v)| {
            let slack = 1e-12 * (1.0 + (a.max - a.min).abs());
            a.count > 1 && ((v - a.min).abs() <= slack || (v - a.max).abs() <= slack)
        })
    }
}

/// A sampled sup-norm: the largest value seen, where it was seen, and
/// whether that point lies on the sample-box boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct SupEstimate {
    pub value: f64,
    pub argmax: Point,
    pub on_boundary: bool,
}

/// Maximum of `norm(f)` over the grid. Monotone under grid refinement:
/// adding points can only raise the estimate.
pub fn estimate_sup_norm(
    f: &dyn Fn(&[f64]) -> CVec,
    grid: &SampleGrid,
    norm: Norm,
) -> SupEstimate {
    try_estimate_sup_norm(&|x| Ok(f(x)), grid, norm).expect("infallible map")
}

/// [`estimate_sup_norm`] for maps that may fail (flow-dependent functions).
pub fn try_estimate_sup_norm(
    f: &dyn Fn(&[f64]) -> Result<CVec>,
    grid: &SampleGrid,
    norm: Norm,
) -> Result<SupEstimate> {
    let points = grid.points();
    let mut best = f64::NEG_INFINITY;
    let mut argmax = points
        .first()
        .cloned()
        .ok_or_else(|| Error::InvalidConfig("sup-norm estimate over an empty grid".into()))?;
    for x in &points {
        let v = norm.of(&f(x)?);
        if v > best {
            best = v;
            argmax = x.clone();
        }
    }
    Ok(SupEstimate {
        value: best,
        on_boundary: grid.on_boundary(&argmax),
        argmax,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::complexify;

    fn grid2(min: f64, max: f64, count: usize) -> SampleGrid {
        SampleGrid {
            axes: vec![
                AxisSpec { min, max, count },
                AxisSpec { min, max, count },
            ],
            halton_count: 0,
        }
    }

    #[test]
    fn zero_function_has_zero_sup() {
        let grid = grid2(-1.0, 1.0, 5);
        let est = estimate_sup_norm(&|_| complexify(&[0.0]), &grid, Norm::MaxModulus);
        assert_eq!(est.value, 0.0);
        assert_eq!(est.argmax.len(), 2);
    }

    #[test]
    fn coordinate_function_peaks_on_the_included_endpoint() {
        let grid = grid2(0.0, 1.0, 6);
        let est = estimate_sup_norm(&|x| complexify(&[x[0]]), &grid, Norm::MaxModulus);
        assert_eq!(est.value, 1.0);
        assert_eq!(est.argmax[0], 1.0);
        assert!(est.on_boundary);
    }

    #[test]
    fn dense_sampling_finds_a_known_extremum() {
        // max of sin(3 x) on [0, pi] is 1, attained at pi/6 and 5 pi/6.
        let grid = SampleGrid {
            axes: vec![AxisSpec { min: 0.0, max: std::f64::consts::PI, count: 1000 }],
            halton_count: 0,
        };
        let est = estimate_sup_norm(&|x| complexify(&[(3.0 * x[0]).sin()]), &grid, Norm::MaxModulus);
        assert!((est.value - 1.0).abs() <= 1e-4, "sup = {}", est.value);
        assert!(!est.on_boundary);
    }

    #[test]
    fn refinement_and_supplement_never_lower_the_estimate() {
        // 5 -> 9 points per axis keeps every coarse lattice point, and the
        // Halton supplement only adds points, so the max cannot drop.
        let f = |x: &[f64]| complexify(&[(2.3 * x[0]).sin() * (1.7 * x[1]).cos()]);
        let coarse = estimate_sup_norm(&f, &grid2(-2.0, 2.0, 5), Norm::MaxModulus);
        let fine = estimate_sup_norm(&f, &grid2(-2.0, 2.0, 9), Norm::MaxModulus);
        let mut supplemented = grid2(-2.0, 2.0, 9);
        supplemented.halton_count = 64;
        let most = estimate_sup_norm(&f, &supplemented, Norm::MaxModulus);
        assert!(fine.value >= coarse.value);
        assert!(most.value >= fine.value);
    }

    #[test]
    fn halton_points_stay_inside_the_box_and_are_deterministic() {
        let mut grid = grid2(0.5, 1.5, 2);
        grid.halton_count = 50;
        let pts = grid.points();
        assert_eq!(pts.len(), 4 + 50);
        for p in &pts[4..] {
            assert!(p.iter().all(|&v| (0.5..=1.5).contains(&v)), "{p:?}");
            assert!(!grid.on_boundary(p));
        }
        assert_eq!(pts, grid.points());
    }

    #[test]
    fn single_count_axis_samples_the_midpoint() {
        let grid = SampleGrid {
            axes: vec![AxisSpec { min: 2.0, max: 4.0, count: 1 }],
            halton_count: 0,
        };
        assert_eq!(grid.points(), vec![vec![3.0]]);
    }

    #[test]
    fn supplement_beyond_eight_dimensions_is_rejected() {
        let grid = SampleGrid {
            axes: vec![AxisSpec { min: 0.0, max: 1.0, count: 2 }; 9],
            halton_count: 10,
        };
        assert!(matches!(grid.validate(), Err(Error::InvalidConfig(_))));
        let no_supplement = SampleGrid { halton_count: 0, ..grid };
        assert!(no_supplement.validate().is_ok());
    }
}
