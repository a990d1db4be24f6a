//! Flow maps: evaluating the one-parameter group of a vector field.
//!
//! A `FlowMap` answers `flow_at(t, x)` through the closed form when the
//! field carries one, and through adaptive integration otherwise. Numeric
//! trajectories are cached per (basepoint, time direction) and extended on
//! demand, because the correction integrals sample many times along the
//! same orbit.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::geometry::field::VectorField;
use crate::numerics::{solve_ivp, Tolerances, Trajectory};
use crate::types::{max_abs_diff, Point};

type OrbitKey = (Vec<u64>, i8);

pub struct FlowMap {
    field: VectorField,
    tol: Tolerances,
    cache: Mutex<HashMap<OrbitKey, Arc<Trajectory>>>,
}

fn orbit_key(x: &[f64], sign: i8) -> OrbitKey {
    let bits = x.iter().map(|v| (v + 0.0).to_bits()).collect();
    (bits, sign)
}

impl FlowMap {
    pub fn new(field: VectorField, tol: Tolerances) -> FlowMap {
        FlowMap {
            field,
            tol,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn field(&self) -> &VectorField {
        &self.field
    }

    pub fn tol(&self) -> &Tolerances {
        &self.tol
    }

    fn check_start(&self, x: &[f64]) -> Result<()> {
        if self.field.domain().contains(x) {
            Ok(())
        } else {
            Err(Error::DomainExit {
                time: 0.0,
                point: x.to_vec(),
            })
        }
    }

    /// The trajectory from `x` covering at least `[0, t_final]` (a signed
    /// window). Cached per direction; a longer request re-solves and
    /// replaces the cached curve.
    pub fn orbit(&self, x: &[f64], t_final: f64) -> Result<Arc<Trajectory>> {
        self.check_start(x)?;
        let sign = if t_final < 0.0 { -1i8 } else { 1 };
        let key = orbit_key(x, sign);
        {
            let cache = self.cache.lock().expect("cache lock");
            if let Some(traj) = cache.get(&key) {
                if traj.t_final().abs() >= t_final.abs() {
                    return Ok(Arc::clone(traj));
                }
            }
        }
        let domain = self.field.domain().clone();
        let guard = move |p: &[f64]| domain.contains(p);
        let field = &self.field;
        let rhs = |p: &[f64]| field.eval(p);
        // Solve past the request so a later, slightly longer request hits
        // the cache; fall back to the exact span when the overshoot alone
        // fails (domain exit or blow-up strictly beyond t_final).
        let solved = match solve_ivp(&rhs, x, 1.5 * t_final, &self.tol, Some(&guard)) {
            Ok(traj) => Ok(traj),
            Err(err) if err.time_of_failure().map_or(false, |t| t.abs() > t_final.abs()) => {
                solve_ivp(&rhs, x, t_final, &self.tol, Some(&guard))
            }
            Err(err) => Err(err),
        };
        let traj = Arc::new(solved?);
        let mut cache = self.cache.lock().expect("cache lock");
        cache.insert(key, Arc::clone(&traj));
        Ok(traj)
    }

    /// Flow action, preferring the exact form when the field has one.
    pub fn flow_at(&self, t: f64, x: &[f64]) -> Result<Point> {
        self.check_start(x)?;
        if let Some(p) = self.field.closed_form_flow(t, x) {
            if !self.field.domain().contains(&p) {
                return Err(Error::DomainExit { time: t, point: p });
            }
            return Ok(p);
        }
        self.flow_at_numeric(t, x)
    }

    /// Flow action by integration, regardless of any closed form. Used to
    /// cross-check closed forms against the stepper.
    pub fn flow_at_numeric(&self, t: f64, x: &[f64]) -> Result<Point> {
        if t == 0.0 {
            self.check_start(x)?;
            return Ok(x.to_vec());
        }
        let traj = self.orbit(x, t)?;
        traj.eval(t).ok_or(Error::InvalidParams(format!(
            "trajectory window does not cover t = {t}"
        )))
    }
}

impl std::fmt::Debug for FlowMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let cached = self.cache.lock().map(|c| c.len()).unwrap_or(0);
        f.debug_struct("FlowMap")
            .field("field", &self.field)
            .field("cached_orbits", &cached)
            .finish()
    }
}

/// Maximum defect of the group law `flow(t+s, x) = flow(t, flow(s, x))`
/// over the given samples.
pub fn check_semigroup(flow: &FlowMap, samples: &[(f64, f64, Point)]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for (t, s, x) in samples {
        let direct = flow.flow_at(t + s, x)?;
        let mid = flow.flow_at(*s, x)?;
        let composed = flow.flow_at(*t, &mid)?;
        worst = worst.max(max_abs_diff(&direct, &composed));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::field::{catalog_field, FieldSpec};
    use approx::assert_abs_diff_eq;

    fn flow_for(spec: &FieldSpec) -> FlowMap {
        FlowMap::new(catalog_field(spec).unwrap(), Tolerances::default())
    }

    fn unit_euler() -> FieldSpec {
        FieldSpec::Euler {
            offset: 1.0,
            weights: vec![0.0],
        }
    }

    fn planar_rotation() -> FieldSpec {
        FieldSpec::Rotation { rates: vec![1.0] }
    }

    #[test]
    fn euler_flow_doubles_in_log_two() {
        // g identically 1: the flow is exp(t) x, so exp(ln 2) * 2 = 4.
        let flow = flow_for(&unit_euler());
        let moved = flow.flow_at(2.0_f64.ln(), &[2.0]).unwrap();
        assert_abs_diff_eq!(moved[0], 4.0, epsilon = 1e-12);
        let numeric = flow.flow_at_numeric(2.0_f64.ln(), &[2.0]).unwrap();
        assert_abs_diff_eq!(numeric[0], 4.0, epsilon = 1e-8);
    }

    #[test]
    fn time_zero_is_the_identity() {
        let flow = flow_for(&planar_rotation());
        let x = vec![0.3, -1.2];
        assert_eq!(flow.flow_at(0.0, &x).unwrap(), x);
        assert_eq!(flow.flow_at_numeric(0.0, &x).unwrap(), x);
    }

    #[test]
    fn numeric_flow_matches_closed_forms_on_a_grid() {
        let tol = Tolerances::default();
        let specs = [
            unit_euler(),
            planar_rotation(),
            FieldSpec::Affine {
                matrix: vec![vec![0.0, 1.0], vec![-1.0, 0.0]],
                translation: vec![0.0, 0.0],
            },
        ];
        for spec in &specs {
            let flow = flow_for(spec);
            let dim = spec.dim();
            for k in 0..6 {
                let x: Vec<f64> = (0..dim).map(|i| 0.4 + 0.3 * ((i + k) % 4) as f64).collect();
                let t = -1.5 + 0.6 * k as f64;
                let exact = flow.flow_at(t, &x).unwrap();
                let numeric = flow.flow_at_numeric(t, &x).unwrap();
                let scale: f64 = x.iter().fold(0.0, |m, v| m.max(v.abs()));
                let budget = 100.0 * (tol.ode_abs + tol.ode_rel * scale);
                assert!(
                    max_abs_diff(&exact, &numeric) <= budget,
                    "closed form and stepper disagree for {spec:?} at t={t}"
                );
            }
        }
    }

    #[test]
    fn rotation_orbits_are_periodic() {
        let flow = flow_for(&planar_rotation());
        let x = vec![1.0, 0.5];
        let period = 2.0 * std::f64::consts::PI;
        let back = flow.flow_at_numeric(period, &x).unwrap();
        assert!(max_abs_diff(&back, &x) <= 1e-6);
    }

    #[test]
    fn affine_closed_form_satisfies_the_group_law_tightly() {
        let flow = flow_for(&FieldSpec::Affine {
            matrix: vec![vec![1.0, 0.0], vec![0.0, -1.0]],
            translation: vec![0.0, 0.0],
        });
        let samples: Vec<(f64, f64, Point)> = vec![
            (0.0, 0.0, vec![1.0, 2.0]),
            (0.7, -0.3, vec![0.5, -0.5]),
            (1.2, 0.4, vec![-1.0, 0.25]),
        ];
        let defect = check_semigroup(&flow, &samples).unwrap();
        assert!(defect <= 1e-12, "defect {defect}");
    }

    #[test]
    fn integrated_rotation_satisfies_the_group_law() {
        // Strip the closed form so the check exercises the stepper.
        let base = catalog_field(&planar_rotation()).unwrap();
        let stripped = VectorField::custom(base.domain().clone(), move |x| base.eval(x));
        let flow = FlowMap::new(stripped, Tolerances::default());
        let mut samples = Vec::new();
        for (i, t) in [-2.0, 0.9, 3.0].iter().enumerate() {
            samples.push((*t, 0.5 * (i as f64 - 1.0), vec![1.0, 0.3 * i as f64]));
        }
        let defect = check_semigroup(&flow, &samples).unwrap();
        assert!(defect <= 1e-6, "defect {defect}");
    }

    #[test]
    fn leaving_the_orthant_reports_domain_exit() {
        // g = 1 pushes points toward 0 under backward flow, but never out
        // of the orthant; a field with negative drift exits instead.
        let field = catalog_field(&FieldSpec::Affine {
            matrix: vec![vec![0.0]],
            translation: vec![-1.0],
        })
        .unwrap();
        // Restrict to the orthant by hand to force the exit.
        let restricted = VectorField::custom(
            crate::geometry::Domain::positive_orthant(1),
            move |x| field.eval(x),
        );
        let flow = FlowMap::new(restricted, Tolerances::default());
        let err = flow.flow_at(5.0, &[1.0]).unwrap_err();
        assert!(matches!(err, Error::DomainExit { .. }));
    }

    #[test]
    fn orbit_cache_extends_on_longer_requests() {
        let flow = flow_for(&unit_euler());
        let short = flow.orbit(&[1.0], 1.0).unwrap();
        assert!(short.t_final() >= 1.0);
        let long = flow.orbit(&[1.0], 2.0).unwrap();
        assert!(long.t_final() >= 2.0);
        // The cached long orbit now serves short requests too.
        let again = flow.orbit(&[1.0], 0.5).unwrap();
        assert!(again.t_final() >= 2.0);
    }

    #[test]
    fn starting_outside_the_domain_is_rejected() {
        let flow = flow_for(&unit_euler());
        let err = flow.flow_at(1.0, &[-1.0]).unwrap_err();
        match err {
            Error::DomainExit { time, .. } => assert_eq!(time, 0.0),
            other => panic!("expected DomainExit, got {other}"),
        }
    }
}
