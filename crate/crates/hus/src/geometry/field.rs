//! Vector fields and the built-in example catalog.
//!
//! Catalog kinds cover the standard stock of complete fields: Euler fields
//! `g(x) x` with `g` homogeneous of degree zero on the positive orthant,
//! affine fields `Mx + v` with `Mv = 0`, block rotations, compactly
//! supported bump fields, and geodesic fields of a constant connection.
//! Closed-form flows are attached where they exist so numerical flows can
//! be cross-checked against oracles.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::domain::Domain;

const AFFINE_MV_TOL: f64 = 1e-12;
const HOMOGENEITY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Euler,
    Affine,
    Rotation,
    Bump,
    Geodesic,
    Custom,
}

impl fmt::Display for FieldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FieldKind::Euler => "euler",
            FieldKind::Affine => "affine",
            FieldKind::Rotation => "rotation",
            FieldKind::Bump => "bump",
            FieldKind::Geodesic => "geodesic",
            FieldKind::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Serializable catalog parameters, tagged by kind.
///
/// `euler` encodes `g(x) = offset + (weights . x) / (x_1 + ... + x_n)`,
/// which is homogeneous of degree zero on the positive orthant; `geodesic`
/// takes constant connection coefficients indexed `[i][j][j']`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FieldSpec {
    Euler {
        offset: f64,
        weights: Vec<f64>,
    },
    Affine {
        matrix: Vec<Vec<f64>>,
        translation: Vec<f64>,
    },
    Rotation {
        rates: Vec<f64>,
    },
    Bump {
        center: Vec<f64>,
        radius: f64,
        direction: Vec<f64>,
    },
    Geodesic {
        base_dim: usize,
        christoffel: Vec<Vec<Vec<f64>>>,
    },
}

impl FieldSpec {
    /// Ambient dimension of the field this spec builds.
    pub fn dim(&self) -> usize {
        match self {
            FieldSpec::Euler { weights, .. } => weights.len(),
            FieldSpec::Affine { translation, .. } => translation.len(),
            FieldSpec::Rotation { rates } => 2 * rates.len(),
            FieldSpec::Bump { center, .. } => center.len(),
            FieldSpec::Geodesic { base_dim, .. } => 2 * base_dim,
        }
    }
}

/// A vector field on a coordinate domain, with an optional exact flow.
#[derive(Clone)]
pub struct VectorField {
    domain: Domain,
    kind: FieldKind,
    eval: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
    closed_flow: Option<Arc<dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync>>,
}

impl VectorField {
    pub fn custom(
        domain: Domain,
        eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> VectorField {
        VectorField {
            domain,
            kind: FieldKind::Custom,
            eval: Arc::new(eval),
            closed_flow: None,
        }
    }

    pub fn with_closed_form(
        mut self,
        flow: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> VectorField {
        self.closed_flow = Some(Arc::new(flow));
        self
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.domain.dim());
        (self.eval)(x)
    }

    pub fn has_closed_form(&self) -> bool {
        self.closed_flow.is_some()
    }

    pub fn closed_form_flow(&self, t: f64, x: &[f64]) -> Option<Vec<f64>> {
        self.closed_flow.as_ref().map(|f| f(t, x))
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("kind", &self.kind)
            .field("domain", &self.domain)
            .field("closed_form", &self.has_closed_form())
            .finish()
    }
}

fn require(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParams(msg.into()))
    }
}

fn all_finite(values: impl IntoIterator<Item = f64>) -> bool {
    values.into_iter().all(|v| v.is_finite())
}

/// Euler field `g(x) x` for a user-supplied `g`, with the homogeneity of
/// `g` spot-checked on sample rays before the closed-form flow
/// `exp(t g(x)) x` is trusted.
pub fn euler_field(
    dim: usize,
    g: impl Fn(&[f64]) -> f64 + Send + Sync + Clone + 'static,
) -> Result<VectorField> {
    require(dim > 0, "euler field needs a positive dimension")?;
    for k in 0..4 {
        let x: Vec<f64> = (0..dim).map(|i| 0.3 + (i + k) as f64 * 0.7 / dim as f64).collect();
        let base = g(&x);
        for scale in [0.5, 2.0, 3.7] {
            let scaled: Vec<f64> = x.iter().map(|xi| scale * xi).collect();
            if (g(&scaled) - base).abs() > HOMOGENEITY_TOL {
                return Err(Error::InvalidParams(format!(
                    "euler coefficient is not homogeneous of degree zero: \
                     g({scale}*x) differs from g(x) by {:.3e}",
                    (g(&scaled) - base).abs()
                )));
            }
        }
    }
    let g_flow = g.clone();
    Ok(VectorField {
        domain: Domain::positive_orthant(dim),
        kind: FieldKind::Euler,
        eval: Arc::new(move |x: &[f64]| {
            let gx = g(x);
            x.iter().map(|xi| gx * xi).collect()
        }),
        closed_flow: Some(Arc::new(move |t: f64, x: &[f64]| {
            let factor = (t * g_flow(x)).exp();
            x.iter().map(|xi| factor * xi).collect()
        })),
    })
}

/// Geodesic field of a connection on R^k, written on phase space R^{2k}
/// as `(velocity, minus the quadratic connection term)`. `gamma(q)` returns
/// the coefficients `[i][j][j']` at base point `q`.
pub fn geodesic_field(
    base_dim: usize,
    gamma: impl Fn(&[f64]) -> Vec<Vec<Vec<f64>>> + Send + Sync + 'static,
) -> Result<VectorField> {
    require(base_dim > 0, "geodesic field needs a positive base dimension")?;
    let k = base_dim;
    Ok(VectorField {
        domain: Domain::all(2 * k),
        kind: FieldKind::Geodesic,
        eval: Arc::new(move |x: &[f64]| {
            let q = &x[..k];
            let p = &x[k..];
            let coeffs = gamma(q);
            let mut out = Vec::with_capacity(2 * k);
            out.extend_from_slice(p);
            for i in 0..k {
                let mut acc = 0.0;
                for j in 0..k {
                    for jp in 0..k {
                        acc += coeffs[i][j][jp] * p[j] * p[jp];
                    }
                }
                out.push(-acc);
            }
            out
        }),
        closed_flow: None,
    })
}

/// Builds a catalog field, validating the parameters for its kind.
pub fn catalog_field(spec: &FieldSpec) -> Result<VectorField> {
    match spec {
        FieldSpec::Euler { offset, weights } => {
            let dim = weights.len();
            require(
                all_finite(weights.iter().copied()) && offset.is_finite(),
                "euler parameters must be finite",
            )?;
            let offset = *offset;
            let w = weights.clone();
            euler_field(dim, move |x: &[f64]| {
                let dot: f64 = w.iter().zip(x).map(|(wi, xi)| wi * xi).sum();
                let total: f64 = x.iter().sum();
                offset + dot / total
            })
        }
        FieldSpec::Affine {
            matrix,
            translation,
        } => {
            let n = translation.len();
            require(n > 0, "affine field needs a positive dimension")?;
            require(
                matrix.len() == n && matrix.iter().all(|row| row.len() == n),
                format!("affine matrix must be {n}x{n} to match the translation"),
            )?;
            require(
                all_finite(matrix.iter().flatten().copied())
                    && all_finite(translation.iter().copied()),
                "affine parameters must be finite",
            )?;
            let m = DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
            let v = DVector::from_column_slice(translation);
            let mv = &m * &v;
            let mv_norm = mv.amax();
            require(
                mv_norm <= AFFINE_MV_TOL,
                format!(
                    "affine field requires the matrix to annihilate the \
                     translation; |Mv| = {mv_norm:.3e} exceeds {AFFINE_MV_TOL:.0e}"
                ),
            )?;
            let m_eval = m.clone();
            let v_eval = v.clone();
            Ok(VectorField {
                domain: Domain::all(n),
                kind: FieldKind::Affine,
                eval: Arc::new(move |x: &[f64]| {
                    let xv = DVector::from_column_slice(x);
                    let out = &m_eval * xv + &v_eval;
                    out.iter().copied().collect()
                }),
                closed_flow: Some(Arc::new(move |t: f64, x: &[f64]| {
                    let xv = DVector::from_column_slice(x);
                    let out = (m.clone() * t).exp() * xv + t * &v;
                    out.iter().copied().collect()
                })),
            })
        }
        FieldSpec::Rotation { rates } => {
            require(!rates.is_empty(), "rotation field needs at least one plane")?;
            require(
                all_finite(rates.iter().copied()),
                "rotation rates must be finite",
            )?;
            let rates_eval = rates.clone();
            let rates_flow = rates.clone();
            let n = 2 * rates.len();
            Ok(VectorField {
                domain: Domain::all(n),
                kind: FieldKind::Rotation,
                eval: Arc::new(move |x: &[f64]| {
                    let mut out = vec![0.0; x.len()];
                    for (j, rate) in rates_eval.iter().enumerate() {
                        out[2 * j] = -rate * x[2 * j + 1];
                        out[2 * j + 1] = rate * x[2 * j];
                    }
                    out
                }),
                closed_flow: Some(Arc::new(move |t: f64, x: &[f64]| {
                    let mut out = vec![0.0; x.len()];
                    for (j, rate) in rates_flow.iter().enumerate() {
                        let (s, c) = (rate * t).sin_cos();
                        out[2 * j] = c * x[2 * j] - s * x[2 * j + 1];
                        out[2 * j + 1] = s * x[2 * j] + c * x[2 * j + 1];
                    }
                    out
                })),
            })
        }
        FieldSpec::Bump {
            center,
            radius,
            direction,
        } => {
            let n = center.len();
            require(n > 0, "bump field needs a positive dimension")?;
            require(
                direction.len() == n,
                "bump direction must match the center's dimension",
            )?;
            require(
                all_finite(center.iter().copied())
                    && all_finite(direction.iter().copied())
                    && radius.is_finite()
                    && *radius > 0.0,
                "bump parameters must be finite with a positive radius",
            )?;
            let center = center.clone();
            let direction = direction.clone();
            let r2 = radius * radius;
            Ok(VectorField {
                domain: Domain::all(n),
                kind: FieldKind::Bump,
                eval: Arc::new(move |x: &[f64]| {
                    let u: f64 = x
                        .iter()
                        .zip(&center)
                        .map(|(xi, ci)| (xi - ci) * (xi - ci))
                        .sum::<f64>()
                        / r2;
                    // Mollifier profile: 1 at the center, identically 0
                    // outside the ball, smooth across the boundary.
                    let amp = if u < 1.0 {
                        (1.0 - 1.0 / (1.0 - u)).exp()
                    } else {
                        0.0
                    };
                    direction.iter().map(|di| amp * di).collect()
                }),
                closed_flow: None,
            })
        }
        FieldSpec::Geodesic {
            base_dim,
            christoffel,
        } => {
            let k = *base_dim;
            require(
                christoffel.len() == k
                    && christoffel
                        .iter()
                        .all(|a| a.len() == k && a.iter().all(|b| b.len() == k)),
                format!("connection coefficients must form a {k}x{k}x{k} array"),
            )?;
            require(
                all_finite(christoffel.iter().flatten().flatten().copied()),
                "connection coefficients must be finite",
            )?;
            let coeffs = christoffel.clone();
            geodesic_field(k, move |_q: &[f64]| coeffs.clone())
        }
    }
}
