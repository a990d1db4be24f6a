//! Constructive stability for first-order linear PDEs along vector fields.
//!
//! The equation of interest is `Vy = lambda * y + f` for a vector field `V`
//! on a domain in R^n, a spectral parameter `lambda` with nonzero real
//! part, and a forcing term `f`. Given a function `y` that satisfies the
//! equation only up to a uniformly small defect, this crate constructs an
//! exact solution `z` by integrating the defect along the flow of `V`,
//!
//! `z(x) = y(x) + integral of alpha(Phi(s, x)) exp(-lambda s) over [0, w)`,
//!
//! where `alpha = Vy - lambda y - f` is the defect, `Phi` is the flow, and
//! the window end `w` is plus or minus infinity according to the sign of
//! `Re lambda`. The distance between `y` and `z` is then at most the defect
//! size divided by `|Re lambda|`, and the crate verifies that bound
//! numerically on sampled grids.
//!
//! Layout: [`numerics`] holds the ODE, quadrature, and differentiation
//! kernels; [`geometry`] the domains, the vector-field catalog, and flow
//! maps; [`correction`] the defect-integral construction itself;
//! [`harness`] perturbation experiments that exercise the bound end to end;
//! [`config`] and [`cli`] the file format and command-line front end.

pub mod cli;
pub mod correction;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod numerics;
pub mod types;

pub use error::{Error, Result, Stage};
