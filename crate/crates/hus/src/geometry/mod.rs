//! Domains, vector fields, and flows.

mod domain;
mod field;
mod flow;

pub use domain::Domain;
pub use field::{catalog_field, euler_field, geodesic_field, FieldKind, FieldSpec, VectorField};
pub use flow::{check_semigroup, FlowMap};
