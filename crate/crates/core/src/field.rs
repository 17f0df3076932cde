//! Descriptions of problem data: scalar fields on the domain and its boundary.
//!
//! Assembly routines accept data in whichever form it naturally exists —
//! closed-form callables for manufactured solutions, per-edge constants for
//! discrete boundary data, or piecewise linear functions living on a nested
//! finer mesh.  The last variant is what keeps the benchmark honest: the
//! desired state is computed once on a fine reference mesh and then enters
//! coarse-level integrals exactly, instead of being re-sampled through
//! quadrature on every level.

use crate::mesh::Mesh;

/// Piecewise linear data on a nested equal-or-finer mesh.
#[derive(Clone, Copy)]
pub struct NestedP1<'a> {
    /// Mesh carrying the data (the finer one).
    pub mesh: &'a Mesh,
    /// One value per vertex of `mesh`.
    pub values: &'a [f64],
    /// For each triangle of `mesh`, the containing triangle of the coarser
    /// mesh that assembly runs on (identity when the meshes coincide).
    pub to_coarse: &'a [usize],
}

/// Scalar field on the domain.
#[derive(Clone, Copy)]
pub enum DomainField<'a> {
    Zero,
    Constant(f64),
    /// Closed-form field, evaluated at quadrature points.
    Function(&'a dyn Fn(f64, f64) -> f64),
    /// P1 data on a nested finer mesh; integrated exactly.
    Nested(NestedP1<'a>),
}

/// Scalar field on the boundary.
#[derive(Clone, Copy)]
pub enum BoundaryField<'a> {
    Zero,
    Constant(f64),
    /// Closed-form field, evaluated at boundary quadrature points.
    Function(&'a dyn Fn(f64, f64) -> f64),
    /// One constant per boundary edge, in boundary-loop order.
    PerEdge(&'a [f64]),
}

impl<'a> DomainField<'a> {
    /// Pointwise evaluation for the closed-form variants.
    ///
    /// # Panics
    /// Panics on [`DomainField::Nested`]: nested data has no pointwise form
    /// without a point-location structure; assembly integrates it per fine
    /// triangle instead.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            DomainField::Zero => 0.0,
            DomainField::Constant(c) => *c,
            DomainField::Function(f) => f(x, y),
            DomainField::Nested(_) => {
                panic!("nested fields are integrated trianglewise, not evaluated pointwise")
            }
        }
    }
}

impl<'a> BoundaryField<'a> {
    /// Evaluation at a point of boundary edge `edge`.
    pub fn eval_on_edge(&self, edge: usize, x: f64, y: f64) -> f64 {
        match self {
            BoundaryField::Zero => 0.0,
            BoundaryField::Constant(c) => *c,
            BoundaryField::Function(f) => f(x, y),
            BoundaryField::PerEdge(vals) => vals[edge],
        }
    }
}
