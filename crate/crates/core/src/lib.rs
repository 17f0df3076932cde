//! Optimal control of the Robin coefficient in a bilinear boundary value problem.
//!
//! The library discretizes the tracking-type problem
//!
//! ```text
//!   minimize  1/2 ||y - y_d||^2_{L2(Omega)} + alpha/2 ||u||^2_{L2(Gamma)}
//!   subject to  -Δy + y = f  in Omega,   ∂_n y + u y = g  on Gamma,
//!               u_a <= u <= u_b  on Gamma,
//! ```
//!
//! on the unit square with piecewise linear finite elements for the state and
//! piecewise constant controls on boundary edges.  The control enters the
//! bilinear form, so the reduced objective is genuinely non-quadratic; first
//! and second derivatives are provided through adjoint and tangent solves and
//! drive a primal-dual active set method.
//!
//! The crate is `no_std` (with `alloc`): the numerics carry no IO.  File
//! formats, the CLI and the convergence studies live in the companion crate
//! `robinopt-study`.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod cholesky;
pub mod control;
pub mod fem;
pub mod field;
pub mod mesh;
pub mod objective;
pub mod optimizer;
pub mod pde;
pub mod quad;
pub mod sparse;

pub use control::{BoundaryControl, BoundaryTrace, BoxBounds};
pub use fem::{P1Function, RobinSystem, SourceSpec};
pub use mesh::{Mesh, MeshHierarchy};
pub use optimizer::{SolveOptions, SolveReport, Termination};
pub use pde::PdeContext;
