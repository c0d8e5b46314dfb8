//! Maxwell cavity eigenvalues with lowest-order Nédélec edge elements.
//!
//! The crate computes the smallest eigenvalues of
//! `curl(μ⁻¹ curl u) = λ ε u`, `div(ε u) = 0` with perfect-conductor walls.
//! A mixed saddle-point eigenproblem is solved once on a coarse mesh (this
//! captures physical zero modes and excludes the spurious gradient kernel),
//! and each target eigenpair is then improved on a nested hierarchy of
//! refined meshes with one shifted linear solve per level, using either a
//! Rayleigh-quotient shift or a shift frozen after a given level.
//!
//! Module map:
//!
//! - [`mesh`]: structured simplicial meshes, red/green refinement, edge topology, ASCII IO.
//! - [`materials`]: piecewise-constant Hermitian `μ`, `ε` and their coercivity constants.
//! - [`assembly`]: curl-curl, mass, gradient-coupling and incidence matrices, level transfer.
//! - [`linalg`]: CSR storage, MINRES/CG, dense LU and Hermitian eigensolvers, saddle solves.
//! - [`eigen`]: coarse mixed eigensolver, spectrum clustering, converged inverse-iteration oracle.
//! - [`multigrid`]: the two multilevel schemes and their traces.
//! - [`report`]: experiment configuration, convergence tables, rates and reference checks.
//!
//! The `book/` directory at the repository root walks through the same
//! material with runnable snippets; those snippets are compiled as doctests.

// index loops mirror the formulas; `!(x > 0.0)` also rejects NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod eigen;
pub mod error;
pub mod linalg;
pub mod materials;
pub mod mesh;
pub mod multigrid;
pub mod report;

pub use error::{Error, Result};
pub use linalg::C64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/meshes.md")]
    mod meshes {}
    #[doc = include_str!("../../../book/src/materials.md")]
    mod materials {}
    #[doc = include_str!("../../../book/src/edge_elements.md")]
    mod edge_elements {}
    #[doc = include_str!("../../../book/src/linear_solvers.md")]
    mod linear_solvers {}
    #[doc = include_str!("../../../book/src/coarse_eigensolver.md")]
    mod coarse_eigensolver {}
    #[doc = include_str!("../../../book/src/multigrid.md")]
    mod multigrid {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
