//! Multilevel shifted inverse iteration.
//!
//! A coarse eigenpair is carried up a nested hierarchy with one shifted
//! solve `(S − τ M) u′ = M u` per level. The unconstrained shifted system is
//! used on fine levels; the coarse start vector is already discretely
//! divergence-free and the shift keeps gradient components small.

mod hierarchy;
mod scheme;
mod trace;

pub use hierarchy::{Hierarchy, Level, Refinement};
pub use scheme::{
    advance_level, rayleigh_quotient, run_scheme, shifted_solve, solve_shifted_system,
    ClusterOrthogonalization, LevelSolveOptions, LevelStep, Scheme, SchemeConfig, SchemeOutput,
    ShiftedSolution, FORM_IMAG_TOL,
};
pub use trace::{IterationTrace, TraceRecord};
