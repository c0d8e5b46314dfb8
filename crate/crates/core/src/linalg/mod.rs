//! Complex linear algebra: CSR matrices, Krylov solvers, small dense
//! factorizations and the saddle-point solve used by the coarse eigensolver.

pub mod dense;
pub mod ichol;
pub mod krylov;
pub mod saddle;
pub mod sparse;

pub use dense::{
    dense_factor_solve, generalized_hermitian_eigen, hermitian_eigen, DenseLu, DenseMatrix,
};
pub use ichol::{BuiltPreconditioner, IncompleteCholesky, PreconditionerKind};
pub use krylov::{
    conjugate_gradient, krylov_solve, minres, JacobiPreconditioner, KrylovOptions, LinearOperator,
    Preconditioner, SolveMethod, SolveReport,
};
pub use saddle::{saddle_solve, SaddleSolver};
pub use sparse::{SparseMatrix, Triplet};

pub type C64 = num_complex::Complex64;

/// `xᴴ y`.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// `y += alpha x`.
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(alpha: C64, x: &mut [C64]) {
    for v in x {
        *v *= alpha;
    }
}

/// Inner product `xᴴ A y` for a Hermitian sparse `A`.
pub fn form(a: &SparseMatrix, x: &[C64], y: &[C64]) -> C64 {
    let ay = a.mul_vec(y);
    dot(x, &ay)
}
