//! Krylov solvers for Hermitian systems.
//!
//! [`minres`] handles indefinite Hermitian matrices, which is what the
//! shifted level solves produce once the shift passes the lowest
//! eigenvalues. [`conjugate_gradient`] is used for the positive definite
//! Schur complement of the saddle-point solve.

use serde::{Deserialize, Serialize};

use super::{axpy, dot, norm, SparseMatrix, C64};
use crate::{Error, Result};

pub trait LinearOperator {
    fn dim(&self) -> usize;
    /// `y = A x`; `y` is fully overwritten.
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

impl LinearOperator for SparseMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.mul_vec_into(x, y);
    }
}

/// A Hermitian positive definite approximation of `A⁻¹`.
pub trait Preconditioner {
    fn apply(&self, r: &[C64], z: &mut [C64]);
}

#[derive(Debug, Clone)]
pub struct JacobiPreconditioner {
    inv_diag: Vec<f64>,
}

impl JacobiPreconditioner {
    /// Uses `1/|a_ii|`; zero diagonal entries fall back to 1.
    pub fn from_diagonal(diag: &[C64]) -> Self {
        let inv_diag = diag
            .iter()
            .map(|d| {
                let a = d.norm();
                if a > 0.0 {
                    1.0 / a
                } else {
                    1.0
                }
            })
            .collect();
        JacobiPreconditioner { inv_diag }
    }

    pub fn from_matrix(a: &SparseMatrix) -> Self {
        Self::from_diagonal(&a.diagonal())
    }
}

impl Preconditioner for JacobiPreconditioner {
    fn apply(&self, r: &[C64], z: &mut [C64]) {
        for ((zi, ri), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * d;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Minres,
    ConjugateGradient,
    DenseLu,
    SchurComplement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `‖A x - b‖ / ‖b‖`, recomputed from the returned iterate.
    pub relative_residual: f64,
    pub converged: bool,
    pub method: SolveMethod,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions {
            tol: 1e-10,
            max_iter: 5000,
        }
    }
}

fn true_residual(a: &dyn LinearOperator, x: &[C64], b: &[C64], bnorm: f64) -> f64 {
    let mut ax = vec![C64::new(0.0, 0.0); b.len()];
    a.apply(x, &mut ax);
    let r: f64 = ax
        .iter()
        .zip(b)
        .map(|(u, v)| (u - v).norm_sqr())
        .sum::<f64>()
        .sqrt();
    r / bnorm
}

/// Condition estimate at which MINRES treats `A` as singular and stops.
const ACOND_LIMIT: f64 = 1e-4 / f64::EPSILON;

/// Preconditioned MINRES (Paige-Saunders) for Hermitian, possibly indefinite `A`.
///
/// The recurrence monitors the residual in the preconditioner norm; when that
/// estimate meets the target the true residual is checked and the internal
/// target tightened if the two disagree. The returned iterate is the last
/// one, which minimizes the preconditioned residual over the Krylov space.
/// When `A` is found numerically singular the iteration stops early, with
/// `x` dominated by the null direction.
pub fn minres(
    a: &dyn LinearOperator,
    b: &[C64],
    opts: KrylovOptions,
    precond: Option<&dyn Preconditioner>,
) -> (Vec<C64>, SolveReport) {
    let n = a.dim();
    assert_eq!(b.len(), n);
    let zero = C64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let bnorm = norm(b);
    let report = |iterations, relative_residual: f64| SolveReport {
        iterations,
        relative_residual,
        converged: relative_residual <= opts.tol,
        method: SolveMethod::Minres,
    };
    if bnorm == 0.0 {
        return (x, report(0, 0.0));
    }
    let apply_m = |r: &[C64], z: &mut [C64]| match precond {
        Some(p) => p.apply(r, z),
        None => z.copy_from_slice(r),
    };

    let mut r1 = b.to_vec();
    let mut y = vec![zero; n];
    apply_m(&r1, &mut y);
    let beta1 = dot(&r1, &y).re;
    if !(beta1 > 0.0) {
        // preconditioner not positive definite on b
        return (x, report(0, 1.0));
    }
    let beta1 = beta1.sqrt();
    let mut r2 = r1.clone();
    let mut oldb = 0.0;
    let mut beta = beta1;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0;
    let mut sn = 0.0;
    let mut w = vec![zero; n];
    let mut w2 = vec![zero; n];
    let mut v = vec![zero; n];
    let mut target = opts.tol;
    let mut iterations = 0;
    let (mut gmax, mut gmin) = (0.0f64, f64::INFINITY);
    let mut tnorm2 = 0.0;

    while iterations < opts.max_iter {
        iterations += 1;
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = yi * s;
        }
        a.apply(&v, &mut y);
        if iterations >= 2 {
            axpy(C64::new(-beta / oldb, 0.0), &r1, &mut y);
        }
        let alfa = dot(&v, &y).re;
        axpy(C64::new(-alfa / beta, 0.0), &r2, &mut y);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        apply_m(&r2, &mut y);
        oldb = beta;
        let bb = dot(&r2, &y).re;
        if !bb.is_finite() || bb < 0.0 {
            break;
        }
        beta = bb.sqrt();
        tnorm2 += alfa * alfa + oldb * oldb + beta * beta;

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;

        let gamma = gbar.hypot(beta).max(f64::EPSILON * beta1);
        gmax = gmax.max(gamma);
        gmin = gmin.min(gamma);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let denom = 1.0 / gamma;
        // w_new = (v - oldeps w1 - delta w2) / gamma with (w1, w2) = (w2, w)
        for i in 0..n {
            let w1 = w2[i];
            w2[i] = w[i];
            w[i] = (v[i] - w1 * oldeps - w2[i] * delta) * denom;
            x[i] += w[i] * phi;
        }

        if beta == 0.0 || phibar / beta1 <= target {
            let rel = true_residual(a, &x, b, bnorm);
            if rel <= opts.tol || beta == 0.0 {
                return (x, report(iterations, rel));
            }
            target = (target * 0.5 * opts.tol / rel).max(f64::EPSILON);
        }
        // x has converged to a null vector of A: the condition estimate
        // blew up or x is so large that its rounding error exceeds b
        if gmax >= ACOND_LIMIT * gmin || tnorm2.sqrt() * norm(&x) * f64::EPSILON >= beta1 {
            break;
        }
    }
    let rel = true_residual(a, &x, b, bnorm);
    (x, report(iterations, rel))
}

/// Preconditioned conjugate gradients for Hermitian positive definite `A`.
pub fn conjugate_gradient(
    a: &dyn LinearOperator,
    b: &[C64],
    opts: KrylovOptions,
    precond: Option<&dyn Preconditioner>,
) -> (Vec<C64>, SolveReport) {
    let n = a.dim();
    assert_eq!(b.len(), n);
    let zero = C64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let bnorm = norm(b);
    let report = |iterations, relative_residual: f64| SolveReport {
        iterations,
        relative_residual,
        converged: relative_residual <= opts.tol,
        method: SolveMethod::ConjugateGradient,
    };
    if bnorm == 0.0 {
        return (x, report(0, 0.0));
    }
    let apply_m = |r: &[C64], z: &mut [C64]| match precond {
        Some(p) => p.apply(r, z),
        None => z.copy_from_slice(r),
    };
    let mut r = b.to_vec();
    let mut z = vec![zero; n];
    apply_m(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z).re;
    let mut ap = vec![zero; n];
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        a.apply(&p, &mut ap);
        let pap = dot(&p, &ap).re;
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        axpy(C64::new(alpha, 0.0), &p, &mut x);
        axpy(C64::new(-alpha, 0.0), &ap, &mut r);
        if norm(&r) / bnorm <= opts.tol {
            let rel = true_residual(a, &x, b, bnorm);
            if rel <= opts.tol {
                return (x, report(iterations, rel));
            }
        }
        apply_m(&r, &mut z);
        let rz_new = dot(&r, &z).re;
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + *pi * beta;
        }
    }
    let rel = true_residual(a, &x, b, bnorm);
    (x, report(iterations, rel))
}

/// MINRES on a sparse Hermitian matrix, with an optional preconditioner.
///
/// Non-convergence is not an error: the best iterate is returned with
/// `converged = false`.
pub fn krylov_solve(
    a: &SparseMatrix,
    b: &[C64],
    tol: f64,
    max_iter: usize,
    precond: Option<&dyn Preconditioner>,
) -> Result<(Vec<C64>, SolveReport)> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.len(),
        });
    }
    let defect = a.hermitian_defect();
    if defect > 1e-10 {
        return Err(Error::NotHermitian(defect));
    }
    Ok(minres(a, b, KrylovOptions { tol, max_iter }, precond))
}
