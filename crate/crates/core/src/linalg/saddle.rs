//! Saddle-point systems `[[A, Bᴴ], [B, 0]] [u; p] = [f; g]` with Hermitian
//! positive definite `A` and full-row-rank `B`, solved through the Schur
//! complement `B A⁻¹ Bᴴ`.

use std::cell::Cell;

use super::krylov::{conjugate_gradient, minres};
use super::{
    norm, DenseLu, JacobiPreconditioner, KrylovOptions, LinearOperator, SolveMethod, SolveReport,
    SparseMatrix, C64,
};
use crate::{Error, Result};

/// Systems at or below this dimension are factored densely.
pub const DENSE_THRESHOLD: usize = 3000;

enum InnerSolver {
    /// Dense LU of `A` and of the Schur complement `B A⁻¹ Bᴴ`.
    Dense(DenseLu, Option<DenseLu>),
    Krylov(JacobiPreconditioner),
}

/// A saddle-point operator with its `A` block prepared for repeated solves.
pub struct SaddleSolver<'a> {
    a: &'a SparseMatrix,
    b: &'a SparseMatrix,
    bh: SparseMatrix,
    inner: InnerSolver,
    inner_failures: Cell<usize>,
}

impl<'a> SaddleSolver<'a> {
    pub fn new(a: &'a SparseMatrix, b: &'a SparseMatrix) -> Result<Self> {
        Self::with_dense_threshold(a, b, DENSE_THRESHOLD)
    }

    pub fn with_dense_threshold(
        a: &'a SparseMatrix,
        b: &'a SparseMatrix,
        dense_threshold: usize,
    ) -> Result<Self> {
        if a.nrows() != a.ncols() || b.ncols() != a.nrows() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: b.ncols(),
            });
        }
        let bh = b.adjoint();
        let inner = if a.nrows() <= dense_threshold {
            let lu = DenseLu::factor(a.to_dense())?;
            let nv = b.nrows();
            let schur = if nv == 0 {
                None
            } else {
                // columns of A⁻¹ Bᴴ, then B times them
                let bh_dense = bh.to_dense();
                let mut sc = super::DenseMatrix::zeros(nv, nv);
                for j in 0..nv {
                    let z = lu.solve(&bh_dense.column(j));
                    let col = b.mul_vec(&z);
                    for i in 0..nv {
                        sc[(i, j)] = col[i];
                    }
                }
                Some(DenseLu::factor(sc)?)
            };
            InnerSolver::Dense(lu, schur)
        } else {
            InnerSolver::Krylov(JacobiPreconditioner::from_matrix(a))
        };
        Ok(SaddleSolver {
            a,
            b,
            bh,
            inner,
            inner_failures: Cell::new(0),
        })
    }

    fn solve_a(&self, rhs: &[C64], tol: f64) -> Vec<C64> {
        match &self.inner {
            InnerSolver::Dense(lu, _) => lu.solve(rhs),
            InnerSolver::Krylov(p) => {
                let (x, rep) = conjugate_gradient(
                    self.a,
                    rhs,
                    KrylovOptions {
                        tol,
                        max_iter: 20 * self.a.nrows().max(100),
                    },
                    Some(p),
                );
                if !rep.converged {
                    // CG should not stall on an HPD block; MINRES is the fallback
                    let (x2, rep2) = minres(
                        self.a,
                        rhs,
                        KrylovOptions {
                            tol,
                            max_iter: 20 * self.a.nrows().max(100),
                        },
                        Some(p),
                    );
                    if !rep2.converged {
                        self.inner_failures.set(self.inner_failures.get() + 1);
                    }
                    return if rep2.relative_residual < rep.relative_residual {
                        x2
                    } else {
                        x
                    };
                }
                x
            }
        }
    }

    /// Solves the saddle system to relative residual `tol` on the full
    /// block system.
    pub fn solve(&self, f: &[C64], g: &[C64], tol: f64) -> (Vec<C64>, Vec<C64>, SolveReport) {
        let inner_tol = (tol * 1e-2).max(1e-15);
        let nv = self.b.nrows();
        let ainv_f = self.solve_a(f, inner_tol);
        // Schur rhs: B A⁻¹ f - g
        let mut rhs = self.b.mul_vec(&ainv_f);
        for (r, gi) in rhs.iter_mut().zip(g) {
            *r -= gi;
        }
        let schur = Schur {
            solver: self,
            inner_tol,
        };
        let (p, cg) = if nv == 0 {
            (Vec::new(), None)
        } else if let InnerSolver::Dense(_, Some(schur_lu)) = &self.inner {
            (schur_lu.solve(&rhs), None)
        } else {
            let (p, rep) = conjugate_gradient(
                &schur,
                &rhs,
                KrylovOptions {
                    tol: tol * 0.1,
                    max_iter: 10 * nv.max(50),
                },
                None,
            );
            (p, Some(rep))
        };
        // u = A⁻¹ (f - Bᴴ p)
        let mut rhs_u = f.to_vec();
        if nv > 0 {
            let bhp = self.bh.mul_vec(&p);
            for (r, v) in rhs_u.iter_mut().zip(&bhp) {
                *r -= v;
            }
        }
        let u = self.solve_a(&rhs_u, inner_tol);
        let rel = saddle_residual(self.a, self.b, &u, &p, f, g);
        let report = SolveReport {
            iterations: cg.as_ref().map_or(0, |r| r.iterations),
            relative_residual: rel,
            converged: rel <= tol && self.inner_failures.get() == 0,
            method: if matches!(self.inner, InnerSolver::Dense(..)) {
                SolveMethod::DenseLu
            } else {
                SolveMethod::SchurComplement
            },
        };
        (u, p, report)
    }
}

struct Schur<'s, 'a> {
    solver: &'s SaddleSolver<'a>,
    inner_tol: f64,
}

impl LinearOperator for Schur<'_, '_> {
    fn dim(&self) -> usize {
        self.solver.b.nrows()
    }
    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let t = self.solver.bh.mul_vec(x);
        let t = self.solver.solve_a(&t, self.inner_tol);
        self.solver.b.mul_vec_into(&t, y);
    }
}

/// `‖[A u + Bᴴ p - f; B u - g]‖ / ‖[f; g]‖`.
pub fn saddle_residual(
    a: &SparseMatrix,
    b: &SparseMatrix,
    u: &[C64],
    p: &[C64],
    f: &[C64],
    g: &[C64],
) -> f64 {
    let mut r1 = a.mul_vec(u);
    if !p.is_empty() {
        let bhp = b
            .matvec_adjoint(p)
            .expect("multiplier length matches B rows");
        for (r, v) in r1.iter_mut().zip(&bhp) {
            *r += v;
        }
    }
    for (r, fi) in r1.iter_mut().zip(f) {
        *r -= fi;
    }
    let mut r2 = b.mul_vec(u);
    for (r, gi) in r2.iter_mut().zip(g) {
        *r -= gi;
    }
    let num = (norm(&r1).powi(2) + norm(&r2).powi(2)).sqrt();
    let den = (norm(f).powi(2) + norm(g).powi(2)).sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}

/// One-shot saddle solve; see [`SaddleSolver`] for repeated right-hand sides.
pub fn saddle_solve(
    a: &SparseMatrix,
    b: &SparseMatrix,
    f: &[C64],
    g: &[C64],
    tol: f64,
) -> Result<(Vec<C64>, Vec<C64>, SolveReport)> {
    if f.len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: f.len(),
        });
    }
    if g.len() != b.nrows() {
        return Err(Error::DimensionMismatch {
            expected: b.nrows(),
            found: g.len(),
        });
    }
    Ok(SaddleSolver::new(a, b)?.solve(f, g, tol))
}
