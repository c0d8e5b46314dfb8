//! Block shifted inverse iteration, run to a tight residual on a single
//! level. Used as the independent reference for the multigrid estimates.
//!
//! Every iterate is projected onto the discretely divergence-free space, so
//! the result is an eigenpair of the mixed problem on that level. Without
//! the projection, mixtures of gradients and higher modes produce Ritz
//! values anywhere in the spectral gap around the shift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::subspace::{m_orthonormalize, rayleigh_ritz};
use super::{eigen_residual, fix_phase, EigenPairEstimate};
use crate::assembly::AssembledOperators;
use crate::linalg::{
    conjugate_gradient, dot, minres, BuiltPreconditioner, JacobiPreconditioner, KrylovOptions,
    PreconditionerKind, SparseMatrix, C64,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions {
    /// Residual every returned pair must reach.
    pub tol: f64,
    pub max_iter: usize,
    /// Random vectors added to the start block.
    pub guard: usize,
    /// Relative residual of each inner MINRES solve. The best iterate is
    /// used when the target is not reached.
    pub solve_tol: f64,
    pub solve_max_iter: usize,
    /// Preconditioner of the inner solves, built from `S + |shift| M`.
    pub preconditioner: PreconditionerKind,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            tol: 1e-10,
            max_iter: 60,
            guard: 2,
            solve_tol: 1e-8,
            solve_max_iter: 5000,
            preconditioner: PreconditionerKind::Jacobi,
            seed: 7,
        }
    }
}

/// Finds the `start.len()` eigenpairs of `(S, M)` near `shift` that `start`
/// approximates (usually prolonged coarse vectors). The block carries
/// `guard` extra vectors; among its Ritz pairs those with the largest
/// `M`-overlap with `span(start)` are returned, so a close neighbour on the
/// other side of the shift is not picked up instead.
///
/// Returned pairs are ascending, `a`-normalized and carry `level`.
pub fn inverse_iteration_oracle(
    ops: &AssembledOperators,
    start: &[Vec<C64>],
    shift: f64,
    level: usize,
    opts: &OracleOptions,
) -> Result<Vec<EigenPairEstimate>> {
    let q = start.len();
    let n = ops.n_edge;
    if q == 0 {
        return Ok(Vec::new());
    }
    if start.iter().any(|v| v.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: start.iter().map(Vec::len).find(|&l| l != n).unwrap_or(0),
        });
    }
    let width = (q + opts.guard).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let projector = DivergenceProjector::new(ops);
    let mut block: Vec<Vec<C64>> = start.iter().map(|v| projector.apply(v)).collect();
    let mut reference = block.clone();
    m_orthonormalize(&ops.mass, &mut reference, &mut rng);
    let overlap = |v: &[C64]| {
        let mv = ops.mass.mul_vec(v);
        reference
            .iter()
            .map(|r| dot(r, &mv).norm_sqr())
            .sum::<f64>()
            / dot(v, &mv).re
    };
    while block.len() < width {
        block.push(
            (0..n)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        );
    }

    let a = ops.shifted(shift);
    let precond = BuiltPreconditioner::build(opts.preconditioner, &ops.shifted(-shift.abs()))?;
    let krylov = KrylovOptions {
        tol: opts.solve_tol,
        max_iter: opts.solve_max_iter,
    };

    let mut worst = f64::INFINITY;
    for _iter in 0..opts.max_iter {
        m_orthonormalize(&ops.mass, &mut block, &mut rng);
        for x in block.iter_mut() {
            // (S − τM)⁻¹ M x is parallel to x − (S − τM)⁻¹ r with r = S x − θ M x.
            // The second form only needs r resolved to relative accuracy, so
            // the inner solve does not hit its rounding floor as x converges.
            let sx = ops.stiffness.mul_vec(x);
            let mx = ops.mass.mul_vec(x);
            let theta = dot(x, &sx).re / dot(x, &mx).re;
            let y = if (theta - shift).abs() > 1e-8 * shift.abs().max(1.0) {
                let r: Vec<C64> = sx.iter().zip(&mx).map(|(s, m)| s - m * theta).collect();
                let (z, _) = minres(&a, &r, krylov, Some(&precond));
                x.iter().zip(&z).map(|(u, v)| u - v).collect()
            } else {
                minres(&a, &mx, krylov, Some(&precond)).0
            };
            *x = projector.apply(&y);
        }
        m_orthonormalize(&ops.mass, &mut block, &mut rng);
        let (theta, vectors) = rayleigh_ritz(&ops.stiffness, &ops.mass, &block)?;
        let mut order: Vec<usize> = (0..theta.len()).collect();
        order.sort_by(|&i, &j| {
            (theta[i] - shift)
                .abs()
                .total_cmp(&(theta[j] - shift).abs())
        });
        let mut chosen = order.clone();
        chosen.sort_by(|&i, &j| overlap(&vectors[j]).total_cmp(&overlap(&vectors[i])));
        chosen.truncate(q);
        worst = chosen
            .iter()
            .map(|&i| eigen_residual(ops, theta[i], &vectors[i]))
            .fold(0.0, f64::max);
        // nearest first so the next sweep keeps the wanted directions in front
        block = order.iter().map(|&i| vectors[i].clone()).collect();
        if worst <= opts.tol {
            let mut idx = chosen;
            idx.sort_by(|&i, &j| theta[i].total_cmp(&theta[j]));
            return Ok(idx
                .into_iter()
                .map(|i| {
                    let mut u = vectors[i].clone();
                    let energy = dot(&u, &ops.stiffness.mul_vec(&u)).re;
                    let norm_mat = if energy > 0.0 {
                        energy
                    } else {
                        dot(&u, &ops.mass.mul_vec(&u)).re
                    };
                    let s = 1.0 / norm_mat.sqrt();
                    for v in u.iter_mut() {
                        *v *= s;
                    }
                    fix_phase(&mut u);
                    EigenPairEstimate {
                        lambda: theta[i],
                        residual: eigen_residual(ops, theta[i], &u),
                        vector: u,
                        multiplier: None,
                        level,
                    }
                })
                .collect());
        }
    }
    Err(Error::EigenNotConverged {
        iterations: opts.max_iter,
        residual: worst,
    })
}

/// `u ↦ u − G (B G)⁻¹ B u`, the `M`-orthogonal projection onto the kernel
/// of `B`.
pub(crate) struct DivergenceProjector<'a> {
    ops: &'a AssembledOperators,
    laplacian: SparseMatrix,
    precond: JacobiPreconditioner,
}

impl<'a> DivergenceProjector<'a> {
    pub(crate) fn new(ops: &'a AssembledOperators) -> Self {
        let laplacian = ops.coupling.mul(&ops.gradient);
        let precond = JacobiPreconditioner::from_matrix(&laplacian);
        DivergenceProjector {
            ops,
            laplacian,
            precond,
        }
    }

    pub(crate) fn apply(&self, u: &[C64]) -> Vec<C64> {
        if self.ops.n_vertex == 0 {
            return u.to_vec();
        }
        let bu = self.ops.coupling.mul_vec(u);
        let (p, _) = conjugate_gradient(
            &self.laplacian,
            &bu,
            KrylovOptions {
                tol: 1e-14,
                max_iter: 10 * self.ops.n_vertex.max(100),
            },
            Some(&self.precond),
        );
        let gp = self.ops.gradient.mul_vec(&p);
        u.iter().zip(&gp).map(|(a, b)| a - b).collect()
    }
}
