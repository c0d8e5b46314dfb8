//! Coarse mixed eigensolve by shift-invert subspace iteration.
//!
//! With `σ < 0` the block `S − σM` is Hermitian positive definite, so the
//! saddle operator `[[S − σM, Bᴴ], [B, 0]]` is invertible even when zero is
//! an eigenvalue. Applying its inverse to `[M v; 0]` keeps only the discretely
//! divergence-free part of `v`: the gradient kernel of `S` is filtered out,
//! while harmonic fields (physical zero modes) are kept and even amplified
//! the most.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::subspace::{m_orthonormalize, rayleigh_ritz};
use super::{eigen_residual, fix_phase, EigenPairEstimate, SpectrumResult};
use crate::assembly::AssembledOperators;
use crate::linalg::{
    conjugate_gradient, dot, norm, KrylovOptions, LinearOperator, SaddleSolver, SparseMatrix, C64,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CoarseOptions {
    /// Number of eigenpairs wanted.
    pub k: usize,
    /// Spectral shift, must be negative. `None` uses `−γ/β`.
    pub sigma: Option<f64>,
    /// Residual target for every returned pair.
    pub tol: f64,
    pub max_iter: usize,
    /// Relative gap below which neighbouring eigenvalues share a cluster.
    pub gap_tol: f64,
    /// Seed of the random start block.
    pub seed: u64,
    /// Dimension at or below which the saddle blocks are factored densely.
    pub dense_threshold: usize,
}

impl Default for CoarseOptions {
    fn default() -> Self {
        CoarseOptions {
            k: 6,
            sigma: None,
            tol: 1e-10,
            max_iter: 500,
            gap_tol: 1e-2,
            seed: 20_240_601,
            dense_threshold: crate::linalg::saddle::DENSE_THRESHOLD,
        }
    }
}

/// The `k` smallest eigenpairs of the mixed problem on the given level.
pub fn solve_coarse_eigen(
    ops: &AssembledOperators,
    opts: &CoarseOptions,
) -> Result<SpectrumResult> {
    if opts.k == 0 {
        return Err(Error::InvalidScheme(
            "at least one eigenpair must be requested".into(),
        ));
    }
    let sigma = opts.sigma.unwrap_or(-ops.constants.shift);
    if !(sigma < 0.0) {
        return Err(Error::InvalidScheme(format!(
            "coarse shift must be negative, got {sigma}"
        )));
    }
    let n = ops.n_edge;
    let available = n.saturating_sub(ops.n_vertex);
    if opts.k > available {
        return Err(Error::InvalidScheme(format!(
            "{} eigenpairs requested but the divergence-free space has dimension {available}",
            opts.k
        )));
    }
    let m = (opts.k + 4).max(2 * opts.k).min(available);

    let a = ops.shifted(sigma);
    let solver = SaddleSolver::with_dense_threshold(&a, &ops.coupling, opts.dense_threshold)?;
    let zero_g = vec![C64::new(0.0, 0.0); ops.n_vertex];
    let inner_tol = (opts.tol * 1e-3).max(1e-14);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut block: Vec<Vec<C64>> = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect()
        })
        .collect();

    let mut worst = f64::INFINITY;
    for _iter in 0..opts.max_iter {
        for x in block.iter_mut() {
            let f = ops.mass.mul_vec(x);
            let (u, _, _) = solver.solve(&f, &zero_g, inner_tol);
            *x = u;
        }
        m_orthonormalize(&ops.mass, &mut block, &mut rng);
        let (theta, vectors) = rayleigh_ritz(&ops.stiffness, &ops.mass, &block)?;
        block = vectors;
        worst = 0.0;
        for j in 0..opts.k {
            let r = eigen_residual(ops, theta[j], &block[j]);
            let bu = norm(&ops.coupling.mul_vec(&block[j])) / norm(&block[j]);
            worst = worst.max(r).max(bu);
        }
        if worst <= opts.tol {
            return Ok(finish(ops, &theta[..opts.k], &block[..opts.k], opts));
        }
    }
    Err(Error::EigenNotConverged {
        iterations: opts.max_iter,
        residual: worst,
    })
}

fn finish(
    ops: &AssembledOperators,
    theta: &[f64],
    vectors: &[Vec<C64>],
    opts: &CoarseOptions,
) -> SpectrumResult {
    let top = theta.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let first_nonzero = theta
        .iter()
        .copied()
        .find(|t| t.abs() > 1e-6 * top)
        .unwrap_or(top);
    let zero_cut = 1e-8 * first_nonzero.abs();

    let mut pairs = Vec::with_capacity(theta.len());
    let mut zero_modes = Vec::new();
    for (i, (&t, v)) in theta.iter().zip(vectors).enumerate() {
        let mut u = v.clone();
        let zero = t.abs() <= zero_cut;
        if zero {
            zero_modes.push(i);
        }
        // a-norm on nonzero modes, M-norm on the kernel
        let matrix = if zero { &ops.mass } else { &ops.stiffness };
        let scale = dot(&u, &matrix.mul_vec(&u)).re.sqrt();
        for x in u.iter_mut() {
            *x /= scale;
        }
        fix_phase(&mut u);
        let multiplier = multiplier(ops, t, &u);
        pairs.push(EigenPairEstimate {
            lambda: t,
            residual: eigen_residual(ops, t, &u),
            vector: u,
            multiplier: Some(multiplier),
            level: 0,
        });
    }
    let lambdas: Vec<f64> = pairs.iter().map(|p| p.lambda).collect();
    SpectrumResult {
        clusters: cluster_spectrum(&lambdas, opts.gap_tol),
        pairs,
        zero_modes,
    }
}

/// Least-squares multiplier `(B Bᴴ)⁻¹ B (λ M u − S u)`.
fn multiplier(ops: &AssembledOperators, lambda: f64, u: &[C64]) -> Vec<C64> {
    if ops.n_vertex == 0 {
        return Vec::new();
    }
    let su = ops.stiffness.mul_vec(u);
    let mu = ops.mass.mul_vec(u);
    let r: Vec<C64> = mu.iter().zip(&su).map(|(m, s)| m * lambda - s).collect();
    let rhs = ops.coupling.mul_vec(&r);
    if norm(&rhs) == 0.0 {
        return vec![C64::new(0.0, 0.0); ops.n_vertex];
    }
    struct Normal<'a>(&'a SparseMatrix, SparseMatrix);
    impl LinearOperator for Normal<'_> {
        fn dim(&self) -> usize {
            self.0.nrows()
        }
        fn apply(&self, x: &[C64], y: &mut [C64]) {
            let t = self.1.mul_vec(x);
            self.0.mul_vec_into(&t, y);
        }
    }
    let op = Normal(&ops.coupling, ops.coupling.adjoint());
    let (p, _) = conjugate_gradient(
        &op,
        &rhs,
        KrylovOptions {
            tol: 1e-12,
            max_iter: 10 * ops.n_vertex.max(100),
        },
        None,
    );
    p
}

/// Greedy clustering of a sorted sequence: neighbours join a cluster when
/// their relative gap is below `gap_tol`. Two numerically zero values always
/// join.
pub fn cluster_spectrum(lambdas: &[f64], gap_tol: f64) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, &l) in lambdas.iter().enumerate() {
        let joins = i > 0 && {
            let prev = lambdas[i - 1];
            let scale = prev.abs().max(l.abs());
            scale == 0.0
                || (l - prev).abs() / scale < gap_tol
                || (prev.abs() < 1e-10 && l.abs() < 1e-10)
        };
        if joins {
            clusters.last_mut().expect("joins implies i > 0").push(i);
        } else {
            clusters.push(vec![i]);
        }
    }
    clusters
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::assemble_operators;
    use crate::materials::MaterialMap;
    use crate::mesh::{build_topology, generate_mesh, DomainKind, DomainSpec};
    use std::f64::consts::PI;

    fn ops(kind: DomainKind, n: usize) -> AssembledOperators {
        let mesh = generate_mesh(&DomainSpec::new(kind), n).unwrap();
        let topo = build_topology(&mesh);
        let dim = mesh.dim();
        assemble_operators(&mesh, &topo, &MaterialMap::uniform(dim)).unwrap()
    }

    #[test]
    fn clustering_examples() {
        assert_eq!(
            cluster_spectrum(&[19.50, 19.51, 19.52, 30.4], 1e-2),
            vec![vec![0, 1, 2], vec![3]]
        );
        assert_eq!(cluster_spectrum(&[1.0], 1e-2), vec![vec![0]]);
        assert_eq!(
            cluster_spectrum(&[1e-13, 2e-12, 2.1], 1e-2),
            vec![vec![0, 1], vec![2]]
        );
        assert!(cluster_spectrum(&[], 1e-2).is_empty());
    }

    #[test]
    fn unit_cube_coarse_spectrum() {
        let o = ops(DomainKind::UnitCube, 4);
        let spec = solve_coarse_eigen(
            &o,
            &CoarseOptions {
                k: 6,
                ..Default::default()
            },
        )
        .unwrap();
        let l = spec.lambdas();
        assert!(spec.zero_modes.is_empty());
        assert_eq!(spec.clusters[0].len(), 3, "{l:?}");
        assert_eq!(spec.clusters[1].len(), 2, "{l:?}");
        assert!(l[0] > 0.75 * 2.0 * PI * PI);
        assert!((l[0] - 2.0 * PI * PI).abs() < 0.05 * 2.0 * PI * PI);
        assert!((l[3] - 3.0 * PI * PI).abs() < 0.05 * 3.0 * PI * PI);
        for p in &spec.pairs {
            assert!(p.residual <= 1e-10);
            assert!((p.recompute_residual(&o) - p.residual).abs() <= 1e-12);
            let a = dot(&p.vector, &o.stiffness.mul_vec(&p.vector));
            assert!((a.re - 1.0).abs() < 1e-12);
            assert!(a.im.abs() <= 1e-10 * a.re.abs());
            let mult = p.multiplier.as_ref().unwrap();
            assert!(norm(mult) <= 1e-10 * norm(&p.vector));
        }
    }

    #[test]
    fn shift_does_not_change_eigenvalues() {
        let o = ops(DomainKind::UnitCube, 3);
        let a = solve_coarse_eigen(
            &o,
            &CoarseOptions {
                k: 5,
                sigma: Some(-0.5),
                ..Default::default()
            },
        )
        .unwrap();
        let b = solve_coarse_eigen(
            &o,
            &CoarseOptions {
                k: 5,
                sigma: Some(-2.0),
                ..Default::default()
            },
        )
        .unwrap();
        for (x, y) in a.lambdas().iter().zip(b.lambdas()) {
            assert!((x - y).abs() <= 10.0 * 1e-10, "{x} {y}");
        }
    }

    #[test]
    fn positive_shift_and_oversized_requests_are_rejected() {
        let o = ops(DomainKind::UnitCube, 2);
        assert!(solve_coarse_eigen(
            &o,
            &CoarseOptions {
                sigma: Some(1.0),
                ..Default::default()
            }
        )
        .is_err());
        assert!(solve_coarse_eigen(
            &o,
            &CoarseOptions {
                k: 0,
                ..Default::default()
            }
        )
        .is_err());
        assert!(solve_coarse_eigen(
            &o,
            &CoarseOptions {
                k: 1000,
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn unit_square_spectrum_is_near_the_analytic_one() {
        let o = ops(DomainKind::UnitSquare2D, 8);
        let spec = solve_coarse_eigen(
            &o,
            &CoarseOptions {
                k: 6,
                ..Default::default()
            },
        )
        .unwrap();
        let want = [1.0, 1.0, 2.0, 4.0, 4.0, 5.0].map(|v| v * PI * PI);
        for (got, w) in spec.lambdas().iter().zip(want) {
            assert!((got - w).abs() < 0.06 * w, "{got} vs {w}");
        }
    }

    #[test]
    fn spectrum_json_has_one_record_per_pair() {
        let o = ops(DomainKind::UnitCube, 2);
        let spec = solve_coarse_eigen(
            &o,
            &CoarseOptions {
                k: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let mut buf = Vec::new();
        spec.write_json(&mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 3);
        assert!(v[0]["lambda"].as_f64().unwrap() > 0.0);
    }
}
