//! Shared helpers of the integration tests: test meshes, a dense
//! brute-force solve of the constrained eigenproblem and the identity checks.

#![allow(dead_code)]

use std::path::PathBuf;

use maxwell_mg::assembly::AssembledOperators;
use maxwell_mg::eigen::{solve_coarse_eigen, CoarseOptions, SpectrumResult};
use maxwell_mg::linalg::{dot, SparseMatrix};
use maxwell_mg::materials::{HermitianTensor, Material, MaterialMap};
use maxwell_mg::mesh::{build_topology, generate_mesh, DomainKind, DomainSpec, Mesh};
use maxwell_mg::multigrid::{Hierarchy, Refinement};
use maxwell_mg::report::ExperimentConfig;
use maxwell_mg::C64;
use nalgebra::{DMatrix, DVector};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn config(name: &str) -> ExperimentConfig {
    ExperimentConfig::from_path(repo_root().join("configs").join(name)).unwrap()
}

pub fn mesh(kind: DomainKind, resolution: usize) -> Mesh {
    generate_mesh(&DomainSpec::new(kind), resolution).unwrap()
}

pub const ALL_DOMAINS: [DomainKind; 5] = [
    DomainKind::UnitCube,
    DomainKind::ThickL,
    DomainKind::Slab,
    DomainKind::CubeCavity,
    DomainKind::UnitSquare2D,
];

/// Vacuum in every region of `mesh`.
pub fn vacuum(mesh: &Mesh) -> MaterialMap {
    let mut map = MaterialMap::new(mesh.dim());
    for c in 0..mesh.num_cells() {
        map.insert(mesh.region(c), Material::vacuum(mesh.dim()));
    }
    map
}

/// The complex Hermitian `μ` of the thick-L benchmark.
pub fn complex_mu() -> HermitianTensor {
    let c = C64::new;
    HermitianTensor::from_rows(&[
        vec![c(2.0, 0.0), c(1.0, -2.0), c(0.0, -1.0)],
        vec![c(1.0, 2.0), c(4.0, 0.0), c(0.0, 1.0)],
        vec![c(0.0, 1.0), c(0.0, -1.0), c(5.0, 0.0)],
    ])
    .unwrap()
}

pub fn operators(mesh: &Mesh, materials: &MaterialMap) -> AssembledOperators {
    Hierarchy::build(mesh.clone(), materials, &[])
        .unwrap()
        .coarse()
        .ops
        .clone()
}

pub fn hierarchy(mesh: Mesh, materials: &MaterialMap, uniform: usize) -> Hierarchy {
    Hierarchy::build(mesh, materials, &vec![Refinement::Uniform; uniform]).unwrap()
}

pub fn coarse(ops: &AssembledOperators, k: usize) -> SpectrumResult {
    solve_coarse_eigen(
        ops,
        &CoarseOptions {
            k,
            ..Default::default()
        },
    )
    .unwrap()
}

/// `max|B − GᵀM| / max|B|` and `max|S G| / (max|S| max|G|)`.
pub fn de_rham_defects(ops: &AssembledOperators) -> (f64, f64) {
    if ops.n_vertex == 0 {
        return (0.0, 0.0);
    }
    let gtm = ops.gradient.transpose().mul(&ops.mass);
    let one = C64::new(1.0, 0.0);
    let b = SparseMatrix::linear_combination(one, &ops.coupling, -one, &gtm).max_abs()
        / ops.coupling.max_abs();
    let sg = ops.stiffness.mul(&ops.gradient).max_abs()
        / (ops.stiffness.max_abs() * ops.gradient.max_abs());
    (b, sg)
}

pub fn to_nalgebra(a: &SparseMatrix) -> DMatrix<C64> {
    let mut d = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, j, v) in a.triplets() {
        d[(i, j)] += v;
    }
    d
}

/// Eigenpairs of `S u = λ M u` restricted to `ker B`, by dense linear
/// algebra: an orthonormal null-space basis `Z` from the eigenvectors of
/// `BᴴB`, then the reduced pencil `(ZᴴSZ, ZᴴMZ)` through a Cholesky factor.
/// Ascending, with `M`-normalized vectors in edge coordinates.
pub fn dense_constrained_eigen(ops: &AssembledOperators) -> (Vec<f64>, Vec<Vec<C64>>) {
    let s = to_nalgebra(&ops.stiffness);
    let m = to_nalgebra(&ops.mass);
    let n = ops.n_edge;
    let z = if ops.n_vertex == 0 {
        DMatrix::identity(n, n)
    } else {
        let b = to_nalgebra(&ops.coupling);
        let btb = b.adjoint() * &b;
        let eig = btb.symmetric_eigen();
        let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..n)
            .filter(|&i| eig.eigenvalues[i] <= 1e-10 * top)
            .collect();
        assert_eq!(keep.len(), n - ops.n_vertex, "B should have full row rank");
        DMatrix::from_fn(n, keep.len(), |i, j| eig.eigenvectors[(i, keep[j])])
    };
    let sp = z.adjoint() * &s * &z;
    let mp = z.adjoint() * &m * &z;
    let l = mp
        .cholesky()
        .expect("reduced mass is positive definite")
        .unpack();
    let linv = l.clone().try_inverse().unwrap();
    let c = &linv * sp * linv.adjoint();
    let c = (&c + c.adjoint()) * C64::new(0.5, 0.0);
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let back = &z * linv.adjoint();
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let y: DVector<C64> = eig.eigenvectors.column(i).into_owned();
            (&back * y).iter().cloned().collect()
        })
        .collect();
    (values, vectors)
}

pub fn form(a: &SparseMatrix, x: &[C64], y: &[C64]) -> C64 {
    dot(x, &a.mul_vec(y))
}

/// Residual of `R(v) − λ = ‖v−u‖²_a/‖v‖²_M − λ‖v−u‖²_M/‖v‖²_M`, divided by `λ`.
pub fn rayleigh_identity_residual(
    ops: &AssembledOperators,
    lambda: f64,
    u: &[C64],
    v: &[C64],
) -> f64 {
    let mvv = form(&ops.mass, v, v).re;
    let lhs = form(&ops.stiffness, v, v).re / mvv - lambda;
    let e: Vec<C64> = v.iter().zip(u).map(|(a, b)| a - b).collect();
    let rhs = form(&ops.stiffness, &e, &e).re / mvv - lambda * form(&ops.mass, &e, &e).re / mvv;
    (lhs - rhs).abs() / lambda.abs().max(1.0)
}

/// Number of free edges of `mesh`.
pub fn free_edges(mesh: &Mesh) -> usize {
    build_topology(mesh).num_free_edges()
}
