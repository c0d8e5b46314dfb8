//! Whitney element matrices on one simplex, in the local basis
//! `W_ab = λ_a∇λ_b − λ_b∇λ_a` with `a < b` local.

use super::quadrature::QuadratureRule;
use crate::linalg::C64;
use crate::materials::Material;
use crate::mesh::{SimplexGeometry, LOCAL_EDGES_2D, LOCAL_EDGES_3D};

pub(crate) fn local_edges(dim: usize) -> &'static [(usize, usize)] {
    if dim == 3 {
        &LOCAL_EDGES_3D
    } else {
        &LOCAL_EDGES_2D
    }
}

/// Value of `W_ab` at barycentric point `lam`.
pub fn whitney(geom: &SimplexGeometry, lam: &[f64; 4], a: usize, b: usize) -> [f64; 3] {
    let (ga, gb) = (geom.gradients[a], geom.gradients[b]);
    [
        lam[a] * gb[0] - lam[b] * ga[0],
        lam[a] * gb[1] - lam[b] * ga[1],
        lam[a] * gb[2] - lam[b] * ga[2],
    ]
}

/// Curl of `W_ab`: `2∇λ_a×∇λ_b` in 3D, its z-component in 2D.
pub fn whitney_curl(geom: &SimplexGeometry, a: usize, b: usize) -> Vec<f64> {
    let (ga, gb) = (geom.gradients[a], geom.gradients[b]);
    let c = [
        2.0 * (ga[1] * gb[2] - ga[2] * gb[1]),
        2.0 * (ga[2] * gb[0] - ga[0] * gb[2]),
        2.0 * (ga[0] * gb[1] - ga[1] * gb[0]),
    ];
    if geom.dim == 3 {
        c.to_vec()
    } else {
        vec![c[2]]
    }
}

/// Dense local matrices of one cell, row-major.
#[derive(Debug, Clone)]
pub struct ElementMatrices {
    pub n_edges: usize,
    pub n_vertices: usize,
    /// `S_kl = |K| c_kᵀ μ⁻¹ c_l`.
    pub stiffness: Vec<C64>,
    /// `M_kl = ∫ W_kᵀ ε W_l`.
    pub mass: Vec<C64>,
    /// `B_pl = ∫ ∇λ_pᵀ ε W_l`, `n_vertices × n_edges`.
    pub coupling: Vec<C64>,
}

pub fn element_matrices(
    geom: &SimplexGeometry,
    material: &Material,
    mu_inv: &crate::materials::HermitianTensor,
    rule: &QuadratureRule,
) -> ElementMatrices {
    let dim = geom.dim;
    let edges = local_edges(dim);
    let ne = edges.len();
    let nv = dim + 1;
    let curls: Vec<Vec<f64>> = edges
        .iter()
        .map(|&(a, b)| whitney_curl(geom, a, b))
        .collect();

    let mut stiffness = vec![C64::new(0.0, 0.0); ne * ne];
    for k in 0..ne {
        for l in 0..ne {
            stiffness[k * ne + l] = mu_inv.real_form(&curls[k], &curls[l]) * geom.volume;
        }
    }

    let scale = geom.volume / rule.reference_volume();
    let mut mass = vec![C64::new(0.0, 0.0); ne * ne];
    let mut coupling = vec![C64::new(0.0, 0.0); nv * ne];
    for (lam, &w) in rule.points.iter().zip(&rule.weights) {
        let wq = w * scale;
        let vals: Vec<[f64; 3]> = edges
            .iter()
            .map(|&(a, b)| whitney(geom, lam, a, b))
            .collect();
        let eps_w: Vec<[C64; 3]> = vals.iter().map(|v| apply(&material.eps, v, dim)).collect();
        for k in 0..ne {
            for l in 0..ne {
                mass[k * ne + l] += dot_real(&vals[k], &eps_w[l], dim) * wq;
            }
        }
        for p in 0..nv {
            for l in 0..ne {
                coupling[p * ne + l] += dot_real(&geom.gradients[p], &eps_w[l], dim) * wq;
            }
        }
    }
    ElementMatrices {
        n_edges: ne,
        n_vertices: nv,
        stiffness,
        mass,
        coupling,
    }
}

fn apply(t: &crate::materials::HermitianTensor, v: &[f64; 3], dim: usize) -> [C64; 3] {
    let mut out = [C64::new(0.0, 0.0); 3];
    for (i, o) in out.iter_mut().enumerate().take(dim) {
        for (j, &vj) in v.iter().enumerate().take(dim) {
            *o += t.get(i, j) * vj;
        }
    }
    out
}

fn dot_real(x: &[f64; 3], y: &[C64; 3], dim: usize) -> C64 {
    (0..dim).map(|i| y[i] * x[i]).sum()
}
