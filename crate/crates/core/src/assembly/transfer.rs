//! Transfer of edge and nodal coefficients from a mesh to its refinement.
//!
//! Whitney fields are affine on each cell, so the line integral along a fine
//! edge equals the coarse field at the edge midpoint dotted with the edge
//! vector. Every fine edge lies inside its parent cell, where the coarse
//! field is a single affine function.

use super::element::{local_edges, whitney};
use crate::linalg::{SparseMatrix, Triplet, C64};
use crate::mesh::{midpoint, sub, EdgeTopology, Mesh, SimplexGeometry};
use crate::{Error, Result};

const BARY_TOL: f64 = 1e-10;

fn check_nested(coarse: &Mesh, fine: &Mesh) -> Result<()> {
    let link = fine
        .parent()
        .ok_or_else(|| Error::NotNested("fine mesh carries no parent link".into()))?;
    if link.num_vertices != coarse.num_vertices()
        || link.num_cells != coarse.num_cells()
        || coarse.dim() != fine.dim()
    {
        return Err(Error::NotNested(format!(
            "parent link describes {} vertices and {} cells, coarse mesh has {} and {}",
            link.num_vertices,
            link.num_cells,
            coarse.num_vertices(),
            coarse.num_cells()
        )));
    }
    if (0..coarse.num_vertices()).any(|v| coarse.vertex(v) != fine.vertex(v)) {
        return Err(Error::NotNested(
            "coarse vertices are not a prefix of the fine vertices".into(),
        ));
    }
    Ok(())
}

fn parent_geometry(coarse: &Mesh, c: usize) -> Result<SimplexGeometry> {
    SimplexGeometry::new(&coarse.cell_points(c), coarse.dim()).ok_or(Error::DegenerateCell {
        cell: c,
        volume: coarse.volume(c),
    })
}

fn inside(lam: &[f64; 4], dim: usize) -> bool {
    lam[..=dim]
        .iter()
        .all(|&l| (-BARY_TOL..=1.0 + BARY_TOL).contains(&l))
}

/// Builds the edge transfer with caller-chosen DOF numberings.
pub(crate) fn edge_prolongation_with(
    coarse: &Mesh,
    ctopo: &EdgeTopology,
    fine: &Mesh,
    ftopo: &EdgeTopology,
    coarse_dof: &dyn Fn(usize) -> Option<usize>,
    fine_dof: &dyn Fn(usize) -> Option<usize>,
    shape: (usize, usize),
) -> Result<SparseMatrix> {
    check_nested(coarse, fine)?;
    let parents = &fine.parent().expect("checked").cell_parent;
    let dim = fine.dim();
    let edges = local_edges(dim);
    let mut done = vec![false; ftopo.num_edges()];
    let mut trip: Vec<Triplet> = Vec::new();
    for f in 0..fine.num_cells() {
        let c = parents[f];
        let mut geom: Option<SimplexGeometry> = None;
        for &(e, _) in ftopo.cell_edges(f) {
            if done[e] {
                continue;
            }
            done[e] = true;
            let Some(row) = fine_dof(e) else { continue };
            let g = match geom {
                Some(g) => g,
                None => {
                    let g = parent_geometry(coarse, c)?;
                    geom = Some(g);
                    g
                }
            };
            let [a, b] = ftopo.edges[e];
            let (xa, xb) = (fine.vertex(a), fine.vertex(b));
            let lam = g.barycentric(midpoint(xa, xb));
            if !inside(&lam, dim)
                || !inside(&g.barycentric(xa), dim)
                || !inside(&g.barycentric(xb), dim)
            {
                return Err(Error::NotNested(format!(
                    "fine edge {e} leaves its parent cell {c}"
                )));
            }
            let t = sub(xb, xa);
            for (k, &(p, q)) in edges.iter().enumerate() {
                let (ce, sign) = ctopo.cell_edges(c)[k];
                let Some(col) = coarse_dof(ce) else { continue };
                let w = whitney(&g, &lam, p, q);
                let v = f64::from(sign) * (w[0] * t[0] + w[1] * t[1] + w[2] * t[2]);
                if v.abs() > 1e-14 {
                    trip.push((row, col, C64::new(v, 0.0)));
                }
            }
        }
    }
    Ok(SparseMatrix::from_triplets(shape.0, shape.1, trip))
}

/// Edge transfer over free DOFs: fine free edges × coarse free edges.
pub fn edge_prolongation(
    coarse: &Mesh,
    ctopo: &EdgeTopology,
    fine: &Mesh,
    ftopo: &EdgeTopology,
) -> Result<SparseMatrix> {
    edge_prolongation_with(
        coarse,
        ctopo,
        fine,
        ftopo,
        &|e| ctopo.free_edge_dofs[e],
        &|e| ftopo.free_edge_dofs[e],
        (ftopo.num_free_edges(), ctopo.num_free_edges()),
    )
}

/// Piecewise-linear nodal transfer: fine free vertices × coarse free vertices.
pub fn vertex_prolongation(
    coarse: &Mesh,
    ctopo: &EdgeTopology,
    fine: &Mesh,
    ftopo: &EdgeTopology,
) -> Result<SparseMatrix> {
    check_nested(coarse, fine)?;
    let parents = &fine.parent().expect("checked").cell_parent;
    let dim = fine.dim();
    let mut done = vec![false; fine.num_vertices()];
    let mut trip: Vec<Triplet> = Vec::new();
    for f in 0..fine.num_cells() {
        let c = parents[f];
        for &v in fine.cell(f) {
            if done[v] {
                continue;
            }
            done[v] = true;
            let Some(row) = ftopo.free_vertex_dofs[v] else {
                continue;
            };
            let g = parent_geometry(coarse, c)?;
            let lam = g.barycentric(fine.vertex(v));
            if !inside(&lam, dim) {
                return Err(Error::NotNested(format!(
                    "fine vertex {v} lies outside its parent cell {c}"
                )));
            }
            for (i, &cv) in coarse.cell(c).iter().enumerate() {
                if let Some(col) = ctopo.free_vertex_dofs[cv] {
                    if lam[i].abs() > 1e-14 {
                        trip.push((row, col, C64::new(lam[i], 0.0)));
                    }
                }
            }
        }
    }
    Ok(SparseMatrix::from_triplets(
        ftopo.num_free_vertices(),
        ctopo.num_free_vertices(),
        trip,
    ))
}

/// Coarse free-edge coefficients represented on the fine mesh.
pub fn interpolate_to_fine(
    coarse_coeffs: &[C64],
    coarse: &Mesh,
    ctopo: &EdgeTopology,
    fine: &Mesh,
    ftopo: &EdgeTopology,
) -> Result<Vec<C64>> {
    let p = edge_prolongation(coarse, ctopo, fine, ftopo)?;
    p.matvec(coarse_coeffs)
}
