//! Global sparse matrices of the lowest-order edge element discretization.
//!
//! Boundary DOFs are eliminated: rows and columns of edges and vertices on
//! the boundary are dropped, so every matrix acts on free DOFs only.

mod element;
mod quadrature;
mod transfer;

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

pub use element::{element_matrices, whitney, whitney_curl, ElementMatrices};
pub use quadrature::QuadratureRule;
pub use transfer::{edge_prolongation, interpolate_to_fine, vertex_prolongation};

use crate::linalg::{SparseMatrix, Triplet, C64};
use crate::materials::{coercivity_constants, CoercivityConstants, MaterialMap};
use crate::mesh::{EdgeTopology, Mesh, SimplexGeometry};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct AssembledOperators {
    /// Curl-curl stiffness `S`, free edges × free edges.
    pub stiffness: SparseMatrix,
    /// `ε`-mass `M`, free edges × free edges.
    pub mass: SparseMatrix,
    /// Coupling `B[p, i] = (ε W_i, ∇φ_p)`, free vertices × free edges.
    pub coupling: SparseMatrix,
    /// Incidence `G`, free edges × free vertices.
    pub gradient: SparseMatrix,
    pub n_edge: usize,
    pub n_vertex: usize,
    pub dim: usize,
    pub constants: CoercivityConstants,
}

impl AssembledOperators {
    /// `S + (γ/β) M`, the matrix of the augmented A-form.
    pub fn a_form_matrix(&self) -> SparseMatrix {
        SparseMatrix::linear_combination(
            C64::new(1.0, 0.0),
            &self.stiffness,
            C64::new(self.constants.shift, 0.0),
            &self.mass,
        )
    }

    /// `S − shift·M`.
    pub fn shifted(&self, shift: f64) -> SparseMatrix {
        SparseMatrix::linear_combination(
            C64::new(1.0, 0.0),
            &self.stiffness,
            C64::new(-shift, 0.0),
            &self.mass,
        )
    }

    /// Writes `S`, `M`, `B` and `G` as triplet text files into `dir`.
    pub fn dump(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        for (name, m) in [
            ("stiffness", &self.stiffness),
            ("mass", &self.mass),
            ("coupling", &self.coupling),
            ("gradient", &self.gradient),
        ] {
            m.write_triplets(BufWriter::new(File::create(
                dir.join(format!("{name}.txt")),
            )?))?;
        }
        Ok(())
    }
}

/// Assembles `S`, `M`, `B` and `G` over the free DOFs of `topo`.
pub fn assemble_operators(
    mesh: &Mesh,
    topo: &EdgeTopology,
    materials: &MaterialMap,
) -> Result<AssembledOperators> {
    if materials.dim() != mesh.dim() {
        return Err(Error::DimensionMismatch {
            expected: mesh.dim(),
            found: materials.dim(),
        });
    }
    let constants = coercivity_constants(materials)?;
    let dim = mesh.dim();
    let rule = QuadratureRule::degree2(dim);
    let n_edge = topo.num_free_edges();
    let n_vertex = topo.num_free_vertices();

    let mut inverses = std::collections::BTreeMap::new();
    for (r, m) in materials.regions() {
        inverses.insert(r, m.mu.inverse()?);
    }

    let nloc = topo.local_edges().len();
    let mut s_trip: Vec<Triplet> = Vec::with_capacity(mesh.num_cells() * nloc * nloc);
    let mut m_trip: Vec<Triplet> = Vec::with_capacity(mesh.num_cells() * nloc * nloc);
    let mut b_trip: Vec<Triplet> = Vec::with_capacity(mesh.num_cells() * (dim + 1) * nloc);
    let scale = mesh.mesh_size().powi(dim as i32);
    for c in 0..mesh.num_cells() {
        let region = mesh.region(c);
        let material = materials.get(region)?;
        let geom = SimplexGeometry::new(&mesh.cell_points(c), dim)
            .filter(|g| g.volume > 1e-14 * scale)
            .ok_or(Error::DegenerateCell {
                cell: c,
                volume: mesh.volume(c),
            })?;
        let el = element_matrices(&geom, material, &inverses[&region], &rule);
        let ce = topo.cell_edges(c);
        let dofs: Vec<Option<(usize, f64)>> = ce
            .iter()
            .map(|&(e, s)| topo.free_edge_dofs[e].map(|d| (d, f64::from(s))))
            .collect();
        for (k, dk) in dofs.iter().enumerate() {
            let Some((i, si)) = *dk else { continue };
            for (l, dl) in dofs.iter().enumerate() {
                let Some((j, sj)) = *dl else { continue };
                let sign = si * sj;
                s_trip.push((i, j, el.stiffness[k * nloc + l] * sign));
                m_trip.push((i, j, el.mass[k * nloc + l] * sign));
            }
        }
        for (p, &v) in mesh.cell(c).iter().enumerate() {
            let Some(row) = topo.free_vertex_dofs[v] else {
                continue;
            };
            for (l, dl) in dofs.iter().enumerate() {
                let Some((j, sj)) = *dl else { continue };
                b_trip.push((row, j, el.coupling[p * nloc + l] * sj));
            }
        }
    }

    Ok(AssembledOperators {
        stiffness: SparseMatrix::from_triplets(n_edge, n_edge, s_trip),
        mass: SparseMatrix::from_triplets(n_edge, n_edge, m_trip),
        coupling: SparseMatrix::from_triplets(n_vertex, n_edge, b_trip),
        gradient: discrete_gradient(topo),
        n_edge,
        n_vertex,
        dim,
        constants,
    })
}

/// Edge-vertex incidence over free DOFs: `-1` at the tail (lower index) of
/// each edge, `+1` at its head.
pub fn discrete_gradient(topo: &EdgeTopology) -> SparseMatrix {
    let mut trip = Vec::new();
    for (e, &[a, b]) in topo.edges.iter().enumerate() {
        let Some(row) = topo.free_edge_dofs[e] else {
            continue;
        };
        if let Some(p) = topo.free_vertex_dofs[a] {
            trip.push((row, p, C64::new(-1.0, 0.0)));
        }
        if let Some(p) = topo.free_vertex_dofs[b] {
            trip.push((row, p, C64::new(1.0, 0.0)));
        }
    }
    SparseMatrix::from_triplets(topo.num_free_edges(), topo.num_free_vertices(), trip)
}
