//! Simplicial meshes in two and three dimensions.
//!
//! Cells are stored as flat vertex-index tuples (`d + 1` per simplex) in the
//! order they were generated or refined; that order carries the refinement
//! rule's state, so orientation is normalized only on demand through
//! [`Mesh::oriented_cell`].

mod generate;
mod io;
mod refine;
mod topology;

use std::collections::HashMap;

pub use generate::{generate_mesh, DomainKind, DomainSpec};
pub use io::{read_mesh, write_mesh};
pub use refine::{refine_toward_edge, refine_uniform, AxisLine};
pub use topology::{build_topology, EdgeTopology, LOCAL_EDGES_2D, LOCAL_EDGES_3D};

use crate::{Error, Result};

/// Link from a refined mesh to the mesh it was produced from.
#[derive(Debug, Clone, PartialEq)]
pub struct ParentLink {
    pub num_vertices: usize,
    pub num_cells: usize,
    /// Parent cell of each child cell.
    pub cell_parent: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<[f64; 3]>,
    cells: Vec<usize>,
    regions: Vec<u32>,
    boundary_faces: Vec<usize>,
    parent: Option<ParentLink>,
}

impl Mesh {
    /// Assembles a mesh from raw arrays. Vertex coordinates in 2D carry a
    /// zero third component.
    pub fn new(
        dim: usize,
        vertices: Vec<[f64; 3]>,
        cells: Vec<usize>,
        regions: Vec<u32>,
        boundary_faces: Vec<usize>,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::MeshInvariant(format!(
                "dimension {dim} is not 2 or 3"
            )));
        }
        let nv = vertices.len();
        if !cells.len().is_multiple_of(dim + 1) || !boundary_faces.len().is_multiple_of(dim) {
            return Err(Error::MeshInvariant(
                "connectivity length is not a multiple of the simplex size".into(),
            ));
        }
        if regions.len() != cells.len() / (dim + 1) {
            return Err(Error::MeshInvariant(format!(
                "{} region labels for {} cells",
                regions.len(),
                cells.len() / (dim + 1)
            )));
        }
        if let Some(&bad) = cells.iter().chain(&boundary_faces).find(|&&v| v >= nv) {
            return Err(Error::MeshInvariant(format!(
                "vertex index {bad} out of range ({nv} vertices)"
            )));
        }
        Ok(Mesh {
            dim,
            vertices,
            cells,
            regions,
            boundary_faces,
            parent: None,
        })
    }

    /// Builds a mesh whose boundary faces are the faces owned by exactly one cell.
    pub fn from_cells(
        dim: usize,
        vertices: Vec<[f64; 3]>,
        cells: Vec<usize>,
        regions: Vec<u32>,
    ) -> Result<Self> {
        let mut mesh = Mesh::new(dim, vertices, cells, regions, Vec::new())?;
        mesh.boundary_faces = mesh.exterior_faces();
        Ok(mesh)
    }

    pub(crate) fn with_parent(mut self, parent: ParentLink) -> Self {
        self.parent = Some(parent);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.regions.len()
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> [f64; 3] {
        self.vertices[i]
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.cells[c * k..(c + 1) * k]
    }

    pub fn cells(&self) -> impl Iterator<Item = &[usize]> {
        self.cells.chunks_exact(self.dim + 1)
    }

    pub fn region(&self, c: usize) -> u32 {
        self.regions[c]
    }

    pub fn regions(&self) -> &[u32] {
        &self.regions
    }

    pub fn num_boundary_faces(&self) -> usize {
        self.boundary_faces.len() / self.dim
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = &[usize]> {
        self.boundary_faces.chunks_exact(self.dim)
    }

    pub fn parent(&self) -> Option<&ParentLink> {
        self.parent.as_ref()
    }

    pub fn cell_points(&self, c: usize) -> Vec<[f64; 3]> {
        self.cell(c).iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn signed_volume(&self, c: usize) -> f64 {
        signed_volume(&self.cell_points(c), self.dim)
    }

    pub fn volume(&self, c: usize) -> f64 {
        self.signed_volume(c).abs()
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.num_cells()).map(|c| self.volume(c)).sum()
    }

    /// Cell vertices permuted (last two swapped if needed) to positive signed volume.
    pub fn oriented_cell(&self, c: usize) -> Vec<usize> {
        let mut v = self.cell(c).to_vec();
        if self.signed_volume(c) < 0.0 {
            let n = v.len();
            v.swap(n - 2, n - 1);
        }
        v
    }

    pub fn diameter(&self, c: usize) -> f64 {
        let p = self.cell_points(c);
        let mut d: f64 = 0.0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                d = d.max(dist(p[i], p[j]));
            }
        }
        d
    }

    /// Largest cell diameter.
    pub fn mesh_size(&self) -> f64 {
        (0..self.num_cells())
            .map(|c| self.diameter(c))
            .fold(0.0, f64::max)
    }

    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    /// Sorted vertex keys of the `(d-1)`-faces of a cell.
    fn cell_face_keys(&self, c: usize) -> Vec<FaceKey> {
        let cell = self.cell(c);
        (0..cell.len())
            .map(|skip| {
                let f: Vec<usize> = cell
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                FaceKey::new(&f)
            })
            .collect()
    }

    fn face_counts(&self) -> HashMap<FaceKey, usize> {
        let mut counts: HashMap<FaceKey, usize> =
            HashMap::with_capacity(self.num_cells() * 2 * self.dim);
        for c in 0..self.num_cells() {
            for key in self.cell_face_keys(c) {
                *counts.entry(key).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Faces that belong to exactly one cell, in a deterministic order.
    fn exterior_faces(&self) -> Vec<usize> {
        let counts = self.face_counts();
        let mut faces = Vec::new();
        // iterate cells (not the hash map) so the order is reproducible
        for c in 0..self.num_cells() {
            for key in self.cell_face_keys(c) {
                if counts[&key] == 1 {
                    faces.extend_from_slice(key.vertices());
                }
            }
        }
        faces
    }

    /// Checks positivity of volumes, face sharing, agreement of declared and
    /// exterior boundary faces, and that the boundary is a closed surface.
    pub fn check_invariants(&self) -> Result<()> {
        let scale = self
            .mesh_size()
            .max(f64::MIN_POSITIVE)
            .powi(self.dim as i32);
        for c in 0..self.num_cells() {
            let v = self.volume(c);
            if !(v > 1e-14 * scale) {
                return Err(Error::DegenerateCell { cell: c, volume: v });
            }
        }
        let counts = self.face_counts();
        if let Some((k, n)) = counts.iter().find(|(_, &n)| n > 2) {
            return Err(Error::MeshInvariant(format!(
                "face {:?} shared by {n} cells",
                k.vertices()
            )));
        }
        let mut declared: Vec<FaceKey> = self.boundary_faces().map(FaceKey::new).collect();
        declared.sort_unstable();
        let mut exterior: Vec<FaceKey> = counts
            .iter()
            .filter(|(_, &n)| n == 1)
            .map(|(k, _)| *k)
            .collect();
        exterior.sort_unstable();
        if declared != exterior {
            return Err(Error::MeshInvariant(format!(
                "{} declared boundary faces but {} faces have a single cell",
                declared.len(),
                exterior.len()
            )));
        }
        // closed surface: every (d-2)-entity of the boundary is shared by two boundary faces
        let mut ridge: HashMap<FaceKey, usize> = HashMap::new();
        for f in self.boundary_faces() {
            for skip in 0..f.len() {
                let r: Vec<usize> = f
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                *ridge.entry(FaceKey::new(&r)).or_insert(0) += 1;
            }
        }
        if let Some((k, n)) = ridge.iter().find(|(_, &n)| n != 2) {
            return Err(Error::MeshInvariant(format!(
                "boundary is not closed (or the mesh is not conforming): ridge {:?} in {n} boundary faces",
                k.vertices()
            )));
        }
        Ok(())
    }

    /// Number of connected components of the boundary surface.
    pub fn boundary_components(&self) -> usize {
        let nf = self.num_boundary_faces();
        let mut uf = UnionFind::new(nf);
        let mut first: HashMap<FaceKey, usize> = HashMap::new();
        for (fi, f) in self.boundary_faces().enumerate() {
            for skip in 0..f.len() {
                let r: Vec<usize> = f
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                match first.entry(FaceKey::new(&r)) {
                    std::collections::hash_map::Entry::Occupied(e) => uf.union(*e.get(), fi),
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(fi);
                    }
                }
            }
        }
        (0..nf).filter(|&i| uf.find(i) == i).count()
    }
}

/// Sorted vertex tuple of up to three entries, padded with `usize::MAX`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct FaceKey {
    v: [usize; 3],
    n: usize,
}

impl FaceKey {
    fn new(f: &[usize]) -> Self {
        let mut v = [usize::MAX; 3];
        v[..f.len()].copy_from_slice(f);
        v[..f.len()].sort_unstable();
        FaceKey { v, n: f.len() }
    }

    fn vertices(&self) -> &[usize] {
        &self.v[..self.n]
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

pub(crate) fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

pub fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn midpoint(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        0.5 * (a[0] + b[0]),
        0.5 * (a[1] + b[1]),
        0.5 * (a[2] + b[2]),
    ]
}

fn signed_volume(p: &[[f64; 3]], dim: usize) -> f64 {
    if dim == 2 {
        let e1 = sub(p[1], p[0]);
        let e2 = sub(p[2], p[0]);
        0.5 * (e1[0] * e2[1] - e1[1] * e2[0])
    } else {
        let e1 = sub(p[1], p[0]);
        let e2 = sub(p[2], p[0]);
        let e3 = sub(p[3], p[0]);
        dot3(e1, cross(e2, e3)) / 6.0
    }
}

/// Gradients of the barycentric coordinates of a simplex (constant over the
/// cell) together with its unsigned volume.
#[derive(Debug, Clone, Copy)]
pub struct SimplexGeometry {
    pub origin: [f64; 3],
    pub gradients: [[f64; 3]; 4],
    pub volume: f64,
    pub dim: usize,
}

impl SimplexGeometry {
    pub fn new(points: &[[f64; 3]], dim: usize) -> Option<Self> {
        let mut g = [[0.0; 3]; 4];
        let volume;
        if dim == 2 {
            let e1 = sub(points[1], points[0]);
            let e2 = sub(points[2], points[0]);
            let det = e1[0] * e2[1] - e1[1] * e2[0];
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            g[1] = [e2[1] / det, -e2[0] / det, 0.0];
            g[2] = [-e1[1] / det, e1[0] / det, 0.0];
            volume = 0.5 * det.abs();
        } else {
            let e1 = sub(points[1], points[0]);
            let e2 = sub(points[2], points[0]);
            let e3 = sub(points[3], points[0]);
            let c23 = cross(e2, e3);
            let det = dot3(e1, c23);
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            let c31 = cross(e3, e1);
            let c12 = cross(e1, e2);
            for k in 0..3 {
                g[1][k] = c23[k] / det;
                g[2][k] = c31[k] / det;
                g[3][k] = c12[k] / det;
            }
            volume = det.abs() / 6.0;
        }
        for k in 0..3 {
            g[0][k] = -(1..=dim).map(|i| g[i][k]).sum::<f64>();
        }
        Some(SimplexGeometry {
            origin: points[0],
            gradients: g,
            volume,
            dim,
        })
    }

    /// Barycentric coordinates of a point.
    pub fn barycentric(&self, x: [f64; 3]) -> [f64; 4] {
        let d = sub(x, self.origin);
        let mut l = [0.0; 4];
        let mut s = 0.0;
        for i in 1..=self.dim {
            l[i] = dot3(self.gradients[i], d);
            s += l[i];
        }
        l[0] = 1.0 - s;
        l
    }
}
