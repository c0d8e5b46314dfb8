//! Global edge and vertex numbering with boundary masks and the free-DOF
//! maps used by assembly.

use super::Mesh;

/// Local vertex pairs of the edges of a tetrahedron, in local edge order.
pub const LOCAL_EDGES_3D: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
/// Local vertex pairs of the edges of a triangle.
pub const LOCAL_EDGES_2D: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTopology {
    dim: usize,
    /// Global edges `(i, j)` with `i < j`, sorted lexicographically.
    pub edges: Vec<[usize; 2]>,
    /// Per cell, per local edge: global edge index and orientation sign.
    cell_to_edge: Vec<(usize, i8)>,
    pub boundary_edge: Vec<bool>,
    pub boundary_vertex: Vec<bool>,
    /// Global edge -> free edge DOF.
    pub free_edge_dofs: Vec<Option<usize>>,
    /// Global vertex -> free vertex DOF.
    pub free_vertex_dofs: Vec<Option<usize>>,
    free_edges: Vec<usize>,
    free_vertices: Vec<usize>,
}

impl EdgeTopology {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn local_edges(&self) -> &'static [(usize, usize)] {
        if self.dim == 3 {
            &LOCAL_EDGES_3D
        } else {
            &LOCAL_EDGES_2D
        }
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// `(global edge, sign)` for each local edge of cell `c`. The sign is +1
    /// when the local edge runs from lower to higher global vertex index.
    pub fn cell_edges(&self, c: usize) -> &[(usize, i8)] {
        let k = self.local_edges().len();
        &self.cell_to_edge[c * k..(c + 1) * k]
    }

    pub fn num_free_edges(&self) -> usize {
        self.free_edges.len()
    }

    pub fn num_free_vertices(&self) -> usize {
        self.free_vertices.len()
    }

    /// Global edge of each free edge DOF.
    pub fn free_edges(&self) -> &[usize] {
        &self.free_edges
    }

    /// Global vertex of each free vertex DOF.
    pub fn free_vertices(&self) -> &[usize] {
        &self.free_vertices
    }
}

/// Builds the canonical edge enumeration of a conforming mesh.
pub fn build_topology(mesh: &Mesh) -> EdgeTopology {
    let dim = mesh.dim();
    let local: &[(usize, usize)] = if dim == 3 {
        &LOCAL_EDGES_3D
    } else {
        &LOCAL_EDGES_2D
    };
    let mut edges: Vec<[usize; 2]> = Vec::with_capacity(mesh.num_cells() * local.len());
    for cell in mesh.cells() {
        for &(a, b) in local {
            edges.push([cell[a].min(cell[b]), cell[a].max(cell[b])]);
        }
    }
    edges.sort_unstable();
    edges.dedup();

    let find = |a: usize, b: usize| {
        edges
            .binary_search(&[a.min(b), a.max(b)])
            .expect("edge enumerated above")
    };
    let mut cell_to_edge = Vec::with_capacity(mesh.num_cells() * local.len());
    for cell in mesh.cells() {
        for &(a, b) in local {
            let sign = if cell[a] < cell[b] { 1 } else { -1 };
            cell_to_edge.push((find(cell[a], cell[b]), sign));
        }
    }

    let mut boundary_edge = vec![false; edges.len()];
    let mut boundary_vertex = vec![false; mesh.num_vertices()];
    for f in mesh.boundary_faces() {
        for (i, &a) in f.iter().enumerate() {
            boundary_vertex[a] = true;
            for &b in &f[i + 1..] {
                boundary_edge[find(a, b)] = true;
            }
        }
    }

    let (free_edge_dofs, free_edges) = number_free(&boundary_edge);
    let (free_vertex_dofs, free_vertices) = number_free(&boundary_vertex);
    EdgeTopology {
        dim,
        edges,
        cell_to_edge,
        boundary_edge,
        boundary_vertex,
        free_edge_dofs,
        free_vertex_dofs,
        free_edges,
        free_vertices,
    }
}

fn number_free(boundary: &[bool]) -> (Vec<Option<usize>>, Vec<usize>) {
    let mut map = vec![None; boundary.len()];
    let mut list = Vec::new();
    for (i, &b) in boundary.iter().enumerate() {
        if !b {
            map[i] = Some(list.len());
            list.push(i);
        }
    }
    (map, list)
}
