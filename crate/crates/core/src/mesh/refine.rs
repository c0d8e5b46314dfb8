//! Nested refinement by edge marking.
//!
//! A cell is either left alone, bisected across one marked edge, split into
//! four through one marked face (3D), or red-refined into `2^d` children.
//! Marks are closed under these patterns before any cell is split, so the
//! result is conforming. Uniform refinement marks every edge.

use std::collections::HashMap;

use super::{dist, midpoint, Mesh, ParentLink};
use crate::{Error, Result};

/// Local edges of a tetrahedron and of a triangle, as local vertex pairs.
const TET_EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
const TRI_EDGES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// A line segment in space (the refinement target of [`refine_toward_edge`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisLine {
    pub start: [f64; 3],
    pub end: [f64; 3],
}

impl AxisLine {
    /// The reentrant edge `{(0,0)} × (0,1)` of the thick L.
    pub fn thick_l_reentrant_edge() -> Self {
        AxisLine {
            start: [0.0, 0.0, 0.0],
            end: [0.0, 0.0, 1.0],
        }
    }

    pub fn distance(&self, x: [f64; 3]) -> f64 {
        let d = super::sub(self.end, self.start);
        let len2 = super::dot3(d, d);
        let t = if len2 > 0.0 {
            (super::dot3(super::sub(x, self.start), d) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let p = [
            self.start[0] + t * d[0],
            self.start[1] + t * d[1],
            self.start[2] + t * d[2],
        ];
        dist(x, p)
    }
}

/// Red-refines every cell: `2^d` children each, midpoints of all edges added.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh> {
    refine_marked(mesh, &vec![true; mesh.num_cells()])
}

/// One pass of local refinement toward a line segment.
///
/// Cells whose distance to the axis (smallest vertex distance) is below
/// `ratio` times the largest diameter among the cells touching the axis are
/// red-refined, and the marks are closed by green bisection. Because that
/// diameter halves with every pass, so does the threshold.
pub fn refine_toward_edge(mesh: &Mesh, axis: &AxisLine, ratio: f64) -> Result<Mesh> {
    if mesh.dim() != 3 {
        return Err(Error::MeshInvariant(
            "local refinement toward an edge needs a 3D mesh".into(),
        ));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidDomainParameter {
            name: "ratio".into(),
            reason: format!("must lie in (0, 1), got {ratio}"),
        });
    }
    let distances: Vec<f64> = (0..mesh.num_cells())
        .map(|c| {
            mesh.cell(c)
                .iter()
                .map(|&v| axis.distance(mesh.vertex(v)))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let touch_tol = 1e-12 * mesh.mesh_size();
    let closest = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let reference = (0..mesh.num_cells())
        .filter(|&c| distances[c] <= touch_tol.max(closest))
        .map(|c| mesh.diameter(c))
        .fold(0.0, f64::max);
    let threshold = ratio * reference;
    let marked: Vec<bool> = distances
        .iter()
        .map(|&d| d <= touch_tol || d < threshold)
        .collect();
    refine_marked(mesh, &marked)
}

fn local_edges(dim: usize) -> &'static [(usize, usize)] {
    if dim == 3 {
        &TET_EDGES
    } else {
        &TRI_EDGES
    }
}

fn local_edge_index(dim: usize, a: usize, b: usize) -> usize {
    let (a, b) = (a.min(b), a.max(b));
    local_edges(dim)
        .iter()
        .position(|&e| e == (a, b))
        .expect("valid local edge")
}

/// Refines marked cells red and closes the marking with green patterns.
pub(crate) fn refine_marked(mesh: &Mesh, marked_cells: &[bool]) -> Result<Mesh> {
    let dim = mesh.dim();
    let edges_of = local_edges(dim);
    let ne = edges_of.len();

    // global edges of the parent mesh
    let mut edge_id: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edge_list: Vec<(usize, usize)> = Vec::new();
    let mut cell_edges = Vec::with_capacity(mesh.num_cells() * ne);
    for c in 0..mesh.num_cells() {
        let cell = mesh.cell(c);
        for &(a, b) in edges_of {
            let key = (cell[a].min(cell[b]), cell[a].max(cell[b]));
            let id = *edge_id.entry(key).or_insert_with(|| {
                edge_list.push(key);
                edge_list.len() - 1
            });
            cell_edges.push(id);
        }
    }

    let mut marked = vec![false; edge_list.len()];
    for c in 0..mesh.num_cells() {
        if marked_cells[c] {
            for &e in &cell_edges[c * ne..(c + 1) * ne] {
                marked[e] = true;
            }
        }
    }

    // closure
    loop {
        let mut changed = false;
        for c in 0..mesh.num_cells() {
            let ce = &cell_edges[c * ne..(c + 1) * ne];
            if dim == 3 {
                for opposite in 0..4 {
                    let face: Vec<usize> = (0..ne)
                        .filter(|&k| edges_of[k].0 != opposite && edges_of[k].1 != opposite)
                        .collect();
                    let count = face.iter().filter(|&&k| marked[ce[k]]).count();
                    if count == 2 {
                        for &k in &face {
                            if !marked[ce[k]] {
                                marked[ce[k]] = true;
                                changed = true;
                            }
                        }
                    }
                }
            }
            let count = ce.iter().filter(|&&e| marked[e]).count();
            if !pattern_allowed(dim, ce, &marked, count) {
                for &e in ce {
                    if !marked[e] {
                        marked[e] = true;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }

    let mut vertices = mesh.vertices().to_vec();
    let mut mid = vec![usize::MAX; edge_list.len()];
    for (e, &(a, b)) in edge_list.iter().enumerate() {
        if marked[e] {
            mid[e] = vertices.len();
            vertices.push(midpoint(vertices[a], vertices[b]));
        }
    }

    let mut cells = Vec::new();
    let mut regions = Vec::new();
    let mut parents = Vec::new();
    for c in 0..mesh.num_cells() {
        let x = mesh.cell(c);
        let ce = &cell_edges[c * ne..(c + 1) * ne];
        let m = |a: usize, b: usize| mid[ce[local_edge_index(dim, a, b)]];
        let is_marked = |a: usize, b: usize| marked[ce[local_edge_index(dim, a, b)]];
        let count = ce.iter().filter(|&&e| marked[e]).count();
        let before = cells.len();
        if count == 0 {
            cells.extend_from_slice(x);
        } else if count == ne {
            red_children(mesh, x, &m, &mut cells);
        } else if count == 1 {
            let k = (0..ne).find(|&k| marked[ce[k]]).unwrap();
            let (i, j) = edges_of[k];
            let mij = m(i, j);
            let mut first = x.to_vec();
            first[j] = mij;
            let mut second = x.to_vec();
            second[i] = mij;
            cells.extend_from_slice(&first);
            cells.extend_from_slice(&second);
        } else {
            // three marked edges bounding one face (3D only)
            let l = (0..4)
                .find(|&l| {
                    (0..4)
                        .filter(|&v| v != l)
                        .flat_map(|a| {
                            (0..4)
                                .filter(move |&b| b != l && b > a)
                                .map(move |b| (a, b))
                        })
                        .all(|(a, b)| is_marked(a, b))
                })
                .ok_or_else(|| {
                    Error::MeshInvariant(format!("cell {c}: unresolved refinement pattern"))
                })?;
            let f: Vec<usize> = (0..4).filter(|&v| v != l).collect();
            let (i, j, k) = (f[0], f[1], f[2]);
            let (xi, xj, xk, xl) = (x[i], x[j], x[k], x[l]);
            let (mij, mik, mjk) = (m(i, j), m(i, k), m(j, k));
            cells.extend_from_slice(&[xi, mij, mik, xl]);
            cells.extend_from_slice(&[mij, xj, mjk, xl]);
            cells.extend_from_slice(&[mik, mjk, xk, xl]);
            cells.extend_from_slice(&[mij, mjk, mik, xl]);
        }
        let nchild = (cells.len() - before) / (dim + 1);
        regions.extend(std::iter::repeat_n(mesh.region(c), nchild));
        parents.extend(std::iter::repeat_n(c, nchild));
    }

    let child = Mesh::from_cells(dim, vertices, cells, regions)?;

    // children of each parent must tile it
    let mut sums = vec![0.0; mesh.num_cells()];
    for (k, &p) in parents.iter().enumerate() {
        sums[p] += child.volume(k);
    }
    for (p, s) in sums.iter().enumerate() {
        let v = mesh.volume(p);
        if (s - v).abs() > 1e-12 * v {
            return Err(Error::MeshInvariant(format!(
                "children of cell {p} have volume {s:e}, parent {v:e}"
            )));
        }
    }

    Ok(child.with_parent(ParentLink {
        num_vertices: mesh.num_vertices(),
        num_cells: mesh.num_cells(),
        cell_parent: parents,
    }))
}

fn pattern_allowed(dim: usize, ce: &[usize], marked: &[bool], count: usize) -> bool {
    if count == 0 || count == 1 || count == ce.len() {
        return true;
    }
    if dim == 2 || count != 3 {
        return false;
    }
    // three marked edges must bound a single face
    (0..4).any(|opposite| {
        TET_EDGES
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| a != opposite && b != opposite)
            .all(|(k, _)| marked[ce[k]])
    })
}

/// Red refinement of one simplex with the given edge-midpoint lookup.
///
/// In 3D the inner octahedron is cut along its shortest diagonal; ties
/// prefer the `x02–x13` diagonal, which with the children ordered as below
/// keeps Kuhn tetrahedra Kuhn.
fn red_children(mesh: &Mesh, x: &[usize], m: &dyn Fn(usize, usize) -> usize, out: &mut Vec<usize>) {
    if x.len() == 3 {
        let (m01, m02, m12) = (m(0, 1), m(0, 2), m(1, 2));
        out.extend_from_slice(&[x[0], m01, m02]);
        out.extend_from_slice(&[m01, x[1], m12]);
        out.extend_from_slice(&[m02, m12, x[2]]);
        out.extend_from_slice(&[m01, m12, m02]);
        return;
    }
    let (m01, m02, m03, m12, m13, m23) = (m(0, 1), m(0, 2), m(0, 3), m(1, 2), m(1, 3), m(2, 3));
    out.extend_from_slice(&[x[0], m01, m02, m03]);
    out.extend_from_slice(&[m01, x[1], m12, m13]);
    out.extend_from_slice(&[m02, m12, x[2], m23]);
    out.extend_from_slice(&[m03, m13, m23, x[3]]);

    let p = |a: usize, b: usize| midpoint(mesh.vertex(x[a]), mesh.vertex(x[b]));
    let candidates = [(0, 2, 1, 3), (0, 3, 1, 2), (0, 1, 2, 3)];
    let lengths: Vec<f64> = candidates
        .iter()
        .map(|&(i, j, k, l)| dist(p(i, j), p(k, l)))
        .collect();
    let shortest = lengths.iter().copied().fold(f64::INFINITY, f64::min);
    let choice = lengths
        .iter()
        .position(|&d| d <= shortest * (1.0 + 1e-10))
        .unwrap();
    if choice == 0 {
        out.extend_from_slice(&[m01, m02, m03, m13]);
        out.extend_from_slice(&[m01, m02, m12, m13]);
        out.extend_from_slice(&[m02, m03, m13, m23]);
        out.extend_from_slice(&[m02, m12, m13, m23]);
    } else {
        let (i, j, k, l) = candidates[choice];
        let (a, b) = (m(i, j), m(k, l));
        let ring = [m(i, k), m(i, l), m(j, l), m(j, k)];
        for t in 0..4 {
            out.extend_from_slice(&[a, b, ring[t], ring[(t + 1) % 4]]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, sub, DomainKind, DomainSpec};

    fn cube(n: usize) -> Mesh {
        generate_mesh(&DomainSpec::new(DomainKind::UnitCube), n).unwrap()
    }

    #[test]
    fn uniform_refinement_counts() {
        let m = cube(2);
        let f = refine_uniform(&m).unwrap();
        assert_eq!(f.num_cells(), 384);
        f.check_invariants().unwrap();
        let s = generate_mesh(&DomainSpec::new(DomainKind::UnitSquare2D), 2).unwrap();
        let fs = refine_uniform(&s).unwrap();
        assert_eq!(fs.num_cells(), 32);
        fs.check_invariants().unwrap();
    }

    #[test]
    fn refined_kuhn_cells_are_kuhn_cells_of_the_finer_grid() {
        // every child is a monotone path of four grid points, one axis step each
        let f = refine_uniform(&cube(2)).unwrap();
        let h = 0.25;
        for c in 0..f.num_cells() {
            let p = f.cell_points(c);
            let is_path = |order: &[usize]| {
                let mut axes = Vec::new();
                for w in order.windows(2) {
                    let d = sub(p[w[1]], p[w[0]]);
                    let moved: Vec<usize> = (0..3).filter(|&k| d[k].abs() > 1e-12).collect();
                    if moved.len() != 1
                        || (d[moved[0]].abs() - h).abs() > 1e-12
                        || axes.contains(&moved[0])
                    {
                        return false;
                    }
                    axes.push(moved[0]);
                }
                true
            };
            let mut found = false;
            for a in 0..4 {
                for b in (0..4).filter(|&b| b != a) {
                    for c in (0..4).filter(|&c| c != a && c != b) {
                        let d = 6 - a - b - c;
                        found |= is_path(&[a, b, c, d]);
                    }
                }
            }
            assert!(found, "cell {c} is not a Kuhn tetrahedron: {p:?}");
        }
    }

    #[test]
    fn child_vertices_are_parent_vertices_or_edge_midpoints() {
        let m = generate_mesh(&DomainSpec::new(DomainKind::ThickL), 1).unwrap();
        let f = refine_uniform(&m).unwrap();
        let link = f.parent().unwrap();
        assert_eq!(link.num_cells, m.num_cells());
        for v in 0..m.num_vertices() {
            assert_eq!(f.vertex(v), m.vertex(v));
        }
        let mut mids = Vec::new();
        for c in 0..m.num_cells() {
            let cell = m.cell(c);
            for &(a, b) in &TET_EDGES {
                mids.push(midpoint(m.vertex(cell[a]), m.vertex(cell[b])));
            }
        }
        for v in m.num_vertices()..f.num_vertices() {
            assert!(mids.iter().any(|p| dist(*p, f.vertex(v)) < 1e-14));
        }
    }

    #[test]
    fn local_refinement_halves_cells_at_the_reentrant_edge() {
        let coarse = generate_mesh(&DomainSpec::new(DomainKind::ThickL), 1).unwrap();
        let axis = AxisLine::thick_l_reentrant_edge();
        let touching = |m: &Mesh| -> Vec<usize> {
            (0..m.num_cells())
                .filter(|&c| {
                    m.cell(c)
                        .iter()
                        .any(|&v| axis.distance(m.vertex(v)) < 1e-12)
                })
                .collect()
        };
        let d0 = touching(&coarse)
            .iter()
            .map(|&c| coarse.diameter(c))
            .fold(0.0, f64::max);
        let mut m = coarse.clone();
        for _ in 0..2 {
            m = refine_toward_edge(&m, &axis, 0.5).unwrap();
            m.check_invariants().unwrap();
        }
        let d2 = touching(&m)
            .iter()
            .map(|&c| m.diameter(c))
            .fold(0.0, f64::max);
        assert!(d2 <= 0.25 * d0 * (1.0 + 1e-12), "{d2} vs {d0}");
        assert!((m.total_volume() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn local_refinement_rejects_bad_ratio_and_2d() {
        let m = cube(1);
        let axis = AxisLine::thick_l_reentrant_edge();
        assert!(refine_toward_edge(&m, &axis, 1.5).is_err());
        let s = generate_mesh(&DomainSpec::new(DomainKind::UnitSquare2D), 1).unwrap();
        assert!(refine_toward_edge(&s, &axis, 0.5).is_err());
    }

    #[test]
    fn green_closure_of_a_single_marked_cell_is_conforming() {
        let m = cube(2);
        let mut marks = vec![false; m.num_cells()];
        marks[17] = true;
        let f = refine_marked(&m, &marks).unwrap();
        f.check_invariants().unwrap();
        assert!(f.num_cells() > m.num_cells() + 7);
        assert!((f.total_volume() - 1.0).abs() < 1e-13);
    }
}
