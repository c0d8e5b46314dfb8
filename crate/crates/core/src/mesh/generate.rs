//! Structured simplicial meshes of the benchmark domains.
//!
//! Every domain is a union of axis-aligned boxes of a uniform grid. Boxes
//! are split into six tetrahedra sharing a main diagonal (Kuhn/Freudenthal
//! split) or, in 2D, into two triangles. The 3D split is mirrored along each
//! axis in boxes with an odd index on that axis, so face diagonals of
//! neighbouring boxes match and a grid with an even number of boxes per axis
//! keeps the reflection and axis-permutation symmetries of the box. Without
//! the mirroring the mesh singles out one main diagonal, which splits the
//! triple lowest eigenvalue of the cube.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Mesh;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    /// `(-1/2, 1/2)³`
    UnitCube,
    /// `((-1,1)² \ (-1,0]²) × (0,1)`
    ThickL,
    /// `(-1/2, 1/2) × (0, t) × (-1/2, 1/2)`, region 1 above `x₃ = 0`
    Slab,
    /// `(-1,1)³ \ [-1/2,1/2]³`
    CubeCavity,
    /// `(0,1)²`
    #[serde(rename = "unit_square_2d")]
    UnitSquare2D,
}

impl DomainKind {
    pub fn dim(self) -> usize {
        match self {
            DomainKind::UnitSquare2D => 2,
            _ => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DomainKind::UnitCube => "unit_cube",
            DomainKind::ThickL => "thick_l",
            DomainKind::Slab => "slab",
            DomainKind::CubeCavity => "cube_cavity",
            DomainKind::UnitSquare2D => "unit_square_2d",
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DomainKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "unit_cube" => DomainKind::UnitCube,
            "thick_l" => DomainKind::ThickL,
            "slab" => DomainKind::Slab,
            "cube_cavity" => DomainKind::CubeCavity,
            "unit_square_2d" => DomainKind::UnitSquare2D,
            other => return Err(Error::UnknownDomainKind(other.to_string())),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// Named real parameters; only `Slab` takes one (`thickness`, default 0.1).
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

impl DomainSpec {
    pub fn new(kind: DomainKind) -> Self {
        DomainSpec {
            kind,
            parameters: BTreeMap::new(),
        }
    }

    pub fn with_parameter(mut self, name: &str, value: f64) -> Self {
        self.parameters.insert(name.to_string(), value);
        self
    }

    fn thickness(&self) -> Result<f64> {
        let t = self.parameters.get("thickness").copied().unwrap_or(0.1);
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidDomainParameter {
                name: "thickness".into(),
                reason: format!("must be positive, got {t}"),
            });
        }
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        let allowed: &[&str] = match self.kind {
            DomainKind::Slab => &["thickness"],
            _ => &[],
        };
        if let Some(name) = self
            .parameters
            .keys()
            .find(|k| !allowed.contains(&k.as_str()))
        {
            return Err(Error::InvalidDomainParameter {
                name: name.clone(),
                reason: format!("not a parameter of {}", self.kind),
            });
        }
        if self.kind == DomainKind::Slab {
            self.thickness()?;
        }
        Ok(())
    }
}

/// Generates a conforming structured mesh.
///
/// `resolution` counts boxes per unit length for `ThickL` (so the L has
/// `2n × 2n × n` grid boxes before the notch is removed), per axis for
/// `UnitCube` and `UnitSquare2D`, per half-unit for `CubeCavity` (a `4n`
/// grid on `(-1,1)³`) and `2n` boxes across the slab's unit sides, with as
/// many layers through the thickness as keeps boxes close to cubic.
pub fn generate_mesh(spec: &DomainSpec, resolution: usize) -> Result<Mesh> {
    if resolution == 0 {
        return Err(Error::InvalidResolution(resolution));
    }
    spec.validate()?;
    let n = resolution;
    match spec.kind {
        DomainKind::UnitCube => {
            boxes_3d([-0.5, -0.5, -0.5], [0.5, 0.5, 0.5], [n, n, n], |_| Some(0))
        }
        DomainKind::ThickL => {
            boxes_3d([-1.0, -1.0, 0.0], [1.0, 1.0, 1.0], [2 * n, 2 * n, n], |c| {
                if c[0] < 0.0 && c[1] < 0.0 {
                    None
                } else {
                    Some(0)
                }
            })
        }
        DomainKind::Slab => {
            let t = spec.thickness()?;
            let ny = ((2 * n) as f64 * t).round().max(1.0) as usize;
            boxes_3d([-0.5, 0.0, -0.5], [0.5, t, 0.5], [2 * n, ny, 2 * n], |c| {
                Some(if c[2] > 0.0 { 1 } else { 0 })
            })
        }
        DomainKind::CubeCavity => boxes_3d(
            [-1.0, -1.0, -1.0],
            [1.0, 1.0, 1.0],
            [4 * n, 4 * n, 4 * n],
            |c| {
                if c.iter().all(|x| x.abs() < 0.5) {
                    None
                } else {
                    Some(0)
                }
            },
        ),
        DomainKind::UnitSquare2D => squares_2d(n),
    }
}

/// Six-tetrahedron split of a unit box: one tetrahedron per axis
/// permutation, following the path `0 → e_a → e_a + e_b → 1` (mirrored
/// per axis as described above).
const KUHN_PATHS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

fn boxes_3d(
    lo: [f64; 3],
    hi: [f64; 3],
    n: [usize; 3],
    keep: impl Fn([f64; 3]) -> Option<u32>,
) -> Result<Mesh> {
    let h = [
        (hi[0] - lo[0]) / n[0] as f64,
        (hi[1] - lo[1]) / n[1] as f64,
        (hi[2] - lo[2]) / n[2] as f64,
    ];
    let coord = |k: usize, i: usize| {
        if i == n[k] {
            hi[k]
        } else {
            lo[k] + i as f64 * h[k]
        }
    };
    let grid_id = |i: usize, j: usize, k: usize| (k * (n[1] + 1) + j) * (n[0] + 1) + i;

    let mut boxes = Vec::new();
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                let center = [
                    lo[0] + (i as f64 + 0.5) * h[0],
                    lo[1] + (j as f64 + 0.5) * h[1],
                    lo[2] + (k as f64 + 0.5) * h[2],
                ];
                if let Some(region) = keep(center) {
                    boxes.push(([i, j, k], region));
                }
            }
        }
    }

    let total = (n[0] + 1) * (n[1] + 1) * (n[2] + 1);
    let mut index = vec![usize::MAX; total];
    for (b, _) in &boxes {
        for corner in 0..8 {
            let (di, dj, dk) = (corner & 1, (corner >> 1) & 1, (corner >> 2) & 1);
            index[grid_id(b[0] + di, b[1] + dj, b[2] + dk)] = 0;
        }
    }
    let mut vertices = Vec::new();
    for k in 0..=n[2] {
        for j in 0..=n[1] {
            for i in 0..=n[0] {
                let g = grid_id(i, j, k);
                if index[g] != usize::MAX {
                    index[g] = vertices.len();
                    vertices.push([coord(0, i), coord(1, j), coord(2, k)]);
                }
            }
        }
    }

    let mut cells = Vec::with_capacity(boxes.len() * 24);
    let mut regions = Vec::with_capacity(boxes.len() * 6);
    for (b, region) in &boxes {
        let mirrored = [b[0] % 2 == 1, b[1] % 2 == 1, b[2] % 2 == 1];
        let start = [0, 1, 2].map(|a| b[a] + usize::from(mirrored[a]));
        for path in KUHN_PATHS {
            let mut p = start;
            cells.push(index[grid_id(p[0], p[1], p[2])]);
            for axis in path {
                if mirrored[axis] {
                    p[axis] -= 1;
                } else {
                    p[axis] += 1;
                }
                cells.push(index[grid_id(p[0], p[1], p[2])]);
            }
            regions.push(*region);
        }
    }
    Mesh::from_cells(3, vertices, cells, regions)
}

fn squares_2d(n: usize) -> Result<Mesh> {
    let h = 1.0 / n as f64;
    let coord = |i: usize| if i == n { 1.0 } else { i as f64 * h };
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([coord(i), coord(j), 0.0]);
        }
    }
    let mut cells = Vec::with_capacity(6 * n * n);
    for j in 0..n {
        for i in 0..n {
            cells.extend_from_slice(&[id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            cells.extend_from_slice(&[id(i, j), id(i, j + 1), id(i + 1, j + 1)]);
        }
    }
    let regions = vec![0; 2 * n * n];
    Mesh::from_cells(2, vertices, cells, regions)
}
