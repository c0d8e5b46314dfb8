use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_operators, edge_prolongation, AssembledOperators};
use crate::linalg::SparseMatrix;
use crate::materials::MaterialMap;
use crate::mesh::{
    build_topology, refine_toward_edge, refine_uniform, AxisLine, EdgeTopology, Mesh,
};
use crate::{Error, Result};

/// One refinement step of a schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Refinement {
    Uniform,
    /// Local refinement toward a straight edge; see [`refine_toward_edge`].
    TowardEdge {
        start: [f64; 3],
        end: [f64; 3],
        ratio: f64,
    },
}

impl Refinement {
    pub fn apply(&self, mesh: &Mesh) -> Result<Mesh> {
        match self {
            Refinement::Uniform => refine_uniform(mesh),
            Refinement::TowardEdge { start, end, ratio } => refine_toward_edge(
                mesh,
                &AxisLine {
                    start: *start,
                    end: *end,
                },
                *ratio,
            ),
        }
    }
}

/// A mesh level with its operators and the edge transfer from the level
/// below (absent on the coarse level).
#[derive(Debug, Clone)]
pub struct Level {
    pub index: usize,
    pub mesh: Mesh,
    pub topology: EdgeTopology,
    pub ops: AssembledOperators,
    pub prolongation: Option<SparseMatrix>,
}

impl Level {
    pub fn dof(&self) -> usize {
        self.ops.n_edge
    }

    /// Mesh size divided by that of the level below; a proxy for how much
    /// the discretization error should drop.
    pub fn h_ratio(&self, coarser: &Level) -> f64 {
        self.mesh.mesh_size() / coarser.mesh.mesh_size()
    }
}

/// Nested meshes, coarse first.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    levels: Vec<Level>,
}

impl Hierarchy {
    /// Applies `schedule` to `coarse`, assembling every level.
    pub fn build(coarse: Mesh, materials: &MaterialMap, schedule: &[Refinement]) -> Result<Self> {
        let mut meshes = vec![coarse];
        for step in schedule {
            let next = step.apply(meshes.last().expect("non-empty"))?;
            meshes.push(next);
        }
        Self::from_meshes(meshes, materials)
    }

    /// Assembles a hierarchy from already refined meshes. Each mesh must be
    /// the refinement of the previous one.
    pub fn from_meshes(meshes: Vec<Mesh>, materials: &MaterialMap) -> Result<Self> {
        if meshes.is_empty() {
            return Err(Error::InvalidScheme(
                "a hierarchy needs at least one mesh".into(),
            ));
        }
        let mut levels: Vec<Level> = Vec::with_capacity(meshes.len());
        for (index, mesh) in meshes.into_iter().enumerate() {
            let topology = build_topology(&mesh);
            let ops =
                assemble_operators(&mesh, &topology, materials).map_err(|e| e.at_level(index))?;
            let prolongation = match levels.last() {
                Some(prev) => Some(
                    edge_prolongation(&prev.mesh, &prev.topology, &mesh, &topology)
                        .map_err(|e| e.at_level(index))?,
                ),
                None => None,
            };
            levels.push(Level {
                index,
                mesh,
                topology,
                ops,
                prolongation,
            });
        }
        Ok(Hierarchy { levels })
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, i: usize) -> &Level {
        &self.levels[i]
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Number of fine levels above the coarse one.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn coarse(&self) -> &Level {
        &self.levels[0]
    }

    pub fn finest(&self) -> &Level {
        self.levels.last().expect("non-empty")
    }
}
