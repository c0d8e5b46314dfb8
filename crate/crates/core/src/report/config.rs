//! Experiment configuration, read from TOML.
//!
//! ```toml
//! name = "cube"
//! targets = [1, 4, 6]          # eigenvalue numbers, counted from 1
//!
//! [domain]
//! kind = "unit_cube"
//! resolution = 4
//!
//! [refinement]
//! uniform = 2
//!
//! [scheme]
//! kind = "fixed_shift"
//! i0 = 0
//! ```
//!
//! Materials are given per region as rows of `[re, im]` pairs, real rows,
//! or a scalar multiple of the identity:
//!
//! ```toml
//! [[materials]]
//! region = 0
//! mu = [[[2, 0], [1, -2], [0, -1]], [[1, 2], [4, 0], [0, 1]], [[0, 1], [0, -1], [5, 0]]]
//! eps = 1.0
//! ```
//!
//! Without a `[[materials]]` table every region is vacuum.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::eigen::CoarseOptions;
use crate::linalg::{PreconditionerKind, C64};
use crate::materials::{mu_dim, HermitianTensor, Material, MaterialMap};
use crate::mesh::{generate_mesh, DomainKind, DomainSpec, Mesh};
use crate::multigrid::{
    ClusterOrthogonalization, LevelSolveOptions, Refinement, Scheme, SchemeConfig,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub domain: DomainConfig,
    #[serde(default)]
    pub materials: Vec<MaterialConfig>,
    #[serde(default)]
    pub refinement: RefinementConfig,
    #[serde(default)]
    pub scheme: SchemeSection,
    #[serde(default)]
    pub coarse: CoarseSection,
    /// Eigenvalue numbers, counted from 1.
    #[serde(default)]
    pub targets: Vec<usize>,
    #[serde(default)]
    pub references: Vec<Reference>,
    /// Named set in a reference data file, merged into `references`.
    #[serde(default)]
    pub reference_set: Option<ReferenceSetRef>,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_name() -> String {
    "experiment".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub kind: DomainKind,
    pub resolution: usize,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
}

impl DomainConfig {
    pub fn spec(&self) -> DomainSpec {
        DomainSpec {
            kind: self.kind,
            parameters: self.parameters.clone(),
        }
    }

    pub fn generate(&self) -> Result<Mesh> {
        generate_mesh(&self.spec(), self.resolution)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub region: u32,
    #[serde(default)]
    pub mu: Option<TensorValue>,
    #[serde(default)]
    pub eps: Option<TensorValue>,
}

/// A tensor as written in the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TensorValue {
    Scalar(f64),
    Real(Vec<Vec<f64>>),
    Complex(Vec<Vec<[f64; 2]>>),
}

impl TensorValue {
    pub fn to_tensor(&self, n: usize) -> Result<HermitianTensor> {
        match self {
            TensorValue::Scalar(s) => Ok(HermitianTensor::scaled_identity(n, *s)),
            TensorValue::Real(rows) => HermitianTensor::from_real_rows(rows),
            TensorValue::Complex(rows) => {
                let rows: Vec<Vec<C64>> = rows
                    .iter()
                    .map(|r| r.iter().map(|&[re, im]| C64::new(re, im)).collect())
                    .collect();
                HermitianTensor::from_rows(&rows)
            }
        }
    }
}

/// Uniform refinements first, then optional passes toward an edge.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementConfig {
    #[serde(default)]
    pub uniform: usize,
    #[serde(default)]
    pub toward_edge: Option<EdgeRefinementConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRefinementConfig {
    pub start: [f64; 3],
    pub end: [f64; 3],
    pub ratio: f64,
    pub passes: usize,
}

impl RefinementConfig {
    pub fn schedule(&self) -> Vec<Refinement> {
        let mut s = vec![Refinement::Uniform; self.uniform];
        if let Some(e) = &self.toward_edge {
            s.extend(std::iter::repeat_n(
                Refinement::TowardEdge {
                    start: e.start,
                    end: e.end,
                    ratio: e.ratio,
                },
                e.passes,
            ));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    RayleighQuotient,
    #[default]
    FixedShift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSection {
    pub kind: SchemeKind,
    /// Last level with a Rayleigh-quotient shift; fixed-shift only.
    pub i0: usize,
    pub orthogonalization: ClusterOrthogonalization,
    pub tol: f64,
    pub max_iter: usize,
    pub dense_threshold: usize,
    pub preconditioner: PreconditionerKind,
}

impl Default for SchemeSection {
    fn default() -> Self {
        let s = LevelSolveOptions::default();
        SchemeSection {
            kind: SchemeKind::default(),
            i0: 0,
            orthogonalization: ClusterOrthogonalization::default(),
            tol: s.tol,
            max_iter: s.max_iter,
            dense_threshold: s.dense_threshold,
            preconditioner: s.preconditioner,
        }
    }
}

impl SchemeSection {
    pub fn scheme(&self) -> Scheme {
        match self.kind {
            SchemeKind::RayleighQuotient => Scheme::RayleighQuotient,
            SchemeKind::FixedShift => Scheme::FixedShift { i0: self.i0 },
        }
    }

    /// Scheme configuration for the cluster starting at `target` (0-based).
    pub fn config(&self, target: usize) -> SchemeConfig {
        let mut cfg = SchemeConfig::new(self.scheme(), target);
        cfg.orthogonalization = self.orthogonalization;
        cfg.solve = LevelSolveOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            dense_threshold: self.dense_threshold,
            preconditioner: self.preconditioner,
        };
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoarseSection {
    /// Pairs computed; at least two more than the largest target.
    pub k: Option<usize>,
    pub sigma: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for CoarseSection {
    fn default() -> Self {
        let c = CoarseOptions::default();
        CoarseSection {
            k: None,
            sigma: c.sigma,
            tol: c.tol,
            max_iter: c.max_iter,
            seed: c.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    /// Adds the per-level direct eigenvalues to the report.
    pub enabled: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory; `out/<name>` when unset.
    pub dir: Option<PathBuf>,
}

/// A reference eigenvalue with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reference {
    /// Eigenvalue number, counted from 1.
    pub target: usize,
    pub value: f64,
    /// Accepted relative error.
    pub tolerance: f64,
    #[serde(default)]
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSetRef {
    /// Path of the data file, relative to the configuration file.
    pub file: PathBuf,
    pub name: String,
}

/// A reference data file: a list of named sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceFile {
    #[serde(rename = "set")]
    pub sets: Vec<ReferenceSet>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSet {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub values: Vec<Reference>,
}

impl ReferenceFile {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn set(&self, name: &str) -> Result<&ReferenceSet> {
        self.sets
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::Config(format!("no reference set named `{name}`")))
    }
}

impl ExperimentConfig {
    /// Parses and validates; reference sets are not resolved.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a file, resolving a reference set relative to its directory.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        if let Some(set) = cfg.reference_set.take() {
            let file = path.parent().unwrap_or(Path::new(".")).join(&set.file);
            let refs = ReferenceFile::from_path(&file)?;
            cfg.merge_references(&refs.set(&set.name)?.values);
            cfg.reference_set = Some(set);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Adds references for targets that have none yet.
    pub fn merge_references(&mut self, refs: &[Reference]) {
        for r in refs {
            if !self.references.iter().any(|x| x.target == r.target) {
                self.references.push(r.clone());
            }
        }
        self.references.sort_by_key(|r| r.target);
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.domain.resolution == 0 {
            return bad("domain.resolution must be at least 1".into());
        }
        self.domain.spec().validate()?;
        if let Some(&t) = self.targets.iter().find(|&&t| t == 0) {
            return bad(format!("target {t}: eigenvalues are numbered from 1"));
        }
        if let Some(k) = self.coarse.k {
            if let Some(&t) = self.targets.iter().find(|&&t| t > k) {
                return bad(format!("target {t} exceeds coarse.k = {k}"));
            }
        }
        if let Some(e) = &self.refinement.toward_edge {
            if !(e.ratio > 0.0 && e.ratio < 1.0) {
                return bad(format!(
                    "refinement.toward_edge.ratio must lie in (0, 1), got {}",
                    e.ratio
                ));
            }
        }
        if !(self.scheme.tol > 0.0) {
            return bad("scheme.tol must be positive".into());
        }
        for r in &self.references {
            if r.target == 0 || !(r.tolerance >= 0.0) || !r.value.is_finite() {
                return bad(format!("reference for target {} is malformed", r.target));
            }
        }
        let mut regions: Vec<u32> = self.materials.iter().map(|m| m.region).collect();
        regions.sort_unstable();
        if regions.windows(2).any(|w| w[0] == w[1]) {
            return bad("a region appears twice in [[materials]]".into());
        }
        Ok(())
    }

    /// Material map; regions of the generated mesh without an entry are
    /// vacuum only when no material is declared at all.
    pub fn material_map(&self, mesh: &Mesh) -> Result<MaterialMap> {
        let dim = mesh.dim();
        let mut map = MaterialMap::new(dim);
        if self.materials.is_empty() {
            let mut regions = mesh.regions().to_vec();
            regions.sort_unstable();
            regions.dedup();
            for r in regions {
                map.insert(r, Material::vacuum(dim));
            }
            return Ok(map);
        }
        for m in &self.materials {
            let tensor = |v: &Option<TensorValue>, n: usize| match v {
                Some(v) => v.to_tensor(n),
                None => Ok(HermitianTensor::identity(n)),
            };
            map.insert(
                m.region,
                Material {
                    mu: tensor(&m.mu, mu_dim(dim))?,
                    eps: tensor(&m.eps, dim)?,
                },
            );
        }
        Ok(map)
    }

    /// Coarse options with `k` covering every target cluster.
    pub fn coarse_options(&self) -> CoarseOptions {
        let largest = self.targets.iter().copied().max().unwrap_or(1);
        CoarseOptions {
            k: self.coarse.k.unwrap_or(largest + 2),
            sigma: self.coarse.sigma,
            tol: self.coarse.tol,
            max_iter: self.coarse.max_iter,
            seed: self.coarse.seed,
            ..CoarseOptions::default()
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output
            .dir
            .clone()
            .unwrap_or_else(|| Path::new("out").join(&self.name))
    }

    pub fn reference(&self, target: usize) -> Option<&Reference> {
        self.references.iter().find(|r| r.target == target)
    }
}
