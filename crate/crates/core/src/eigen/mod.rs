//! Eigenvalue solvers: the coarse mixed solve, spectrum clustering and the
//! converged inverse-iteration oracle used to check fine-level estimates.

mod coarse;
pub(crate) mod oracle;
mod subspace;

use std::io::Write;

use serde::Serialize;

pub use coarse::{cluster_spectrum, solve_coarse_eigen, CoarseOptions};
pub use oracle::{inverse_iteration_oracle, OracleOptions};
pub use subspace::{m_orthonormalize, rayleigh_ritz};

use crate::assembly::AssembledOperators;
use crate::linalg::{norm, C64};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairEstimate {
    pub lambda: f64,
    /// Free-edge coefficients.
    pub vector: Vec<C64>,
    /// Free-vertex multiplier (coarse mixed solve only).
    pub multiplier: Option<Vec<C64>>,
    /// `‖S u − λ M u‖ / ‖M u‖`.
    pub residual: f64,
    pub level: usize,
}

impl EigenPairEstimate {
    /// Recomputes the stored residual from the stored data.
    pub fn recompute_residual(&self, ops: &AssembledOperators) -> f64 {
        eigen_residual(ops, self.lambda, &self.vector)
    }
}

/// `‖S u − λ M u‖ / ‖M u‖` in vector 2-norms.
pub fn eigen_residual(ops: &AssembledOperators, lambda: f64, u: &[C64]) -> f64 {
    let su = ops.stiffness.mul_vec(u);
    let mu = ops.mass.mul_vec(u);
    let r: Vec<C64> = su.iter().zip(&mu).map(|(s, m)| s - m * lambda).collect();
    let d = norm(&mu);
    if d == 0.0 {
        f64::INFINITY
    } else {
        norm(&r) / d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// Ascending by `lambda`.
    pub pairs: Vec<EigenPairEstimate>,
    /// Contiguous index ranges of near-equal eigenvalues.
    pub clusters: Vec<Vec<usize>>,
    /// Indices whose eigenvalue is numerically zero.
    pub zero_modes: Vec<usize>,
}

#[derive(Debug, Serialize)]
struct SpectrumRecord {
    index: usize,
    lambda: f64,
    residual: f64,
    cluster: usize,
    zero_mode: bool,
}

impl SpectrumResult {
    pub fn lambdas(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    /// Cluster containing pair `index`.
    pub fn cluster_of(&self, index: usize) -> Option<usize> {
        self.clusters.iter().position(|c| c.contains(&index))
    }

    /// JSON array with one record per pair.
    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        let records: Vec<SpectrumRecord> = self
            .pairs
            .iter()
            .enumerate()
            .map(|(i, p)| SpectrumRecord {
                index: i,
                lambda: p.lambda,
                residual: p.residual,
                cluster: self.cluster_of(i).unwrap_or(usize::MAX),
                zero_mode: self.zero_modes.contains(&i),
            })
            .collect();
        serde_json::to_writer_pretty(w, &records)?;
        Ok(())
    }
}

/// Rotates `u` so its largest-magnitude entry is real and positive.
pub(crate) fn fix_phase(u: &mut [C64]) {
    if let Some(big) = u
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
    {
        if big.norm() > 0.0 {
            let phase = big.conj() / big.norm();
            for x in u.iter_mut() {
                *x *= phase;
            }
        }
    }
}
