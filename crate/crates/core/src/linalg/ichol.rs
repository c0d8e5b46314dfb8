//! Zero-fill incomplete Cholesky factorization `A ≈ L Lᴴ` of a Hermitian
//! positive definite sparse matrix, used as a preconditioner.

use serde::{Deserialize, Serialize};

use super::{JacobiPreconditioner, Preconditioner, SparseMatrix, C64};
use crate::{Error, Result};

/// Diagonal shifts tried, relative to the diagonal, when a pivot fails.
const SHIFTS: [f64; 6] = [0.0, 1e-3, 1e-2, 0.1, 1.0, 10.0];

#[derive(Debug, Clone)]
pub struct IncompleteCholesky {
    n: usize,
    /// Strictly lower part of `L` by rows, columns ascending.
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    diag: Vec<f64>,
    shift: f64,
}

impl IncompleteCholesky {
    /// Factors `A` on its own lower-triangular pattern. If a pivot is not
    /// positive the factorization restarts on `A + α diag(A)` with growing α.
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        for shift in SHIFTS {
            if let Some(f) = Self::try_factor(a, shift) {
                return Ok(f);
            }
        }
        Err(Error::SingularMatrix { column: 0 })
    }

    /// Relative diagonal shift the factorization needed.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    fn try_factor(a: &SparseMatrix, shift: f64) -> Option<Self> {
        let n = a.nrows();
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::new();
        let mut vals: Vec<C64> = Vec::new();
        let mut diag = vec![0.0f64; n];
        for i in 0..n {
            let (acols, avals) = a.row(i);
            let start = cols.len();
            let mut aii = 0.0;
            for (&j, &v) in acols.iter().zip(avals) {
                if j < i {
                    cols.push(j);
                    vals.push(v);
                } else if j == i {
                    aii = v.re * (1.0 + shift);
                }
            }
            // L_ij = (A_ij − Σ_k L_ik conj(L_jk)) / L_jj over the shared pattern
            for p in start..cols.len() {
                let j = cols[p];
                let (jr, ir) = (row_ptr[j]..row_ptr[j + 1], start..p);
                let mut s = C64::new(0.0, 0.0);
                let (mut x, mut y) = (ir.start, jr.start);
                while x < ir.end && y < jr.end {
                    match cols[x].cmp(&cols[y]) {
                        std::cmp::Ordering::Less => x += 1,
                        std::cmp::Ordering::Greater => y += 1,
                        std::cmp::Ordering::Equal => {
                            s += vals[x] * vals[y].conj();
                            x += 1;
                            y += 1;
                        }
                    }
                }
                vals[p] = (vals[p] - s) / diag[j];
            }
            let pivot = aii - vals[start..].iter().map(|v| v.norm_sqr()).sum::<f64>();
            if !(pivot > 1e-12 * aii.abs()) {
                return None;
            }
            diag[i] = pivot.sqrt();
            row_ptr[i + 1] = cols.len();
        }
        Some(IncompleteCholesky {
            n,
            row_ptr,
            cols,
            vals,
            diag,
            shift,
        })
    }
}

impl Preconditioner for IncompleteCholesky {
    fn apply(&self, r: &[C64], z: &mut [C64]) {
        // L y = r
        for i in 0..self.n {
            let mut s = r[i];
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s -= self.vals[p] * z[self.cols[p]];
            }
            z[i] = s / self.diag[i];
        }
        // Lᴴ z = y, sweeping the rows of L as columns of Lᴴ
        for i in (0..self.n).rev() {
            z[i] /= self.diag[i];
            let zi = z[i];
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                z[self.cols[p]] -= self.vals[p].conj() * zi;
            }
        }
    }
}

/// Preconditioners selectable by configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreconditionerKind {
    /// Inverse diagonal.
    #[default]
    Jacobi,
    /// Zero-fill incomplete Cholesky.
    IncompleteCholesky,
}

/// A built preconditioner of either kind.
pub enum BuiltPreconditioner {
    Jacobi(JacobiPreconditioner),
    IncompleteCholesky(IncompleteCholesky),
}

impl BuiltPreconditioner {
    /// Builds the preconditioner from a Hermitian positive definite matrix.
    pub fn build(kind: PreconditionerKind, a: &SparseMatrix) -> Result<Self> {
        Ok(match kind {
            PreconditionerKind::Jacobi => {
                BuiltPreconditioner::Jacobi(JacobiPreconditioner::from_matrix(a))
            }
            PreconditionerKind::IncompleteCholesky => {
                BuiltPreconditioner::IncompleteCholesky(IncompleteCholesky::new(a)?)
            }
        })
    }
}

impl Preconditioner for BuiltPreconditioner {
    fn apply(&self, r: &[C64], z: &mut [C64]) {
        match self {
            BuiltPreconditioner::Jacobi(p) => p.apply(r, z),
            BuiltPreconditioner::IncompleteCholesky(p) => p.apply(r, z),
        }
    }
}
