//! Compressed sparse row storage with complex values.

use std::io::{BufRead, Write};

use super::{DenseMatrix, C64};
use crate::{Error, Result};

pub type Triplet = (usize, usize, C64);

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    /// Builds a CSR matrix, summing duplicate entries and dropping exact zeros.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<Triplet>) -> Self {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows_of = Vec::with_capacity(triplets.len());
        for (i, j, v) in triplets {
            assert!(
                i < nrows && j < ncols,
                "triplet ({i},{j}) outside {nrows}x{ncols}"
            );
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                rows_of.push(i);
                last = Some((i, j));
            }
        }
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((i, j), v) in rows_of.into_iter().zip(col_idx).zip(values) {
            if v != C64::new(0.0, 0.0) {
                row_ptr[i + 1] += 1;
                keep_cols.push(j);
                keep_vals.push(v);
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx: keep_cols,
            values: keep_vals,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![C64::new(1.0, 0.0); n])
    }

    pub fn from_diagonal(d: &[C64]) -> Self {
        Self::from_triplets(
            d.len(),
            d.len(),
            d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect(),
        )
    }

    pub fn from_dense(a: &DenseMatrix) -> Self {
        let mut t = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                t.push((i, j, a[(i, j)]));
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[C64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = Triplet> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch {
                expected: self.ncols,
                found: x.len(),
            });
        }
        Ok(self.mul_vec(x))
    }

    /// `y = Aᴴ x`.
    pub fn matvec_adjoint(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.nrows {
            return Err(Error::DimensionMismatch {
                expected: self.nrows,
                found: x.len(),
            });
        }
        let mut y = vec![C64::new(0.0, 0.0); self.ncols];
        for (i, xi) in x.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, v) in cols.iter().zip(vals) {
                y[j] += v.conj() * xi;
            }
        }
        Ok(y)
    }

    /// Unchecked `A x`; panics on dimension mismatch.
    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            let mut s = C64::new(0.0, 0.0);
            for (&j, v) in self.col_idx[r.clone()].iter().zip(&self.values[r]) {
                s += v * x[j];
            }
            *yi = s;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().map(|(i, j, v)| (j, i, v.conj())).collect(),
        )
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(
            self.ncols,
            self.nrows,
            self.triplets().map(|(i, j, v)| (j, i, v)).collect(),
        )
    }

    /// `alpha A + beta B`.
    pub fn linear_combination(alpha: C64, a: &Self, beta: C64, b: &Self) -> Self {
        assert_eq!(a.shape(), b.shape());
        let t = a
            .triplets()
            .map(|(i, j, v)| (i, j, alpha * v))
            .chain(b.triplets().map(|(i, j, v)| (i, j, beta * v)))
            .collect();
        Self::from_triplets(a.nrows, a.ncols, t)
    }

    /// Sparse product `A B`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut t = Vec::new();
        let mut acc = vec![C64::new(0.0, 0.0); other.ncols];
        let mut touched = Vec::new();
        let mut mark = vec![false; other.ncols];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&k, a) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(k);
                for (&j, b) in ocols.iter().zip(ovals) {
                    if !mark[j] {
                        mark[j] = true;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            for &j in &touched {
                t.push((i, j, acc[j]));
                acc[j] = C64::new(0.0, 0.0);
                mark[j] = false;
            }
            touched.clear();
        }
        Self::from_triplets(self.nrows, other.ncols, t)
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max-norm of `A - Aᴴ` relative to the max-norm of `A`.
    pub fn hermitian_defect(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut d: f64 = 0.0;
        for (i, j, v) in self.triplets() {
            d = d.max((v - self.get(j, i).conj()).norm());
        }
        d / scale
    }

    /// Drops entries with magnitude at or below `tol` times the largest entry.
    pub fn pruned(&self, tol: f64) -> Self {
        let cut = tol * self.max_abs();
        Self::from_triplets(
            self.nrows,
            self.ncols,
            self.triplets().filter(|t| t.2.norm() > cut).collect(),
        )
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            d[(i, j)] = v;
        }
        d
    }

    /// Writes the matrix in triplet text format: a header line
    /// `nrows ncols nnz`, then one `i j re im` line per stored entry
    /// (0-based indices, round-trip precision).
    pub fn write_triplets<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for (i, j, v) in self.triplets() {
            writeln!(w, "{} {} {:e} {:e}", i, j, v.re, v.im)?;
        }
        Ok(())
    }

    pub fn read_triplets<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (nrows, ncols, nnz) = loop {
            let Some((n, line)) = lines.next() else {
                return Err(Error::Parse {
                    line: 1,
                    message: "missing header `nrows ncols nnz`".into(),
                });
            };
            let line = line?;
            if line.trim().is_empty() || line.starts_with('%') || line.starts_with('#') {
                continue;
            }
            let f = parse_fields::<usize>(&line, 3, n + 1)?;
            break (f[0], f[1], f[2]);
        };
        let mut t = Vec::with_capacity(nnz);
        for (n, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let bad = |m: &str| Error::Parse {
                line: n + 1,
                message: m.to_string(),
            };
            let i: usize = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("row index"))?;
            let j: usize = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("column index"))?;
            let re: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("real part"))?;
            let im: f64 = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("imaginary part"))?;
            if i >= nrows || j >= ncols {
                return Err(bad("index out of range"));
            }
            t.push((i, j, C64::new(re, im)));
        }
        if t.len() != nnz {
            return Err(Error::Parse {
                line: t.len() + 2,
                message: format!("expected {nnz} entries, found {}", t.len()),
            });
        }
        Ok(Self::from_triplets(nrows, ncols, t))
    }
}

fn parse_fields<T: std::str::FromStr>(line: &str, n: usize, lineno: usize) -> Result<Vec<T>> {
    let f: Vec<T> = line
        .split_whitespace()
        .map(|s| s.parse::<T>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse {
            line: lineno,
            message: format!("cannot parse `{line}`"),
        })?;
    if f.len() != n {
        return Err(Error::Parse {
            line: lineno,
            message: format!("expected {n} fields, found {}", f.len()),
        });
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_is_neutral() {
        let x = vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.0, 0.0)];
        assert_eq!(SparseMatrix::identity(3).matvec(&x).unwrap(), x);
    }

    #[test]
    fn imaginary_diagonal() {
        let a = SparseMatrix::from_diagonal(&[c(0.0, 2.0); 4]);
        let y = a.matvec(&[c(1.0, 0.0); 4]).unwrap();
        assert!(y.iter().all(|v| *v == c(0.0, 2.0)));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = SparseMatrix::identity(3);
        assert!(matches!(
            a.matvec(&[c(1.0, 0.0); 2]),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 2
            })
        ));
    }

    #[test]
    fn duplicates_are_summed_and_columns_sorted() {
        let a = SparseMatrix::from_triplets(
            2,
            3,
            vec![
                (0, 2, c(1.0, 0.0)),
                (0, 0, c(1.0, 0.0)),
                (0, 2, c(2.0, 0.0)),
                (1, 1, c(0.0, 0.0)),
            ],
        );
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.row(0).0, &[0, 2]);
        assert_eq!(a.get(0, 2), c(3.0, 0.0));
    }

    #[test]
    fn triplet_text_round_trip() {
        let a = SparseMatrix::from_triplets(
            3,
            2,
            vec![
                (0, 1, c(0.1, -1.0 / 3.0)),
                (2, 0, c(std::f64::consts::PI, 1e-300)),
            ],
        );
        let mut buf = Vec::new();
        a.write_triplets(&mut buf).unwrap();
        let b = SparseMatrix::read_triplets(buf.as_slice()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_triplet_file_is_rejected() {
        let text = "2 2 2\n0 0 1 0\n";
        assert!(matches!(
            SparseMatrix::read_triplets(text.as_bytes()),
            Err(Error::Parse { .. })
        ));
    }

    fn arb_matrix() -> impl Strategy<Value = (SparseMatrix, Vec<C64>, Vec<C64>)> {
        (1usize..12, 1usize..12).prop_flat_map(|(m, n)| {
            (
                prop::collection::vec((0..m, 0..n, -5.0..5.0f64, -5.0..5.0f64), 0..40),
                prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n),
                prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), m),
            )
                .prop_map(move |(t, x, y)| {
                    let a = SparseMatrix::from_triplets(
                        m,
                        n,
                        t.into_iter()
                            .map(|(i, j, re, im)| (i, j, c(re, im)))
                            .collect(),
                    );
                    (
                        a,
                        x.into_iter().map(|(r, i)| c(r, i)).collect(),
                        y.into_iter().map(|(r, i)| c(r, i)).collect(),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn adjoint_identity((a, x, y) in arb_matrix()) {
            // (Aᴴ y, x) = (y, A x)
            let lhs = dot(&a.matvec_adjoint(&y).unwrap(), &x);
            let rhs = dot(&y, &a.matvec(&x).unwrap());
            let scale = 1.0 + lhs.norm().max(rhs.norm());
            prop_assert!((lhs - rhs).norm() <= 1e-13 * scale);
        }

        #[test]
        fn adjoint_matrix_matches_adjoint_matvec((a, _x, y) in arb_matrix()) {
            let via_matrix = a.adjoint().matvec(&y).unwrap();
            let via_kernel = a.matvec_adjoint(&y).unwrap();
            for (u, v) in via_matrix.iter().zip(&via_kernel) {
                prop_assert!((u - v).norm() <= 1e-12);
            }
        }
    }
}
