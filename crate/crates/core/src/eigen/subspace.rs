use rand::Rng;

use crate::linalg::{dot, generalized_hermitian_eigen, DenseMatrix, SparseMatrix, C64};
use crate::Result;

/// Makes the columns `M`-orthonormal by two passes of modified Gram-Schmidt.
/// A column that loses all but `1e-10` of its norm is replaced by a random
/// vector; returns the number of replacements.
pub fn m_orthonormalize<R: Rng>(mass: &SparseMatrix, block: &mut [Vec<C64>], rng: &mut R) -> usize {
    let mut restarts = 0;
    let mut mx: Vec<Vec<C64>> = Vec::with_capacity(block.len());
    for j in 0..block.len() {
        let mut attempts = 0;
        loop {
            let before = dot(&block[j], &mass.mul_vec(&block[j])).re.max(0.0).sqrt();
            for _pass in 0..2 {
                for i in 0..j {
                    let c = dot(&mx[i], &block[j]);
                    let (left, right) = block.split_at_mut(j);
                    for (x, y) in right[0].iter_mut().zip(&left[i]) {
                        *x -= c * y;
                    }
                }
            }
            let m = mass.mul_vec(&block[j]);
            let after = dot(&block[j], &m).re.max(0.0).sqrt();
            if after > 1e-10 * before && after > 0.0 {
                let inv = 1.0 / after;
                for x in block[j].iter_mut() {
                    *x *= inv;
                }
                mx.push(m.into_iter().map(|v| v * inv).collect());
                break;
            }
            attempts += 1;
            restarts += 1;
            assert!(attempts < 20, "cannot extend an M-orthonormal block");
            for x in block[j].iter_mut() {
                *x = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
    }
    restarts
}

/// Rayleigh-Ritz for the pencil `(S, M)` on the span of `block`. Returns
/// ascending Ritz values and the matching `M`-orthonormal Ritz vectors.
pub fn rayleigh_ritz(
    stiffness: &SparseMatrix,
    mass: &SparseMatrix,
    block: &[Vec<C64>],
) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let m = block.len();
    let sx: Vec<Vec<C64>> = block.iter().map(|x| stiffness.mul_vec(x)).collect();
    let mx: Vec<Vec<C64>> = block.iter().map(|x| mass.mul_vec(x)).collect();
    let mut a = DenseMatrix::zeros(m, m);
    let mut b = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            a[(i, j)] = dot(&block[i], &sx[j]);
            b[(i, j)] = dot(&block[i], &mx[j]);
        }
    }
    let (theta, y) = generalized_hermitian_eigen(&a, &b)?;
    let n = block.first().map_or(0, Vec::len);
    let vectors = (0..m)
        .map(|k| {
            let mut v = vec![C64::new(0.0, 0.0); n];
            for (j, x) in block.iter().enumerate() {
                let c = y[(j, k)];
                for (vi, xi) in v.iter_mut().zip(x) {
                    *vi += c * xi;
                }
            }
            v
        })
        .collect();
    Ok((theta, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn orthonormalizes_and_restarts_dependent_columns() {
        let mass = SparseMatrix::from_diagonal(&[
            C64::new(1.0, 0.0),
            C64::new(2.0, 0.0),
            C64::new(3.0, 0.0),
            C64::new(4.0, 0.0),
        ]);
        let v = vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(1.0, 1.0),
            C64::new(0.0, 0.0),
        ];
        let mut block = vec![
            v.clone(),
            v.iter().map(|x| x * C64::new(0.0, 2.0)).collect(),
            vec![C64::new(0.0, 0.0); 4],
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let restarts = m_orthonormalize(&mass, &mut block, &mut rng);
        assert!(restarts >= 2);
        for i in 0..3 {
            for j in 0..3 {
                let g = dot(&block[i], &mass.mul_vec(&block[j]));
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn ritz_values_of_an_invariant_subspace_are_exact() {
        let s = SparseMatrix::from_diagonal(&[
            C64::new(5.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(3.0, 0.0),
        ]);
        let m = SparseMatrix::identity(3);
        let e = |i: usize| {
            (0..3)
                .map(|k| C64::new(if k == i { 1.0 } else { 0.0 }, 0.0))
                .collect::<Vec<_>>()
        };
        let (theta, vecs) = rayleigh_ritz(&s, &m, &[e(0), e(1)]).unwrap();
        assert!((theta[0] - 1.0).abs() < 1e-14 && (theta[1] - 5.0).abs() < 1e-14);
        assert!((vecs[0][1].norm() - 1.0).abs() < 1e-14);
    }
}
