//! Piecewise-constant Hermitian material tensors and their coercivity
//! constants.
//!
//! In 3D both `μ` and `ε` are 3×3 Hermitian positive definite matrices. In
//! 2D the curl is scalar, so `μ` is a positive 1×1 tensor and `ε` is 2×2.
//! The constants are `γ = min 1/λ_max(μ)` and `β = min λ_min(ε)` over all
//! regions; `γ/β` is the shift of the augmented A-form.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::linalg::{hermitian_eigen, DenseMatrix, C64};
use crate::{Error, Result};

/// Relative Hermitian defect accepted for a material tensor.
pub const HERMITIAN_TOL: f64 = 1e-14;

/// A small dense Hermitian tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianTensor {
    n: usize,
    entries: Vec<C64>,
}

impl HermitianTensor {
    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, s: f64) -> Self {
        let mut entries = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            entries[i * n + i] = C64::new(s, 0.0);
        }
        HermitianTensor { n, entries }
    }

    /// Builds a tensor from rows. The Hermitian property is not enforced
    /// here; see [`validate_materials`].
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: rows.iter().map(Vec::len).find(|&l| l != n).unwrap_or(0),
            });
        }
        Ok(HermitianTensor {
            n,
            entries: rows.concat(),
        })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.entries[i * self.n + j]
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let rows: Vec<Vec<C64>> = self.entries.chunks(self.n).map(<[C64]>::to_vec).collect();
        DenseMatrix::from_rows(&rows)
    }

    /// `max |(T − Tᴴ)/2|` relative to `max |T|`.
    pub fn hermitian_defect(&self) -> f64 {
        let m = self.to_dense();
        let scale = m.max_abs();
        if scale == 0.0 {
            0.0
        } else {
            m.hermitian_defect() / scale
        }
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = self.to_dense();
        let h = DenseMatrix::from_rows(
            &(0..self.n)
                .map(|i| {
                    (0..self.n)
                        .map(|j| 0.5 * (m[(i, j)] + m[(j, i)].conj()))
                        .collect()
                })
                .collect::<Vec<_>>(),
        );
        hermitian_eigen(&h).0
    }

    /// Inverse of the tensor, computed by dense LU.
    pub fn inverse(&self) -> Result<HermitianTensor> {
        let inv = self.to_dense().inverse()?;
        let n = self.n;
        // symmetrize to remove rounding asymmetry
        let entries = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                0.5 * (inv[(i, j)] + inv[(j, i)].conj())
            })
            .collect();
        Ok(HermitianTensor { n, entries })
    }

    /// `xᴴ T y`.
    pub fn form(&self, x: &[C64], y: &[C64]) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for i in 0..self.n {
            let mut t = C64::new(0.0, 0.0);
            for j in 0..self.n {
                t += self.get(i, j) * y[j];
            }
            s += x[i].conj() * t;
        }
        s
    }

    /// `xᵀ T y` for real vectors.
    pub fn real_form(&self, x: &[f64], y: &[f64]) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for i in 0..self.n {
            for j in 0..self.n {
                s += self.get(i, j) * (x[i] * y[j]);
            }
        }
        s
    }
}

/// Material tensors of one region.
#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub mu: HermitianTensor,
    pub eps: HermitianTensor,
}

impl Material {
    /// `μ = ε = I` in dimension `dim`.
    pub fn vacuum(dim: usize) -> Self {
        Material {
            mu: HermitianTensor::identity(mu_dim(dim)),
            eps: HermitianTensor::identity(dim),
        }
    }
}

/// Size of the `μ` tensor in spatial dimension `dim`.
pub fn mu_dim(dim: usize) -> usize {
    if dim == 2 {
        1
    } else {
        3
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialMap {
    dim: usize,
    regions: BTreeMap<u32, Material>,
}

impl MaterialMap {
    pub fn new(dim: usize) -> Self {
        MaterialMap {
            dim,
            regions: BTreeMap::new(),
        }
    }

    /// Vacuum in region 0.
    pub fn uniform(dim: usize) -> Self {
        Self::new(dim).with_region(0, Material::vacuum(dim))
    }

    pub fn with_region(mut self, region: u32, material: Material) -> Self {
        self.regions.insert(region, material);
        self
    }

    pub fn insert(&mut self, region: u32, material: Material) {
        self.regions.insert(region, material);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, region: u32) -> Result<&Material> {
        self.regions
            .get(&region)
            .ok_or(Error::MissingMaterial(region))
    }

    pub fn regions(&self) -> impl Iterator<Item = (u32, &Material)> {
        self.regions.iter().map(|(&r, m)| (r, m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoercivityConstants {
    pub gamma: f64,
    pub beta: f64,
    /// `γ / β`.
    pub shift: f64,
}

/// Diagnostics of one tensor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorDiagnostic {
    pub region: u32,
    pub tensor: &'static str,
    pub hermitian_defect: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaterialDiagnostics {
    pub entries: Vec<TensorDiagnostic>,
}

impl MaterialDiagnostics {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

/// Reports the Hermitian defect and eigenvalue range of every tensor.
pub fn validate_materials(materials: &MaterialMap) -> MaterialDiagnostics {
    let mut entries = Vec::new();
    for (region, m) in materials.regions() {
        for (name, t, want) in [
            ("mu", &m.mu, mu_dim(materials.dim)),
            ("eps", &m.eps, materials.dim),
        ] {
            let defect = t.hermitian_defect();
            let ev = t.eigenvalues();
            let lo = ev.first().copied().unwrap_or(f64::NAN);
            let hi = ev.last().copied().unwrap_or(f64::NAN);
            entries.push(TensorDiagnostic {
                region,
                tensor: name,
                hermitian_defect: defect,
                min_eigenvalue: lo,
                max_eigenvalue: hi,
                passed: t.dim() == want && defect <= HERMITIAN_TOL && lo > 0.0,
            });
        }
    }
    MaterialDiagnostics { entries }
}

/// Attained coercivity constants over all regions.
pub fn coercivity_constants(materials: &MaterialMap) -> Result<CoercivityConstants> {
    let diag = validate_materials(materials);
    if let Some(bad) = diag.entries.iter().find(|e| !e.passed) {
        let message = if bad.hermitian_defect > HERMITIAN_TOL {
            format!(
                "{} is not Hermitian (relative defect {:e})",
                bad.tensor, bad.hermitian_defect
            )
        } else if !(bad.min_eigenvalue > 0.0) {
            format!(
                "{} is not positive definite (smallest eigenvalue {:e})",
                bad.tensor, bad.min_eigenvalue
            )
        } else {
            format!(
                "{} has the wrong size for a {}D problem",
                bad.tensor, materials.dim
            )
        };
        return Err(Error::InvalidMaterial {
            region: bad.region,
            message,
        });
    }
    if diag.entries.is_empty() {
        return Err(Error::Config("material map has no regions".into()));
    }
    let gamma = diag
        .entries
        .iter()
        .filter(|e| e.tensor == "mu")
        .map(|e| 1.0 / e.max_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    let beta = diag
        .entries
        .iter()
        .filter(|e| e.tensor == "eps")
        .map(|e| e.min_eigenvalue)
        .fold(f64::INFINITY, f64::min);
    Ok(CoercivityConstants {
        gamma,
        beta,
        shift: gamma / beta,
    })
}

/// The complex Hermitian permeability used in the thick-L example.
pub fn complex_example_mu() -> HermitianTensor {
    let c = C64::new;
    HermitianTensor::from_rows(&[
        vec![c(2.0, 0.0), c(1.0, -2.0), c(0.0, -1.0)],
        vec![c(1.0, 2.0), c(4.0, 0.0), c(0.0, 1.0)],
        vec![c(0.0, 1.0), c(0.0, -1.0), c(5.0, 0.0)],
    ])
    .expect("3x3")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_constants() {
        let c = coercivity_constants(&MaterialMap::uniform(3)).unwrap();
        assert_eq!((c.gamma, c.beta, c.shift), (1.0, 1.0, 1.0));
        let c = coercivity_constants(&MaterialMap::uniform(2)).unwrap();
        assert_eq!((c.gamma, c.beta, c.shift), (1.0, 1.0, 1.0));
    }

    #[test]
    fn piecewise_eps() {
        let m = MaterialMap::uniform(3).with_region(
            1,
            Material {
                mu: HermitianTensor::identity(3),
                eps: HermitianTensor::scaled_identity(3, 2.0),
            },
        );
        let c = coercivity_constants(&m).unwrap();
        assert_eq!((c.gamma, c.beta), (1.0, 1.0));
    }

    #[test]
    fn complex_mu_matches_nalgebra() {
        let mu = complex_example_mu();
        let m = MaterialMap::new(3).with_region(
            0,
            Material {
                mu: mu.clone(),
                eps: HermitianTensor::identity(3),
            },
        );
        let diag = validate_materials(&m);
        assert!(diag.passed());
        assert_eq!(diag.entries[0].hermitian_defect, 0.0);

        let a = nalgebra::Matrix3::from_fn(|i, j| {
            let z = mu.get(i, j);
            nalgebra::Complex::new(z.re, z.im)
        });
        let ev = a.symmetric_eigenvalues();
        let lmax = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let c = coercivity_constants(&m).unwrap();
        assert!((c.gamma - 1.0 / lmax).abs() < 1e-13);
        // trace check
        assert!((ev.iter().sum::<f64>() - 11.0).abs() < 1e-12);
    }

    #[test]
    fn anti_hermitian_perturbation_fails() {
        let c = C64::new;
        let mut rows: Vec<Vec<C64>> = (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
                    .collect()
            })
            .collect();
        rows[0][1] = c(1e-6, 0.0);
        rows[1][0] = c(-1e-6, 0.0);
        let mu = HermitianTensor::from_rows(&rows).unwrap();
        assert!((mu.hermitian_defect() - 1e-6).abs() < 1e-18);
        let m = MaterialMap::new(3).with_region(
            4,
            Material {
                mu,
                eps: HermitianTensor::identity(3),
            },
        );
        assert!(!validate_materials(&m).passed());
        assert!(matches!(
            coercivity_constants(&m),
            Err(Error::InvalidMaterial { region: 4, .. })
        ));
    }

    #[test]
    fn indefinite_eps_fails() {
        let eps = HermitianTensor::from_real_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let m = MaterialMap::new(3).with_region(
            2,
            Material {
                mu: HermitianTensor::identity(3),
                eps,
            },
        );
        let d = validate_materials(&m);
        assert!(!d.passed());
        assert_eq!(d.entries[1].min_eigenvalue, -1.0);
        match coercivity_constants(&m) {
            Err(Error::InvalidMaterial { region, message }) => {
                assert_eq!(region, 2);
                assert!(message.contains("positive definite"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_region_is_reported() {
        assert!(matches!(
            MaterialMap::uniform(3).get(7),
            Err(Error::MissingMaterial(7))
        ));
    }

    fn random_hpd(seed: &[f64]) -> HermitianTensor {
        // A = LLᴴ + 0.1 I with L lower triangular from the seed
        let c = C64::new;
        let mut l = [[c(0.0, 0.0); 3]; 3];
        let mut k = 0;
        for i in 0..3 {
            for j in 0..=i {
                l[i][j] = c(seed[k], if i == j { 0.0 } else { seed[k + 1] });
                k += 2;
            }
        }
        let rows: Vec<Vec<C64>> = (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| {
                        let s: C64 = (0..3).map(|m| l[i][m] * l[j][m].conj()).sum();
                        s + if i == j { c(0.1, 0.0) } else { c(0.0, 0.0) }
                    })
                    .collect()
            })
            .collect();
        HermitianTensor::from_rows(&rows).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn coercivity_inequalities_hold(
            a in proptest::collection::vec(-2.0f64..2.0, 12),
            b in proptest::collection::vec(-2.0f64..2.0, 12),
            xi in proptest::collection::vec(-1.0f64..1.0, 600),
        ) {
            let (mu, eps) = (random_hpd(&a), random_hpd(&b));
            let m = MaterialMap::new(3).with_region(0, Material { mu: mu.clone(), eps: eps.clone() });
            let c = coercivity_constants(&m).unwrap();
            let mu_inv = mu.inverse().unwrap();
            for k in 0..100 {
                let x: Vec<C64> = (0..3).map(|i| C64::new(xi[6 * k + 2 * i], xi[6 * k + 2 * i + 1])).collect();
                let xx: f64 = x.iter().map(|z| z.norm_sqr()).sum();
                let p = mu_inv.form(&x, &x).re;
                let q = eps.form(&x, &x).re;
                let scale = 1e-12 * (p.abs() + q.abs() + xx).max(1e-300);
                prop_assert!(p >= c.gamma * xx - scale);
                prop_assert!(q >= c.beta * xx - scale);
            }
        }
    }
}
