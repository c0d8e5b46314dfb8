/// Quadrature on the reference simplex in barycentric coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub dim: usize,
    /// Barycentric coordinates; unused trailing entries are zero in 2D.
    pub points: Vec<[f64; 4]>,
    /// Weights summing to the reference simplex volume (1/2 or 1/6).
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Symmetric rule exact for polynomials of degree 2.
    pub fn degree2(dim: usize) -> Self {
        if dim == 2 {
            let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
            QuadratureRule {
                dim,
                points: vec![[a, b, b, 0.0], [b, a, b, 0.0], [b, b, a, 0.0]],
                weights: vec![1.0 / 6.0; 3],
            }
        } else {
            let (a, b) = (0.585_410_196_624_968_5, 0.138_196_601_125_010_5);
            QuadratureRule {
                dim,
                points: vec![[a, b, b, b], [b, a, b, b], [b, b, a, b], [b, b, b, a]],
                weights: vec![1.0 / 24.0; 4],
            }
        }
    }

    pub fn reference_volume(&self) -> f64 {
        if self.dim == 2 {
            0.5
        } else {
            1.0 / 6.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// ∫ λ^α over the reference simplex = α! d! / (|α| + d)! · |ref|.
    fn exact(alpha: &[u32], dim: usize) -> f64 {
        let num: f64 = alpha.iter().map(|&a| factorial(a)).product();
        let total: u32 = alpha.iter().sum();
        num * factorial(dim as u32) / factorial(total + dim as u32) / factorial(dim as u32)
    }

    #[test]
    fn exact_through_degree_two() {
        for dim in [2usize, 3] {
            let q = QuadratureRule::degree2(dim);
            assert!((q.weights.iter().sum::<f64>() - q.reference_volume()).abs() < 1e-16);
            let n = dim + 1;
            let mut alphas = vec![vec![0u32; n]];
            for i in 0..n {
                let mut a = vec![0; n];
                a[i] = 1;
                alphas.push(a.clone());
                for j in i..n {
                    let mut b = a.clone();
                    b[j] += 1;
                    alphas.push(b);
                }
            }
            for alpha in alphas {
                let got: f64 = q
                    .points
                    .iter()
                    .zip(&q.weights)
                    .map(|(p, w)| {
                        w * alpha
                            .iter()
                            .enumerate()
                            .map(|(k, &e)| p[k].powi(e as i32))
                            .product::<f64>()
                    })
                    .sum();
                assert!((got - exact(&alpha, dim)).abs() < 1e-15, "{alpha:?}");
            }
        }
    }

    #[test]
    fn not_exact_at_degree_three() {
        let q = QuadratureRule::degree2(3);
        let got: f64 = q
            .points
            .iter()
            .zip(&q.weights)
            .map(|(p, w)| w * p[0].powi(3))
            .sum();
        assert!((got - exact(&[3, 0, 0, 0], 3)).abs() > 1e-6);
    }
}
