//! Observed convergence rates with respect to `Dof^{-1/d}`.

use crate::{Error, Result};

/// `R_i = log(e_{i-1}/e_i) / log((N_i/N_{i-1})^{1/d})` for each consecutive
/// pair. A pair with a non-positive error has no rate.
pub fn compute_rates(errors: &[f64], dofs: &[usize], d: usize) -> Result<Vec<Option<f64>>> {
    if errors.len() != dofs.len() {
        return Err(Error::RateInput(format!(
            "{} errors but {} DOF counts",
            errors.len(),
            dofs.len()
        )));
    }
    if errors.len() < 2 {
        return Err(Error::RateInput("at least two levels are needed".into()));
    }
    if d == 0 {
        return Err(Error::RateInput("dimension must be positive".into()));
    }
    Ok(errors
        .windows(2)
        .zip(dofs.windows(2))
        .map(|(e, n)| {
            let growth = (n[1] as f64 / n[0] as f64).ln() / d as f64;
            if e[0] > 0.0 && e[1] > 0.0 && e.iter().all(|x| x.is_finite()) && growth != 0.0 {
                Some((e[0] / e[1]).ln() / growth)
            } else {
                None
            }
        })
        .collect())
}

/// Extrapolated limit of the last three values, assuming
/// `λ_i = λ + C h_i^p` with `h_i = N_i^{-1/d}`. Approximate; returns `None`
/// when the differences do not behave like a single power.
pub fn richardson_limit(values: &[f64], dofs: &[usize], d: usize) -> Option<f64> {
    if values.len() < 3 || values.len() != dofs.len() || d == 0 {
        return None;
    }
    let n = values.len();
    let (l, h) = (&values[n - 3..], &dofs[n - 3..]);
    let h: Vec<f64> = h
        .iter()
        .map(|&x| (x as f64).powf(-1.0 / d as f64))
        .collect();
    let (d1, d2) = (l[0] - l[1], l[1] - l[2]);
    if d2 == 0.0 || d1 / d2 <= 0.0 {
        return None;
    }
    let q = d1 / d2;
    let f = |p: f64| (h[0].powf(p) - h[1].powf(p)) / (h[1].powf(p) - h[2].powf(p)) - q;
    let (mut lo, mut hi) = (0.05, 12.0);
    if f(lo) * f(hi) > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    let c = d2 / (h[1].powf(p) - h[2].powf(p));
    Some(l[2] - c * h[2].powf(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourfold_error_drop_on_an_eightfold_refinement_is_rate_two() {
        let r = compute_rates(&[1e-2, 2.5e-3], &[1000, 8000], 3).unwrap();
        assert!((r[0].unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_errors_have_rate_zero() {
        let r = compute_rates(&[0.1, 0.1, 0.1], &[10, 80, 640], 3).unwrap();
        assert!(r.iter().all(|x| x.unwrap().abs() < 1e-15));
    }

    #[test]
    fn exact_hits_have_no_rate() {
        let r = compute_rates(&[1e-2, 0.0, 1e-3], &[10, 80, 640], 3).unwrap();
        assert_eq!(r, vec![None, None]);
    }

    #[test]
    fn bad_input_is_rejected() {
        assert!(compute_rates(&[1.0], &[1], 3).is_err());
        assert!(compute_rates(&[1.0, 2.0], &[1], 3).is_err());
    }

    #[test]
    fn published_cube_table_rates() {
        // lowest cube eigenvalue on three successive uniform refinements
        let exact = 2.0 * std::f64::consts::PI.powi(2);
        let dofs = [3032, 26416, 220256];
        let errors: Vec<f64> = [19.6932, 19.7284, 19.7365]
            .iter()
            .map(|l| (exact - l) / exact)
            .collect();
        let r = compute_rates(&errors, &dofs, 3).unwrap();
        assert!((r[0].unwrap() - 2.01).abs() < 0.01, "{r:?}");
        assert!((r[1].unwrap() - 1.96).abs() < 0.01, "{r:?}");
    }

    #[test]
    fn richardson_recovers_a_pure_power_law() {
        let dofs = [1000, 8000, 64000];
        let vals: Vec<f64> = dofs
            .iter()
            .map(|&n| 5.0 + 3.0 * (n as f64).powf(-2.0 / 3.0))
            .collect();
        let lim = richardson_limit(&vals, &dofs, 3).unwrap();
        assert!((lim - 5.0).abs() < 1e-10);
        assert_eq!(richardson_limit(&[1.0, 2.0, 1.0], &dofs, 3), None);
    }
}
