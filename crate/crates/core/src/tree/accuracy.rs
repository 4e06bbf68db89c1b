use log::warn;

use crate::error::{Error, Result};
use crate::vec3::Vec3;

/// Order statistics of the per-particle relative force error.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorStats {
    pub median: f64,
    pub p99: f64,
    pub max: f64,
    /// Particles skipped because the reference acceleration is zero.
    pub excluded: usize,
}

/// Nearest-rank percentile of sorted data, `q` in [0, 1].
pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = (q * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

pub fn median_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Compares `approx` against `oracle` with `|a - a_ref| / |a_ref|`.
pub fn force_error(approx: &[Vec3], oracle: &[Vec3]) -> Result<ErrorStats> {
    if approx.len() != oracle.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            approx.len(),
            oracle.len()
        )));
    }
    let mut errs = Vec::with_capacity(oracle.len());
    let mut excluded = 0;
    for (a, r) in approx.iter().zip(oracle) {
        let rn = r.norm();
        if rn == 0.0 {
            excluded += 1;
            continue;
        }
        errs.push((*a - *r).norm() / rn);
    }
    if excluded > 0 {
        warn!("force_error: {excluded} particles with zero reference acceleration excluded");
    }
    if errs.is_empty() {
        return Err(Error::invalid("no particle has a nonzero reference acceleration"));
    }
    errs.sort_by(f64::total_cmp);
    Ok(ErrorStats {
        median: median_sorted(&errs),
        p99: percentile_sorted(&errs, 0.99),
        max: *errs.last().unwrap(),
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Vec3> {
        (1..=50).map(|i| Vec3::new(i as f64, -0.5 * i as f64, 2.0)).collect()
    }

    #[test]
    fn identical_inputs_have_zero_error() {
        let a = sample();
        let s = force_error(&a, &a).unwrap();
        assert_eq!((s.median, s.p99, s.max, s.excluded), (0.0, 0.0, 0.0, 0));
    }

    #[test]
    fn uniform_scaling_error() {
        let a = sample();
        let b: Vec<Vec3> = a.iter().map(|&v| v * 1.01).collect();
        let s = force_error(&b, &a).unwrap();
        for v in [s.median, s.p99, s.max] {
            assert!((v - 0.01).abs() < 1e-12, "{v}");
        }
    }

    #[test]
    fn zero_reference_is_excluded() {
        let mut a = sample();
        a[3] = Vec3::ZERO;
        let s = force_error(&a, &a).unwrap();
        assert_eq!(s.excluded, 1);
        assert!(force_error(&[Vec3::ZERO], &[Vec3::ZERO]).is_err());
        assert!(force_error(&a[..2], &a).is_err());
    }

    #[test]
    fn percentiles() {
        let v: Vec<f64> = (1..=100).map(|x| x as f64).collect();
        assert_eq!(percentile_sorted(&v, 0.99), 99.0);
        assert_eq!(median_sorted(&v), 50.5);
    }
}
