//! One-sample Kolmogorov–Smirnov test against a stable law.

use alloc::vec::Vec;

use super::{StableParams, StableTable};
use crate::error::{Error, Result};
use crate::math::{abs, exp, sqrt, PI};

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-transformed series, fast for small lambda
        let y = PI * PI / (8.0 * lambda * lambda);
        let mut s = 0.0;
        for k in 1..=20 {
            let m = (2 * k - 1) as f64;
            s += exp(-m * m * y);
        }
        (1.0 - sqrt(2.0 * PI) / lambda * s).clamp(0.0, 1.0)
    } else {
        let mut s = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = exp(-2.0 * kf * kf * lambda * lambda);
            s += if k % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// Sup-distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max(abs(hi - f)).max(abs(f - lo));
    }
    d.min(1.0)
}

/// KS statistic and asymptotic p-value of `samples` against `params`.
pub fn ks_test(samples: &[f64], params: &StableParams) -> Result<(f64, f64)> {
    if samples.len() < 10 {
        return Err(Error::Domain("ks_test needs at least 10 samples"));
    }
    let table = StableTable::new(*params)?;
    ks_against(samples, &table)
}

pub(crate) fn ks_against(samples: &[f64], table: &StableTable) -> Result<(f64, f64)> {
    let mass = table.total_mass();
    if abs(mass - 1.0) > 1e-4 {
        return Err(Error::Numerical {
            what: "stable cdf normalisation",
            residual: mass - 1.0,
        });
    }
    let d = ks_statistic(samples, |x| table.cdf(x));
    let p = kolmogorov_survival(sqrt(samples.len() as f64) * d);
    Ok((d, p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_branches_join() {
        let a = kolmogorov_survival(1.18 - 1e-9);
        let b = kolmogorov_survival(1.18 + 1e-9);
        assert!((a - b).abs() < 1e-7, "{a} {b}");
        // classical critical values
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
    }

    #[test]
    fn statistic_is_bounded_by_one_over_n_for_exact_cdf() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64).collect();
        // cdf hitting the midpoint of each empirical step
        let d = ks_statistic(&xs, |x| (x + 0.5) / 50.0);
        assert!(d <= 1.0 / 50.0 + 1e-15);
    }
}
