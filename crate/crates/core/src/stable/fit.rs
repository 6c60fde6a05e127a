//! Maximum-likelihood fitting of stable and Gaussian laws.

use alloc::vec::Vec;

use super::ks::ks_against;
use super::tables::quantile_start;
use super::{StableParams, StableTable};
use crate::error::{Error, Result};
use crate::math::{exp, ln, sqrt, PI};
use crate::optimize::nelder_mead;

const MIN_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub params: StableParams,
    pub log_likelihood: f64,
    pub n: usize,
    pub ks_stat: f64,
    pub ks_pvalue: f64,
}

fn check_samples(samples: &[f64], min: usize) -> Result<()> {
    if samples.len() < min {
        return Err(Error::Domain("too few samples to fit"));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("samples must be finite"));
    }
    let first = samples[0];
    if samples.iter().all(|&x| x == first) {
        return Err(Error::Degenerate("all samples are equal"));
    }
    Ok(())
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let i = pos as usize;
    let f = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - f) + sorted[i + 1] * f
    } else {
        sorted[i]
    }
}

/// Maps optimiser coordinates `(alpha, beta, ln sigma, continuous location)`
/// to parameters, clamping into the admissible box. The returned penalty
/// grows quadratically with the distance outside the box.
fn decode(x: &[f64]) -> (StableParams, f64) {
    let alpha = x[0].clamp(MIN_ALPHA, 2.0);
    let beta = x[1].clamp(-1.0, 1.0);
    let sigma = exp(x[2]);
    let excess = (x[0] - alpha) * (x[0] - alpha) + (x[1] - beta) * (x[1] - beta);
    let p = StableParams::from_continuous_location(alpha, beta, sigma, x[3]);
    (p, excess)
}

/// Stable maximum-likelihood fit started from quantile matching.
pub fn fit(samples: &[f64]) -> Result<FitResult> {
    check_samples(samples, 100)?;
    let mut sorted: Vec<f64> = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p| quantile(&sorted, p);
    let (q05, q25, q50, q75, q95) = (q(0.05), q(0.25), q(0.5), q(0.75), q(0.95));
    let start = if q75 > q25 && q95 > q05 {
        quantile_start(q05, q25, q50, q75, q95)
    } else {
        // heavy ties: fall back to a moment scale
        let s = crate::math::std_dev(samples).max(f64::MIN_POSITIVE);
        StableParams {
            alpha: 1.5,
            beta: 0.0,
            sigma: s,
            mu: q50,
        }
    };

    let n = samples.len() as f64;
    let objective = |x: &[f64]| -> f64 {
        let (p, excess) = decode(x);
        match StableTable::new(p) {
            Ok(table) => {
                let nll: f64 = -samples.iter().map(|&s| table.ln_pdf(s)).sum::<f64>();
                if nll.is_finite() {
                    nll + 1e3 * n * excess
                } else {
                    f64::INFINITY
                }
            }
            Err(_) => f64::INFINITY,
        }
    };

    let x0 = [
        start.alpha.clamp(MIN_ALPHA, 2.0),
        start.beta,
        ln(start.sigma),
        start.continuous_location(),
    ];
    let scale = [0.05, 0.1, 0.05, 0.05 * start.sigma];
    let first = nelder_mead(objective, &x0, &scale, 1e-4, 400);
    let restart_scale = [0.01, 0.03, 0.01, 0.01 * start.sigma];
    let second = nelder_mead(objective, &first.x, &restart_scale, 1e-5, 250);
    let best = if second.value <= first.value {
        second
    } else {
        first
    };
    if !best.value.is_finite() {
        return Err(Error::Numerical {
            what: "stable likelihood maximisation",
            residual: best.value,
        });
    }
    let (mut params, _) = decode(&best.x);
    if params.alpha > 2.0 - 1e-6 {
        // skewness has no effect at the Gaussian end
        params = StableParams::new(2.0, 0.0, params.sigma, params.mu)?;
    }
    let table = StableTable::new(params)?;
    let log_likelihood = samples.iter().map(|&s| table.ln_pdf(s)).sum();
    let (ks_stat, ks_pvalue) = ks_against(samples, &table)?;
    Ok(FitResult {
        params,
        log_likelihood,
        n: samples.len(),
        ks_stat,
        ks_pvalue,
    })
}

/// Gaussian maximum-likelihood fit, reported as the alpha = 2 stable law
/// (`sigma = sd / sqrt 2`).
pub fn fit_gaussian(samples: &[f64]) -> Result<FitResult> {
    check_samples(samples, 2)?;
    let m = crate::math::mean(samples);
    let sd = crate::math::std_dev(samples);
    let n = samples.len() as f64;
    let params = StableParams::new(2.0, 0.0, sd / sqrt(2.0), m)?;
    let log_likelihood = -0.5 * n * (ln(2.0 * PI * sd * sd) + 1.0);
    let (ks_stat, ks_pvalue) = if samples.len() >= 10 {
        ks_against(samples, &StableTable::new(params)?)?
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(FitResult {
        params,
        log_likelihood,
        n: samples.len(),
        ks_stat,
        ks_pvalue,
    })
}
