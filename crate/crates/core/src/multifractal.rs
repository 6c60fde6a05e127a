//! Eigenvector localization: inverse participation ratios
//! `IPR_q(v) = sum_i |v_i|^(2q)` and the fractal dimensions `D_q` defined by
//! `IPR_q ~ N^((1 - q) D_q)`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::linalg::Eigensolver;
use crate::math::{exp, linear_fit, ln, mean, std_dev};
use crate::meanfield::MeanFieldMap;
use crate::network::{fixed_point_input, JacobianForm, Network, NetworkSpec};
use crate::rng::indexed_seed;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DqEstimate {
    pub q: f64,
    pub dq_mean: f64,
    pub dq_std: f64,
    pub fit_r2: f64,
    pub sizes: Vec<usize>,
}

fn check_order(q: f64) -> Result<()> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::Domain("moment order must be positive"));
    }
    Ok(())
}

/// `ln IPR_q` of `v` after normalizing it to unit norm.
pub fn log_ipr(v: &[Complex64], q: f64) -> Result<f64> {
    check_order(q)?;
    let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if !(norm2 > 0.0) || !norm2.is_finite() {
        return Err(Error::Domain("eigenvector must be nonzero and finite"));
    }
    if q == 1.0 {
        return Ok(0.0);
    }
    // factor out the largest weight so high orders do not underflow
    let pmax = v.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max) / norm2;
    let s: f64 = v
        .iter()
        .map(|z| exp(q * ln(z.norm_sqr() / norm2 / pmax)))
        .sum();
    Ok(q * ln(pmax) + ln(s))
}

pub fn ipr(v: &[Complex64], q: f64) -> Result<f64> {
    if q == 1.0 {
        log_ipr(v, q)?;
        return Ok(1.0);
    }
    log_ipr(v, q).map(exp)
}

/// `ln IPR_q` of the eigenvectors of one matrix of size `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct IprSamples {
    pub n: usize,
    pub log_ipr: Vec<f64>,
}

/// Minimum number of distinct sizes in a scaling fit.
pub const MIN_SIZES: usize = 4;
/// Minimum ratio of the largest to the smallest size.
pub const MIN_SIZE_SPAN: f64 = 10.0;
/// Fits below this r2 are rejected.
pub const MIN_R2: f64 = 0.9;

/// `D_q` from the slope of the size-averaged `ln IPR_q` against `ln N`.
/// The spread is taken over per-eigenvector dimensions
/// `(ln IPR_q - intercept) / ((1 - q) ln N)`.
pub fn fractal_dimension(samples: &[IprSamples], q: f64) -> Result<DqEstimate> {
    check_order(q)?;
    if (q - 1.0).abs() < 1e-9 {
        return Err(Error::Domain("D_q is undefined at q = 1"));
    }
    let mut sizes: Vec<usize> = samples
        .iter()
        .filter(|s| !s.log_ipr.is_empty())
        .map(|s| s.n)
        .collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < MIN_SIZES {
        return Err(Error::Protocol("need at least four distinct system sizes"));
    }
    if (sizes[sizes.len() - 1] as f64) < MIN_SIZE_SPAN * sizes[0] as f64 {
        return Err(Error::Protocol("system sizes must span a decade"));
    }
    let pooled: Vec<Vec<f64>> = sizes
        .iter()
        .map(|&n| {
            samples
                .iter()
                .filter(|s| s.n == n)
                .flat_map(|s| s.log_ipr.iter().copied())
                .collect()
        })
        .collect();
    let xs: Vec<f64> = sizes.iter().map(|&n| ln(n as f64)).collect();
    let ys: Vec<f64> = pooled.iter().map(|p| mean(p)).collect();
    let (intercept, slope, r2) = linear_fit(&xs, &ys);
    if r2 < MIN_R2 || !r2.is_finite() {
        return Err(Error::PoorScaling { r2 });
    }
    let per_vector: Vec<f64> = pooled
        .iter()
        .zip(&xs)
        .flat_map(|(p, &x)| p.iter().map(move |&y| (y - intercept) / ((1.0 - q) * x)))
        .collect();
    Ok(DqEstimate {
        q,
        dq_mean: slope / (1.0 - q),
        dq_std: std_dev(&per_vector),
        fit_r2: r2,
        sizes,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DqConfig {
    /// Width is replaced by each entry of `sizes`; depth by what `layer`
    /// needs.
    pub spec: NetworkSpec,
    pub layer: usize,
    pub form: JacobianForm,
    pub q_grid: Vec<f64>,
    pub sizes: Vec<usize>,
    pub realizations: usize,
    pub seed: u64,
    /// Only eigenvectors with `lo <= |lambda| <= hi` are pooled.
    pub annulus: Option<(f64, f64)>,
}

impl DqConfig {
    pub fn new(spec: NetworkSpec) -> Self {
        Self {
            spec,
            layer: 1,
            form: JacobianForm::WD,
            q_grid: vec![0.5, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
            sizes: vec![256, 512, 1024, 2048, 4096],
            realizations: 20,
            seed: 0,
            annulus: None,
        }
    }

    fn validate(&self) -> Result<()> {
        for &q in &self.q_grid {
            check_order(q)?;
            if (q - 1.0).abs() < 1e-9 {
                return Err(Error::Domain("q = 1 must be excluded from the grid"));
            }
        }
        if self.realizations == 0 || self.sizes.is_empty() {
            return Err(Error::Domain("need at least one size and one realization"));
        }
        if self.layer == 0 {
            return Err(Error::Domain("layers are numbered from 1"));
        }
        self.spec.validate()
    }
}

/// Log-IPRs of one sampled Jacobian, indexed by position in the q grid.
pub fn jacobian_log_iprs<S: Eigensolver>(
    config: &DqConfig,
    n: usize,
    qstar: f64,
    seed: u64,
    solver: &S,
) -> Result<Vec<Vec<f64>>> {
    let depth = match config.form {
        JacobianForm::DW => config.layer,
        JacobianForm::WD => config.layer + 1,
    };
    let spec = NetworkSpec {
        width: n,
        depth,
        ..config.spec
    };
    let net = Network::init(spec, seed)?;
    let x0 = fixed_point_input(&spec, qstar, indexed_seed(seed, "input", &[]));
    let state = net.forward(&x0)?;
    let j = net.layer_jacobian(&state, config.layer, config.form)?;
    let mut out = vec![Vec::new(); config.q_grid.len()];
    let mut failure = None;
    solver.eigenpairs(&j, &mut |lambda, v| {
        if let Some((lo, hi)) = config.annulus {
            let r = lambda.norm();
            if r < lo || r > hi {
                return;
            }
        }
        for (k, &q) in config.q_grid.iter().enumerate() {
            match log_ipr(v, q) {
                Ok(y) => out[k].push(y),
                Err(e) => failure = Some(e),
            }
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Accepted estimates in q-grid order, and the orders whose scaling fit
/// was rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct DqCurve {
    pub estimates: Vec<DqEstimate>,
    pub rejected: Vec<(f64, Error)>,
}

/// The `D_q` curve of layerwise Jacobians of random networks at the
/// mean-field fixed point. Orders whose fit fails the r2 gate are listed as
/// rejected; any other failure aborts.
pub fn dq_spectrum<S: Eigensolver, E: Executor>(
    config: &DqConfig,
    solver: &S,
    executor: &E,
) -> Result<DqCurve> {
    config.validate()?;
    let spec = &config.spec;
    let map = MeanFieldMap::new(spec.alpha, spec.activation)?;
    let qstar = map
        .fixed_point(spec.dw, spec.db, 1.0, 1e-10, 100_000)?
        .qstar;
    let nr = config.realizations;
    let jobs = executor.map(config.sizes.len() * nr, |k| {
        let (s, r) = (k / nr, k % nr);
        let seed = indexed_seed(config.seed, "dq", &[s as u64, r as u64]);
        jacobian_log_iprs(config, config.sizes[s], qstar, seed, solver)
    });
    let mut per_job = Vec::with_capacity(jobs.len());
    for job in jobs {
        per_job.push(job?);
    }
    let mut curve = DqCurve {
        estimates: Vec::new(),
        rejected: Vec::new(),
    };
    for (iq, &q) in config.q_grid.iter().enumerate() {
        let samples: Vec<IprSamples> = per_job
            .iter()
            .enumerate()
            .map(|(k, logs)| IprSamples {
                n: config.sizes[k / nr],
                log_ipr: logs[iq].clone(),
            })
            .collect();
        match fractal_dimension(&samples, q) {
            Ok(d) => curve.estimates.push(d),
            Err(e @ Error::PoorScaling { .. }) => curve.rejected.push((q, e)),
            Err(e) => return Err(e),
        }
    }
    Ok(curve)
}
