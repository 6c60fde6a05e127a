//! Alpha-stable laws in the `S_alpha(beta, sigma, mu)` parameterisation:
//!
//! ```text
//! E exp(iuX) = exp(-|sigma u|^alpha (1 - i beta sgn(u) Phi(u)) + i u mu)
//! Phi(u) = tan(pi alpha / 2)      alpha != 1
//!        = -(2 / pi) ln|u|        alpha == 1
//! ```

mod density;
mod fit;
mod ks;
mod sample;
mod tables;

pub use density::{pdf, StableDensity, StableTable};
pub use fit::{fit, fit_gaussian, FitResult};
pub use ks::{kolmogorov_survival, ks_statistic, ks_test};
pub use sample::{sample, sample_into, sample_standard_symmetric, StableSampler};

use crate::error::{Error, Result};
use crate::math::{abs, ln, powf, sqrt, tail_constant, tan, PI};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StableParams {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub mu: f64,
}

impl StableParams {
    pub fn new(alpha: f64, beta: f64, sigma: f64, mu: f64) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            sigma,
            mu,
        };
        p.validate()?;
        Ok(p)
    }

    /// Symmetric law `S_alpha(sigma)` (beta = mu = 0).
    pub fn symmetric(alpha: f64, sigma: f64) -> Result<Self> {
        Self::new(alpha, 0.0, sigma, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(Error::Domain("alpha must lie in (0, 2]"));
        }
        if !(-1.0..=1.0).contains(&self.beta) {
            return Err(Error::Domain("beta must lie in [-1, 1]"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Domain("sigma must be positive"));
        }
        if !self.mu.is_finite() {
            return Err(Error::Domain("mu must be finite"));
        }
        Ok(())
    }

    /// Location in the parameterisation that is continuous in alpha:
    /// `X = sigma W + m` with `W` the standard law recentred by its skew
    /// shift (`beta tan(pi alpha / 2)`, or the log-scale term at alpha = 1).
    pub fn continuous_location(&self) -> f64 {
        let beta = self.effective_beta();
        if self.alpha == 1.0 {
            self.mu + 2.0 / PI * beta * self.sigma * ln(self.sigma)
        } else {
            self.mu + beta * self.sigma * tan(PI * self.alpha / 2.0)
        }
    }

    /// Inverse of [`StableParams::continuous_location`].
    pub fn from_continuous_location(alpha: f64, beta: f64, sigma: f64, m: f64) -> Self {
        let beta_eff = if alpha == 2.0 { 0.0 } else { beta };
        let mu = if alpha == 1.0 {
            m - 2.0 / PI * beta_eff * sigma * ln(sigma)
        } else {
            m - beta_eff * sigma * tan(PI * alpha / 2.0)
        };
        Self {
            alpha,
            beta,
            sigma,
            mu,
        }
    }

    /// Skewness with the Gaussian case folded to zero.
    pub(crate) fn effective_beta(&self) -> f64 {
        if self.alpha == 2.0 {
            0.0
        } else {
            self.beta
        }
    }
}

/// Leading power-law tail of a symmetric stable density with scale
/// `(dw / 2n)^(1/alpha)`: `c_alpha dw |x|^(-1-alpha) / (2n)`.
pub fn tail_density(x: f64, alpha: f64, dw: f64, n: usize) -> Result<f64> {
    if x == 0.0 {
        return Err(Error::Domain("tail density is undefined at x = 0"));
    }
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Domain("tail density needs alpha in (0, 2)"));
    }
    if !(dw > 0.0) || n == 0 {
        return Err(Error::Domain("dw > 0 and n >= 1 required"));
    }
    Ok(tail_constant(alpha) * dw * powf(abs(x), -1.0 - alpha) / (2.0 * n as f64))
}

/// Width-normalised scale `2 sqrt(nw nh) sigma^alpha` of an `nw x nh`
/// weight matrix.
pub fn normalized_scale(sigma: f64, alpha: f64, nw: usize, nh: usize) -> Result<f64> {
    if !(sigma > 0.0) || nw == 0 || nh == 0 {
        return Err(Error::Domain(
            "sigma > 0 and positive matrix shape required",
        ));
    }
    Ok(2.0 * sqrt(nw as f64 * nh as f64) * powf(sigma, alpha))
}

/// Inverse of [`normalized_scale`] for a square `n x n` matrix.
pub fn scale_from_normalized(dw: f64, alpha: f64, n: usize) -> f64 {
    powf(dw / (2.0 * n as f64), 1.0 / alpha)
}
