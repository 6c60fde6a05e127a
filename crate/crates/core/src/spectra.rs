//! Mean-field eigenvalue density of the layerwise Jacobian `W D`.
//!
//! With `chi = D_w^(1/alpha) phi'(h)`, `h ~ S_alpha((q*/2)^(1/alpha))`, and
//! `S, S'` i.i.d. totally skewed stable of index `alpha/2` and scale
//! `(c_alpha / (4 c_(alpha/2)))^(2/alpha)`, the radial density at `|z| = r`
//! (`s = r^2`) is
//!
//! ```text
//! rho = (y^2 - 2 s y dy/ds) / pi * < chi^2 S S' / (s + y^2 chi^2 S S')^2 >
//! 1   = < (chi^2 S / (s + y^2 chi^2 S S'))^(alpha/2) >
//! ```
//!
//! where `y = y*(s)` and averages run over Monte Carlo samples drawn once per
//! model. At `alpha = 2` the same equations hold with `S = S' = 1` (Gaussian
//! variance profile); for constant `chi` this is the uniform disk.
//!
//! The mass inside radius `r` has the closed form
//! `M(r) = < s / (s + y^2 chi^2 S S') >`, whose `s`-derivative is `pi rho`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, exp, ln, powf, sqrt, tail_constant, PI};
use crate::network::Activation;
use crate::rng::{indexed_seed, stream};
use crate::stable::{sample_standard_symmetric, StableParams, StableSampler};

/// Smallest radius of the default grid.
pub const DEFAULT_MIN_RADIUS: f64 = 1e-2;
pub const DEFAULT_RADII: usize = 200;
pub const DEFAULT_MC_SAMPLES: usize = 100_000;

#[derive(Debug, Clone)]
pub struct SpectralModel {
    alpha: f64,
    dw: f64,
    qstar: f64,
    /// `ln(chi^2 S)`
    a: Vec<f64>,
    /// `chi^2 S S'`
    b: Vec<f64>,
    edge: f64,
}

/// Scale of the skewed variables `S, S'`.
pub fn skew_scale(alpha: f64) -> f64 {
    powf(
        tail_constant(alpha) / (4.0 * tail_constant(alpha / 2.0)),
        2.0 / alpha,
    )
}

#[derive(Debug, Clone, Copy)]
struct Moments {
    f: f64,
    /// `dF/ds`
    fs: f64,
    /// `dF/dy`
    fy: f64,
}

impl SpectralModel {
    pub fn new(alpha: f64, dw: f64, qstar: f64, n_mc: usize, seed: u64) -> Result<Self> {
        Self::with_activation(alpha, dw, qstar, n_mc, seed, Activation::Tanh)
    }

    pub fn with_activation(
        alpha: f64,
        dw: f64,
        qstar: f64,
        n_mc: usize,
        seed: u64,
        activation: Activation,
    ) -> Result<Self> {
        if !(1.0..=2.0).contains(&alpha) {
            return Err(Error::Domain("spectral model needs alpha in [1, 2]"));
        }
        if !(dw > 0.0) || !(qstar >= 0.0) {
            return Err(Error::Domain("dw > 0 and q* >= 0 required"));
        }
        if n_mc == 0 {
            return Err(Error::Domain("n_mc must be positive"));
        }
        let gain = powf(dw, 1.0 / alpha);
        let chi: Vec<f64> = if qstar == 0.0 {
            alloc::vec![gain * activation.derivative(0.0); n_mc]
        } else {
            let sigma = powf(qstar / 2.0, 1.0 / alpha);
            let mut rng = stream(indexed_seed(seed, "chi", &[]));
            (0..n_mc)
                .map(|_| {
                    gain * activation.derivative(sigma * sample_standard_symmetric(alpha, &mut rng))
                })
                .collect()
        };
        let (s1, s2): (Vec<f64>, Vec<f64>) = if alpha == 2.0 {
            (alloc::vec![1.0; n_mc], alloc::vec![1.0; n_mc])
        } else {
            let sampler =
                StableSampler::new(StableParams::new(alpha / 2.0, 1.0, skew_scale(alpha), 0.0)?)?;
            let mut r1 = stream(indexed_seed(seed, "skew", &[0]));
            let mut r2 = stream(indexed_seed(seed, "skew", &[1]));
            (
                (0..n_mc).map(|_| sampler.draw(&mut r1)).collect(),
                (0..n_mc).map(|_| sampler.draw(&mut r2)).collect(),
            )
        };
        let mut a = Vec::with_capacity(n_mc);
        let mut b = Vec::with_capacity(n_mc);
        let mut edge_moment = 0.0;
        for k in 0..n_mc {
            let c2s = chi[k] * chi[k] * s1[k];
            a.push(ln(c2s));
            b.push(c2s * s2[k]);
            edge_moment += powf(c2s, alpha / 2.0);
        }
        let edge = powf(edge_moment / n_mc as f64, 1.0 / alpha);
        if !(edge > 0.0) || !edge.is_finite() {
            return Err(Error::Numerical {
                what: "spectral edge",
                residual: edge,
            });
        }
        Ok(Self {
            alpha,
            dw,
            qstar,
            a,
            b,
            edge,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dw(&self) -> f64 {
        self.dw
    }

    pub fn qstar(&self) -> f64 {
        self.qstar
    }

    pub fn n_mc(&self) -> usize {
        self.a.len()
    }

    /// Radius beyond which `y* = 0` and the density vanishes.
    pub fn edge(&self) -> f64 {
        self.edge
    }

    fn moments(&self, s: f64, y: f64) -> Moments {
        let h = self.alpha / 2.0;
        let y2 = y * y;
        let (mut f, mut fs, mut fy) = (0.0, 0.0, 0.0);
        if self.alpha == 2.0 {
            for (&a, &b) in self.a.iter().zip(&self.b) {
                let inv = 1.0 / (s + y2 * b);
                let g = exp(a) * inv;
                f += g;
                fs -= g * inv;
                fy -= g * inv * 2.0 * y * b;
            }
        } else {
            for (&a, &b) in self.a.iter().zip(&self.b) {
                let d = s + y2 * b;
                let g = exp(h * (a - ln(d)));
                f += g;
                fs -= h * g / d;
                fy -= h * g * 2.0 * y * b / d;
            }
        }
        let n = self.a.len() as f64;
        Moments {
            f: f / n,
            fs: fs / n,
            fy: fy / n,
        }
    }

    /// `y*` at radius `r`. `guess` (a previous solution) speeds up sweeps.
    pub fn solve_ystar(&self, r: f64, guess: Option<f64>) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain("radius must be positive"));
        }
        if r >= self.edge {
            return Ok(0.0);
        }
        let s = r * r;
        let g = |u: f64| {
            let m = self.moments(s, exp(u));
            (m.f - 1.0, m.fy * exp(u))
        };
        // bracket in u = ln y; F decreases in y
        let mut u = match guess {
            Some(y) if y > 0.0 => ln(y),
            _ => 0.0,
        };
        let (mut lo, mut hi);
        let (v0, _) = g(u);
        if v0 > 0.0 {
            lo = u;
            let mut step = 1.0;
            loop {
                hi = lo + step;
                if g(hi).0 <= 0.0 {
                    break;
                }
                lo = hi;
                step *= 2.0;
                if step > 1e3 {
                    return Err(Error::Numerical {
                        what: "y* bracketing",
                        residual: v0,
                    });
                }
            }
        } else {
            hi = u;
            let mut step = 1.0;
            loop {
                lo = hi - step;
                if g(lo).0 > 0.0 {
                    break;
                }
                hi = lo;
                step *= 2.0;
                if step > 1e3 {
                    // y* underflows: only reachable within rounding of the edge
                    return Ok(0.0);
                }
            }
        }
        // safeguarded Newton in u
        u = 0.5 * (lo + hi);
        for _ in 0..100 {
            let (v, dv) = g(u);
            if v > 0.0 {
                lo = u;
            } else {
                hi = u;
            }
            let mut next = if dv < 0.0 { u - v / dv } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if abs(next - u) < 1e-13 || hi - lo < 1e-13 {
                return Ok(exp(next));
            }
            u = next;
        }
        Ok(exp(u))
    }

    /// Density at radius `r` given `y*(r)`; `dy/ds` by implicit
    /// differentiation of the self-consistency equation on the same samples.
    pub fn density_at(&self, r: f64, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let s = r * r;
        let m = self.moments(s, y);
        let dyds = -m.fs / m.fy;
        let y2 = y * y;
        let mut avg = 0.0;
        for &b in &self.b {
            let d = s + y2 * b;
            avg += b / (d * d);
        }
        avg /= self.b.len() as f64;
        ((y2 - 2.0 * s * y * dyds) / PI * avg).max(0.0)
    }

    pub fn density(&self, r: f64) -> Result<f64> {
        let y = self.solve_ystar(r, None)?;
        Ok(self.density_at(r, y))
    }

    /// Spectral mass inside `|z| <= r` given `y*(r)`.
    pub fn mass_at(&self, r: f64, y: f64) -> f64 {
        if y <= 0.0 {
            return 1.0;
        }
        let s = r * r;
        let y2 = y * y;
        let m: f64 = self.b.iter().map(|&b| s / (s + y2 * b)).sum();
        m / self.b.len() as f64
    }

    pub fn mass_within(&self, r: f64) -> Result<f64> {
        if r <= 0.0 {
            return Ok(0.0);
        }
        let y = self.solve_ystar(r, None)?;
        Ok(self.mass_at(r, y))
    }

    /// Geometric grid of `n` radii from `r_min` up to just inside the edge.
    pub fn default_radii(&self, r_min: f64, n: usize) -> Vec<f64> {
        let top = self.edge * (1.0 - 1e-9);
        if n < 2 || r_min >= top {
            return alloc::vec![top];
        }
        let ratio = ln(top / r_min) / (n - 1) as f64;
        (0..n).map(|i| r_min * exp(ratio * i as f64)).collect()
    }

    /// `y*`, density and enclosed mass on an increasing radius grid.
    pub fn profile(&self, radii: &[f64]) -> Result<RadialDensity> {
        let mut ystar = Vec::with_capacity(radii.len());
        let mut density = Vec::with_capacity(radii.len());
        let mut mass = Vec::with_capacity(radii.len());
        let mut guess = None;
        for &r in radii {
            let y = self.solve_ystar(r, guess)?;
            guess = if y > 0.0 { Some(y) } else { None };
            ystar.push(y);
            density.push(self.density_at(r, y));
            mass.push(self.mass_at(r, y));
        }
        // the density is integrable but unbounded at the origin for alpha < 2,
        // so the disk inside the first radius contributes its exact mass
        let mut total = mass.first().copied().unwrap_or(0.0);
        for i in 1..radii.len() {
            let (r0, r1) = (radii[i - 1], radii[i]);
            total += PI * (r1 - r0) * (r0 * density[i - 1] + r1 * density[i]);
        }
        Ok(RadialDensity {
            radii: radii.to_vec(),
            density,
            ystar,
            mass,
            total_mass: total,
        })
    }

    /// Smallest radius enclosing `fraction` of the spectral mass.
    pub fn characteristic_radius(&self, fraction: f64) -> Result<f64> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::Domain("mass fraction must lie in (0, 1]"));
        }
        let (mut lo, mut hi) = (0.0, self.edge);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.mass_within(mid)? >= fraction {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-10 * self.edge {
                break;
            }
        }
        Ok(hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RadialDensity {
    pub radii: Vec<f64>,
    pub density: Vec<f64>,
    pub ystar: Vec<f64>,
    /// Exact enclosed mass at each radius.
    pub mass: Vec<f64>,
    /// Radial quadrature of the density over the grid.
    pub total_mass: f64,
}

/// Circular-law density of a matrix with i.i.d. entries of variance
/// `radius^2 / N`.
pub fn circular_law_density(r: f64, radius: f64) -> f64 {
    if r <= radius {
        1.0 / (PI * radius * radius)
    } else {
        0.0
    }
}

/// Radius of the support for a given second moment of the spectrum.
pub fn circular_law_radius(mean_chi_squared: f64) -> f64 {
    sqrt(mean_chi_squared)
}
