use alloc::vec::Vec;

use rand::Rng;

use super::StableParams;
use crate::error::Result;
use crate::math::{atan, cos, ln, powf, sin, tan, FRAC_PI_2, PI};
use crate::rng::{open01, stream};

/// Chambers–Mallows–Stuck generator with the constants for one parameter set
/// precomputed.
#[derive(Debug, Clone, Copy)]
pub struct StableSampler {
    params: StableParams,
    b: f64,
    s: f64,
    shift: f64,
}

impl StableSampler {
    pub fn new(params: StableParams) -> Result<Self> {
        params.validate()?;
        let alpha = params.alpha;
        let beta = params.effective_beta();
        let (b, s, shift) = if alpha == 1.0 {
            (0.0, 1.0, 2.0 / PI * beta * params.sigma * ln(params.sigma))
        } else {
            let zeta = beta * tan(PI * alpha / 2.0);
            (
                atan(zeta) / alpha,
                powf(1.0 + zeta * zeta, 1.0 / (2.0 * alpha)),
                0.0,
            )
        };
        Ok(Self {
            params,
            b,
            s,
            shift,
        })
    }

    pub fn params(&self) -> StableParams {
        self.params
    }

    /// One draw of the unit-scale, zero-location variate.
    #[inline]
    pub fn standard<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let v = PI * (open01(rng) - 0.5);
        let w = -ln(open01(rng));
        let alpha = self.params.alpha;
        if alpha == 1.0 {
            let beta = self.params.beta;
            let h = FRAC_PI_2 + beta * v;
            2.0 / PI * (h * tan(v) - beta * ln(FRAC_PI_2 * w * cos(v) / h))
        } else if alpha == 2.0 {
            // CMS at alpha = 2 reduces to 2 sin(v) sqrt(w)
            2.0 * sin(v) * crate::math::sqrt(w)
        } else {
            let t = alpha * (v + self.b);
            self.s * sin(t) / powf(cos(v), 1.0 / alpha)
                * powf(cos(v - t) / w, (1.0 - alpha) / alpha)
        }
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.params.sigma * self.standard(rng) + self.params.mu + self.shift
    }
}

/// `n` i.i.d. draws from `params`, deterministic in `seed`.
pub fn sample(params: StableParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    let sampler = StableSampler::new(params)?;
    let mut rng = stream(seed);
    Ok((0..n).map(|_| sampler.draw(&mut rng)).collect())
}

/// Fills `out` from an existing stream.
pub fn sample_into<R: Rng + ?Sized>(sampler: &StableSampler, rng: &mut R, out: &mut [f64]) {
    for x in out.iter_mut() {
        *x = sampler.draw(rng);
    }
}

/// Symmetric unit-scale draw, `S_alpha(1)`.
#[inline]
pub fn sample_standard_symmetric<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = PI * (open01(rng) - 0.5);
    let w = -ln(open01(rng));
    if alpha == 1.0 {
        tan(v)
    } else if alpha == 2.0 {
        2.0 * sin(v) * crate::math::sqrt(w)
    } else {
        let t = alpha * v;
        sin(t) / powf(cos(v), 1.0 / alpha) * powf(cos(v - t) / w, (1.0 - alpha) / alpha)
    }
}
