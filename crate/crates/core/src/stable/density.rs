//! Stable densities by inversion of the characteristic function.
//!
//! For the standardised variate `Z` (`sigma = 1`, `mu = 0`)
//!
//! ```text
//! p(z) = (1/pi) int_0^inf exp(-u^alpha) cos(zeta u^alpha - z u) du,   zeta = beta tan(pi alpha / 2)
//! ```
//!
//! evaluated as `cos(zeta (u^alpha - u) - w u)` with `w = z - zeta` so that
//! the phase stays bounded near the mode. Beyond a crossover `|w| > w_c` the
//! integral is replaced by the asymptotic power series
//!
//! ```text
//! p(z) ~ (1/pi) sum_k (-1)^(k+1) / k! Gamma(k alpha + 1) (1 + zeta^2)^(k/2)
//!        sin(k (atan(zeta) + pi alpha / 2)) z^(-k alpha - 1)
//! ```
//!
//! whose first term is the `c_alpha (1 + beta) |z|^(-1-alpha)` tail. The
//! crossover is the first `|w|` on a geometric scan where series and
//! quadrature agree.
//!
//! When `|zeta|` is so large that `|z| >> |zeta|` is out of reach (`alpha`
//! within about `1e-4` of 1 with `beta != 0`), the tails use the leading term
//! alone, in `w` instead of `z`.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use super::StableParams;
use crate::error::{Error, Result};
use crate::math::{
    abs, asinh, atan, cosh, exp, exp_m1, ln, ln_gamma, powf, sin, sinh, sqrt, tan, PI,
};
use crate::quad::{self, gauss_legendre, Tolerance};

/// Integrand cutoff: `exp(-36)` is below double precision relative to the
/// peak density.
const ENVELOPE_LOG_CUTOFF: f64 = 36.0;
const SERIES_AGREEMENT: f64 = 1e-5;
/// Density differences below this are treated as agreement; it sits just
/// above the quadrature's absolute error floor.
const ABSOLUTE_AGREEMENT: f64 = 1e-14;
const SPEC_AGREEMENT: f64 = 1e-2;
const MAX_CROSSOVER: f64 = 2000.0;
const TABLE_STEP: f64 = 0.05;

#[derive(Debug, Clone)]
struct TailSeries {
    alpha: f64,
    /// `(ln|a_k|, sign a_k)` for k = 1, 2, ...
    terms: Vec<(f64, f64)>,
    convergent: bool,
}

impl TailSeries {
    /// Right-tail series of the standardised density (`z -> +inf`).
    fn new(alpha: f64, beta: f64) -> Self {
        if alpha == 1.0 {
            let a1 = (1.0 + beta) / PI;
            let terms = if a1 > 0.0 {
                vec![(ln(a1), 1.0)]
            } else {
                vec![]
            };
            return Self {
                alpha,
                terms,
                convergent: false,
            };
        }
        let zeta = beta * tan(PI * alpha / 2.0);
        let rho_ln = 0.5 * ln(1.0 + zeta * zeta);
        let psi = atan(zeta);
        let convergent = alpha < 1.0;
        let kmax = if convergent { 120 } else { 24 };
        let mut terms = Vec::with_capacity(kmax);
        for k in 1..=kmax {
            let kf = k as f64;
            let s = sin(kf * (psi + PI * alpha / 2.0));
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 } * crate::math::signum(s);
            let mag = ln_gamma(kf * alpha + 1.0) - ln_gamma(kf + 1.0) + kf * rho_ln - ln(PI);
            let mag = if abs(s) < 1e-300 {
                f64::NEG_INFINITY
            } else {
                mag + ln(abs(s))
            };
            terms.push((mag, sign));
        }
        Self {
            alpha,
            terms,
            convergent,
        }
    }

    fn sum(&self, z: f64, extra: f64, divide_by_k_alpha: bool) -> f64 {
        let lz = ln(z);
        let mut total = 0.0;
        let mut prev = f64::INFINITY;
        for (i, &(mag, sign)) in self.terms.iter().enumerate() {
            if mag == f64::NEG_INFINITY {
                continue;
            }
            let kf = (i + 1) as f64;
            let mut t = mag - (kf * self.alpha + extra) * lz;
            if divide_by_k_alpha {
                t -= ln(kf * self.alpha);
            }
            let term = exp(t);
            if !self.convergent && term > prev {
                break;
            }
            total += sign * term;
            if self.convergent && term < 1e-17 * abs(total) {
                break;
            }
            prev = term;
        }
        total
    }

    fn density(&self, z: f64) -> f64 {
        self.sum(z, 1.0, false)
    }

    /// Leading tail term alone. Its coefficient stays finite as `alpha -> 1`
    /// with `beta != 0`, where the full series in `z` needs `|z| >> |zeta|`.
    fn leading(alpha: f64, beta: f64) -> Self {
        let c = (1.0 + beta) * sin(PI * alpha / 2.0);
        let mag = if c > 0.0 {
            ln_gamma(alpha + 1.0) + ln(c) - ln(PI)
        } else {
            f64::NEG_INFINITY
        };
        Self {
            alpha,
            terms: vec![(mag, 1.0)],
            convergent: false,
        }
    }

    /// `P(Z > z)` from term-wise integration.
    fn upper_mass(&self, z: f64) -> f64 {
        self.sum(z, 0.0, true)
    }
}

#[derive(Debug, Clone)]
struct General {
    alpha: f64,
    beta: f64,
    zeta: f64,
    center: f64,
    /// Origin of the tail series: 0, or `center` when `|zeta|` is too large
    /// for the series in `z` to be reached.
    shift: f64,
    upper: f64,
    right: TailSeries,
    left: TailSeries,
    crossover: f64,
}

impl General {
    fn new(alpha: f64, beta: f64) -> Result<Self> {
        let zeta = if alpha == 1.0 {
            0.0
        } else {
            beta * tan(PI * alpha / 2.0)
        };
        let near_one = abs(zeta) > MAX_CROSSOVER;
        let (shift, right, left) = if near_one {
            (
                zeta,
                TailSeries::leading(alpha, beta),
                TailSeries::leading(alpha, -beta),
            )
        } else {
            (
                0.0,
                TailSeries::new(alpha, beta),
                TailSeries::new(alpha, -beta),
            )
        };
        let mut g = Self {
            alpha,
            beta,
            zeta,
            center: zeta,
            shift,
            upper: powf(ENVELOPE_LOG_CUTOFF, 1.0 / alpha),
            right,
            left,
            crossover: MAX_CROSSOVER,
        };
        g.crossover = g.find_crossover()?;
        Ok(g)
    }

    fn series(&self, z: f64) -> f64 {
        let z = z - self.shift;
        if z > 0.0 {
            self.right.density(z)
        } else {
            self.left.density(-z)
        }
    }

    /// `P(Z < z)` from the left tail series.
    fn left_mass(&self, z: f64) -> f64 {
        self.left.upper_mass(self.shift - z)
    }

    /// `P(Z > z)` from the right tail series.
    fn right_mass(&self, z: f64) -> f64 {
        self.right.upper_mass(z - self.shift)
    }

    fn quadrature(&self, z: f64) -> Result<f64> {
        let w = z - self.center;
        let alpha = self.alpha;
        let upper = self.upper;
        let spread = if alpha == 1.0 {
            abs(self.beta) * (2.0 / PI) * (ln(upper) + 1.0)
        } else {
            abs(self.zeta) * abs(alpha * powf(upper, alpha - 1.0) - 1.0)
        };
        let pieces = ((upper * (abs(w) + spread + 1.0) / PI) as usize + 1).min(20_000);
        let tol = Tolerance {
            abs: 1e-15,
            rel: 1e-11,
            max_panels: pieces + 20_000,
        };
        let v = if alpha == 1.0 {
            let b = 2.0 / PI * self.beta;
            quad::integrate(
                |u| {
                    let lu = if u > 0.0 { ln(u) } else { 0.0 };
                    exp(-u) * crate::math::cos(b * u * lu + z * u)
                },
                0.0,
                upper,
                pieces,
                tol,
                "stable density",
            )?
        } else {
            let zeta = self.zeta;
            quad::integrate(
                |u| {
                    if u <= 0.0 {
                        return 1.0;
                    }
                    // u^alpha - u without cancellation when alpha is near 1
                    let lu = ln(u);
                    let ua = exp(alpha * lu);
                    let d = u * exp_m1((alpha - 1.0) * lu);
                    exp(-ua) * crate::math::cos(zeta * d - w * u)
                },
                0.0,
                upper,
                pieces,
                tol,
                "stable density",
            )?
        };
        Ok((v / PI).max(0.0))
    }

    fn find_crossover(&self) -> Result<f64> {
        let offset = abs(self.center - self.shift);
        let mut w = 4.0 + offset;
        let limit = MAX_CROSSOVER + offset;
        let mut best = (f64::INFINITY, limit);
        while w <= limit {
            let mut worst: f64 = 0.0;
            for side in [1.0, -1.0] {
                let z = self.center + side * w;
                let q = self.quadrature(z)?;
                let s = self.series(z);
                let dev = if abs(s - q) <= ABSOLUTE_AGREEMENT {
                    0.0
                } else if q > 0.0 {
                    abs(s / q - 1.0)
                } else {
                    f64::INFINITY
                };
                worst = worst.max(dev);
                if self.beta == 0.0 {
                    break;
                }
            }
            if worst < best.0 {
                best = (worst, w);
            }
            if worst <= SERIES_AGREEMENT {
                return Ok(w);
            }
            w *= 1.25;
        }
        if best.0 <= SPEC_AGREEMENT {
            Ok(best.1)
        } else {
            Err(Error::Numerical {
                what: "stable density tail crossover",
                residual: best.0,
            })
        }
    }

    fn density(&self, z: f64) -> Result<f64> {
        if abs(z - self.center) > self.crossover {
            Ok(self.series(z))
        } else {
            self.quadrature(z)
        }
    }
}

#[derive(Debug, Clone)]
enum Standard {
    /// alpha = 2: N(0, 2).
    Gaussian,
    /// alpha = 1, beta = 0.
    Cauchy,
    General(General),
}

impl Standard {
    fn new(params: &StableParams) -> Result<Self> {
        params.validate()?;
        let beta = params.effective_beta();
        Ok(if params.alpha == 2.0 {
            Standard::Gaussian
        } else if params.alpha == 1.0 && beta == 0.0 {
            Standard::Cauchy
        } else {
            Standard::General(General::new(params.alpha, beta)?)
        })
    }
}

fn gaussian_pdf(z: f64) -> f64 {
    exp(-0.25 * z * z) / (2.0 * sqrt(PI))
}

fn cauchy_pdf(z: f64) -> f64 {
    1.0 / (PI * (1.0 + z * z))
}

/// Location offset of the `alpha = 1` parameterisation under scaling.
fn location_offset(params: &StableParams) -> f64 {
    if params.alpha == 1.0 && params.beta != 0.0 {
        2.0 / PI * params.beta * params.sigma * ln(params.sigma)
    } else {
        0.0
    }
}

/// Pointwise density evaluator. Each call runs a fresh quadrature; use
/// [`StableTable`] for many evaluations with the same parameters.
#[derive(Debug, Clone)]
pub struct StableDensity {
    params: StableParams,
    standard: Standard,
    offset: f64,
}

impl StableDensity {
    pub fn new(params: StableParams) -> Result<Self> {
        Ok(Self {
            params,
            standard: Standard::new(&params)?,
            offset: location_offset(&params),
        })
    }

    pub fn params(&self) -> StableParams {
        self.params
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        let z = (x - self.params.mu - self.offset) / self.params.sigma;
        let p = match &self.standard {
            Standard::Gaussian => gaussian_pdf(z),
            Standard::Cauchy => cauchy_pdf(z),
            Standard::General(g) => g.density(z)?,
        };
        Ok(p / self.params.sigma)
    }

    /// `|w|` beyond which the series replaces quadrature, in standardised
    /// units. Infinite for the closed-form cases.
    pub fn crossover(&self) -> f64 {
        match &self.standard {
            Standard::General(g) => g.crossover,
            _ => f64::INFINITY,
        }
    }
}

/// Density of `params` at `x`.
pub fn pdf(x: f64, params: &StableParams) -> Result<f64> {
    StableDensity::new(*params)?.pdf(x)
}

#[derive(Debug, Clone)]
struct Spline {
    t0: f64,
    h: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    /// Natural cubic spline through equally spaced samples.
    fn new(t0: f64, h: f64, y: Vec<f64>) -> Self {
        let n = y.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm for the interior second derivatives
            let k = n - 2;
            let mut c = vec![0.0; k];
            let mut d = vec![0.0; k];
            for i in 0..k {
                let rhs = 6.0 * (y[i] - 2.0 * y[i + 1] + y[i + 2]) / (h * h);
                if i == 0 {
                    c[i] = 1.0 / 4.0;
                    d[i] = rhs / 4.0;
                } else {
                    let denom = 4.0 - c[i - 1];
                    c[i] = 1.0 / denom;
                    d[i] = (rhs - d[i - 1]) / denom;
                }
            }
            for i in (0..k).rev() {
                m[i + 1] = d[i] - if i + 1 < k { c[i] * m[i + 2] } else { 0.0 };
            }
        }
        Self { t0, h, y, m }
    }

    #[inline]
    fn eval(&self, t: f64) -> f64 {
        let n = self.y.len();
        let s = (t - self.t0) / self.h;
        let i = (s as isize).clamp(0, n as isize - 2) as usize;
        let a = s - i as f64;
        let b = 1.0 - a;
        let h2 = self.h * self.h / 6.0;
        b * self.y[i]
            + a * self.y[i + 1]
            + ((b * b * b - b) * self.m[i] + (a * a * a - a) * self.m[i + 1]) * h2
    }
}

#[derive(Debug, Clone)]
struct GeneralTable {
    general: General,
    log_density: Spline,
    half_width: f64,
    /// CDF at the spline nodes.
    cdf_nodes: Vec<f64>,
    right_mass: f64,
    gl: ([f64; 4], [f64; 4]),
}

impl GeneralTable {
    fn new(general: General) -> Result<Self> {
        let half_width = asinh(general.crossover);
        let n = (2.0 * half_width / TABLE_STEP) as usize + 2;
        let h = 2.0 * half_width / (n - 1) as f64;
        let t0 = -half_width;
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let w = sinh(t0 + h * i as f64);
            let p = general.quadrature(general.center + w)?;
            y.push(ln(p.max(1e-300)));
        }
        let spline = Spline::new(t0, h, y);
        let (x, w) = gauss_legendre(4);
        let gl = ([x[0], x[1], x[2], x[3]], [w[0], w[1], w[2], w[3]]);
        let z_lo = general.center - general.crossover;
        let z_hi = general.center + general.crossover;
        let left_mass = general.left_mass(z_lo);
        let right_mass = general.right_mass(z_hi);
        let mut table = Self {
            general,
            log_density: spline,
            half_width,
            cdf_nodes: Vec::new(),
            right_mass,
            gl,
        };
        let mut cdf = Vec::with_capacity(n);
        let mut acc = left_mass;
        cdf.push(acc);
        for i in 0..n - 1 {
            let a = t0 + h * i as f64;
            acc += table.segment_mass(a, a + h);
            cdf.push(acc);
        }
        table.cdf_nodes = cdf;
        Ok(table)
    }

    fn segment_mass(&self, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let hw = 0.5 * (b - a);
        (0..4)
            .map(|k| {
                let t = c + hw * self.gl.0[k];
                self.gl.1[k] * exp(self.log_density.eval(t)) * cosh(t)
            })
            .sum::<f64>()
            * hw
    }

    fn ln_pdf(&self, z: f64) -> f64 {
        let w = z - self.general.center;
        if abs(w) > self.general.crossover {
            ln(self.general.series(z).max(1e-300))
        } else {
            self.log_density.eval(asinh(w))
        }
    }

    fn cdf(&self, z: f64) -> f64 {
        let w = z - self.general.center;
        if w < -self.general.crossover {
            return self.general.left_mass(z);
        }
        if w > self.general.crossover {
            return 1.0 - self.general.right_mass(z);
        }
        let t = asinh(w);
        let s = &self.log_density;
        let pos = (t - s.t0) / s.h;
        let i = (pos as usize).min(self.cdf_nodes.len() - 2);
        let a = s.t0 + s.h * i as f64;
        self.cdf_nodes[i] + self.segment_mass(a, t)
    }

    fn total_mass(&self) -> f64 {
        self.cdf_nodes[self.cdf_nodes.len() - 1] + self.right_mass
    }
}

#[derive(Debug, Clone)]
enum TableKind {
    Gaussian,
    Cauchy,
    General(Box<GeneralTable>),
}

/// Tabulated density: log-density spline over `asinh` of the standardised
/// coordinate inside the crossover, series outside. Cheap to evaluate, used
/// by fitting, goodness-of-fit and the mean-field quadrature.
#[derive(Debug, Clone)]
pub struct StableTable {
    params: StableParams,
    kind: TableKind,
    offset: f64,
    ln_sigma: f64,
}

impl StableTable {
    pub fn new(params: StableParams) -> Result<Self> {
        let kind = match Standard::new(&params)? {
            Standard::Gaussian => TableKind::Gaussian,
            Standard::Cauchy => TableKind::Cauchy,
            Standard::General(g) => TableKind::General(Box::new(GeneralTable::new(g)?)),
        };
        Ok(Self {
            params,
            kind,
            offset: location_offset(&params),
            ln_sigma: ln(params.sigma),
        })
    }

    pub fn params(&self) -> StableParams {
        self.params
    }

    #[inline]
    fn standardize(&self, x: f64) -> f64 {
        (x - self.params.mu - self.offset) / self.params.sigma
    }

    /// Density of the unit-scale law at standardised `z`.
    #[inline]
    pub fn ln_pdf_standard(&self, z: f64) -> f64 {
        match &self.kind {
            TableKind::Gaussian => -0.25 * z * z - ln(2.0 * sqrt(PI)),
            TableKind::Cauchy => -ln(PI) - crate::math::ln_1p(z * z),
            TableKind::General(t) => t.ln_pdf(z),
        }
    }

    #[inline]
    pub fn ln_pdf(&self, x: f64) -> f64 {
        self.ln_pdf_standard(self.standardize(x)) - self.ln_sigma
    }

    #[inline]
    pub fn pdf(&self, x: f64) -> f64 {
        exp(self.ln_pdf(x))
    }

    /// Density of the standardised variate (no scale Jacobian).
    #[inline]
    pub fn pdf_standard(&self, z: f64) -> f64 {
        exp(self.ln_pdf_standard(z))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let z = self.standardize(x);
        let v = match &self.kind {
            TableKind::Gaussian => 0.5 * libm::erfc(-z / 2.0),
            TableKind::Cauchy => 0.5 + atan(z) / PI,
            TableKind::General(t) => t.cdf(z),
        };
        v.clamp(0.0, 1.0)
    }

    /// Integral of the tabulated density over the real line; 1 up to the
    /// table's quadrature error.
    pub fn total_mass(&self) -> f64 {
        match &self.kind {
            TableKind::General(t) => t.total_mass(),
            _ => 1.0,
        }
    }

    /// Crossover in standardised units (infinite for closed forms).
    pub fn crossover(&self) -> f64 {
        match &self.kind {
            TableKind::General(t) => t.general.crossover,
            _ => f64::INFINITY,
        }
    }

    /// Half-width of the tabulated window in the `asinh` coordinate.
    pub fn table_half_width(&self) -> f64 {
        match &self.kind {
            TableKind::General(t) => t.half_width,
            _ => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{gamma, tail_constant};

    fn sym(alpha: f64) -> StableParams {
        StableParams::symmetric(alpha, 1.0).unwrap()
    }

    #[test]
    fn closed_form_points() {
        let g = pdf(
            0.0,
            &StableParams::symmetric(2.0, 1.0 / 2f64.sqrt()).unwrap(),
        )
        .unwrap();
        assert!((g - 0.398_942_280_4).abs() < 1e-9);
        let c = pdf(0.0, &sym(1.0)).unwrap();
        assert!((c - 1.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn mode_density_of_symmetric_laws() {
        for alpha in [0.7, 1.2, 1.5, 1.9] {
            let expected = gamma(1.0 + 1.0 / alpha) / PI;
            let got = pdf(0.0, &sym(alpha)).unwrap();
            assert!(
                (got - expected).abs() < 1e-9,
                "alpha {alpha}: {got} vs {expected}"
            );
        }
    }

    #[test]
    fn general_path_agrees_with_cauchy_closed_form() {
        // alpha = 1 with tiny skew goes through the quadrature path
        let g = StableDensity::new(StableParams::new(1.0, 1e-12, 1.0, 0.0).unwrap()).unwrap();
        for x in [-7.0, -1.0, 0.0, 0.3, 2.0, 15.0] {
            let got = g.pdf(x).unwrap();
            let exact = 1.0 / (PI * (1.0 + x * x));
            assert!(
                (got - exact).abs() < 1e-9 * (1.0 + exact),
                "{x}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn symmetric_and_reflection() {
        let d = StableDensity::new(StableParams::new(1.3, 0.0, 1.7, 0.5).unwrap()).unwrap();
        for x in [0.1, 1.0, 3.3, 40.0] {
            let a = d.pdf(0.5 + x).unwrap();
            let b = d.pdf(0.5 - x).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.max(1e-300), "{a} {b}");
        }
        let p = StableDensity::new(StableParams::new(1.3, 0.6, 1.0, 0.0).unwrap()).unwrap();
        let q = StableDensity::new(StableParams::new(1.3, -0.6, 1.0, 0.0).unwrap()).unwrap();
        for x in [0.2, 1.5, 6.0, 80.0] {
            let a = p.pdf(x).unwrap();
            let b = q.pdf(-x).unwrap();
            assert!((a - b).abs() <= 1e-9 * a, "{x}: {a} {b}");
        }
    }

    #[test]
    fn far_tail_matches_power_law() {
        for alpha in [1.2, 1.5, 1.8] {
            let x = 50.0;
            let v = pdf(x, &sym(alpha)).unwrap() * x.powf(1.0 + alpha);
            let c = tail_constant(alpha);
            assert!((v / c - 1.0).abs() < 0.05, "alpha {alpha}: {v} vs {c}");
        }
    }

    #[test]
    fn table_matches_pointwise_density() {
        for params in [
            sym(1.2),
            sym(1.5),
            StableParams::new(1.7, 0.4, 2.0, -1.0).unwrap(),
            StableParams::new(0.8, -0.3, 0.5, 0.0).unwrap(),
        ] {
            let d = StableDensity::new(params).unwrap();
            let t = StableTable::new(params).unwrap();
            for x in [-30.0, -4.0, -1.1, -0.2, 0.0, 0.37, 2.5, 9.0, 120.0] {
                let a = d.pdf(x).unwrap();
                let b = t.pdf(x);
                assert!((a - b).abs() <= 2e-6 * a, "{params:?} at {x}: {a} vs {b}");
            }
            assert!(
                (t.total_mass() - 1.0).abs() < 1e-5,
                "mass {}",
                t.total_mass()
            );
        }
    }

    #[test]
    fn table_cdf_is_monotone_and_normalized() {
        let t = StableTable::new(StableParams::new(1.4, 0.3, 1.0, 0.0).unwrap()).unwrap();
        let mut prev = 0.0;
        for i in -400..=400 {
            let x = i as f64 * 0.25;
            let c = t.cdf(x);
            assert!(c >= prev - 1e-12, "non-monotone at {x}");
            prev = c;
        }
        assert!(t.cdf(-1e6) < 1e-6 && t.cdf(1e6) > 1.0 - 1e-6);
        let g = StableTable::new(sym(2.0)).unwrap();
        assert!((g.cdf(0.0) - 0.5).abs() < 1e-15);
    }
}
