//! The layerwise fluctuation map
//!
//! ```text
//! q^l = D_w E|phi(h)|^alpha + D_b,   h ~ S_alpha((q^(l-1) / 2)^(1/alpha))
//! ```
//!
//! its fixed point `q*`, and the ordered transition `D_w_bar(alpha)`: the
//! smallest `D_w` at which `q*` reaches a small threshold.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{abs, exp, ln, powf, tail_constant};
use crate::network::Activation;
use crate::optimize::bisect;
use crate::quad::composite_nodes;
use crate::stable::{StableParams, StableTable};

/// Default level of `q*` that marks the ordered transition.
pub const ORDERED_THRESHOLD: f64 = 0.01;

/// Two-sided tail mass left out of the quadrature grid.
const TRUNCATED_MASS: f64 = 1e-9;
const DIVERGENCE_GUARD: f64 = 1e100;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeanFieldTrajectory {
    /// `q[0]` is the input level `q^0`.
    pub q: Vec<f64>,
    pub converged: bool,
    pub qstar: f64,
}

impl MeanFieldTrajectory {
    pub fn iterations(&self) -> usize {
        self.q.len() - 1
    }
}

/// Quadrature rule for `E|phi(sigma Z)|^alpha` with `Z ~ S_alpha(1)`,
/// built once per `alpha` and reused for every `q`.
#[derive(Debug, Clone)]
pub struct MeanFieldMap {
    alpha: f64,
    activation: Activation,
    /// `(z, weight)` on `z >= 0`; weights carry the density and the factor 2
    /// from symmetry.
    nodes: Vec<(f64, f64)>,
    cutoff: f64,
    tail_mass: f64,
}

impl MeanFieldMap {
    pub fn new(alpha: f64, activation: Activation) -> Result<Self> {
        let table = StableTable::new(StableParams::symmetric(alpha, 1.0)?)?;
        let cutoff = if alpha == 2.0 {
            40.0
        } else {
            // P(|Z| > z) ~ 2 c_alpha z^-alpha / alpha
            powf(
                2.0 * tail_constant(alpha) / (alpha * TRUNCATED_MASS),
                1.0 / alpha,
            )
            .max(40.0)
        };
        let mut breaks: Vec<f64> = (0..=32).map(|i| 0.25 * i as f64).collect();
        let mut z = 8.0;
        while z < cutoff {
            z = (z * 1.25).min(cutoff);
            breaks.push(z);
        }
        let nodes = composite_nodes(&breaks, 10)
            .into_iter()
            .map(|(z, w)| (z, 2.0 * w * table.pdf_standard(z)))
            .collect();
        let tail_mass = (2.0 * (1.0 - table.cdf(cutoff))).max(0.0);
        Ok(Self {
            alpha,
            activation,
            nodes,
            cutoff,
            tail_mass,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `E|phi(h)|^alpha` for `h ~ S_alpha(sigma)`.
    pub fn moment(&self, sigma: f64) -> f64 {
        if sigma == 0.0 {
            return powf(abs(self.activation.apply(0.0)), self.alpha);
        }
        let a = self.alpha;
        let act = self.activation;
        let body: f64 = self
            .nodes
            .iter()
            .map(|&(z, w)| w * powf(abs(act.apply(sigma * z)), a))
            .sum();
        body + self.tail_mass * powf(abs(act.apply(sigma * self.cutoff)), a)
    }

    pub fn q_map(&self, q_prev: f64, dw: f64, db: f64) -> Result<f64> {
        if !(q_prev >= 0.0) || !q_prev.is_finite() {
            return Err(Error::Domain("q must be finite and non-negative"));
        }
        let sigma = powf(q_prev / 2.0, 1.0 / self.alpha);
        Ok(dw * self.moment(sigma) + db)
    }

    pub fn fixed_point(
        &self,
        dw: f64,
        db: f64,
        q0: f64,
        tol: f64,
        max_iter: usize,
    ) -> Result<MeanFieldTrajectory> {
        if !(tol > 0.0) {
            return Err(Error::Domain("tolerance must be positive"));
        }
        if !(q0 >= 0.0) {
            return Err(Error::Domain("q0 must be non-negative"));
        }
        let mut q = Vec::with_capacity(64);
        q.push(q0);
        q.push(dw * q0 + db);
        let mut damped = false;
        let mut converged = false;
        while q.len() <= max_iter {
            let n = q.len();
            let prev = q[n - 1];
            let mut next = self.q_map(prev, dw, db)?;
            if n >= 2 {
                let last_step = prev - q[n - 2];
                if !damped && (next - prev) * last_step < 0.0 {
                    damped = true;
                }
            }
            if damped {
                next = 0.5 * prev + 0.5 * next;
            }
            if !next.is_finite() || next > DIVERGENCE_GUARD {
                return Err(Error::Divergence {
                    step: n,
                    value: next,
                });
            }
            q.push(next);
            if abs(next - prev) < tol * next.max(1.0) {
                converged = true;
                break;
            }
        }
        let qstar = q[q.len() - 1];
        Ok(MeanFieldTrajectory {
            q,
            converged,
            qstar,
        })
    }

    /// Whether `q*(D_w) >= threshold`. The iterates are monotone, so the
    /// answer is often settled before convergence.
    fn reaches(&self, dw: f64, db: f64, q0: f64, threshold: f64) -> Result<bool> {
        let mut prev = dw * q0 + db;
        let mut step = 0.0;
        for _ in 0..1_000_000 {
            let next = self.q_map(prev, dw, db)?;
            let d = next - prev;
            if d <= 0.0 && next < threshold {
                return Ok(false);
            }
            if d >= 0.0 && next >= threshold {
                return Ok(true);
            }
            if abs(d) < 1e-13 * next.max(1e-300) || (step != 0.0 && d * step < 0.0) {
                return Ok(next >= threshold);
            }
            step = d;
            prev = next;
        }
        Ok(prev >= threshold)
    }

    /// `D_w_bar`: smallest `D_w` in `[1e-3, 1e3]` whose fixed point reaches
    /// `threshold`, by bisection in `ln D_w`.
    pub fn ordered_transition(&self, db: f64, threshold: f64) -> Result<Transition> {
        if !(threshold > 0.0) {
            return Err(Error::Domain("threshold must be positive"));
        }
        let q0 = 1.0;
        let (lo, hi) = (1e-3_f64, 1e3_f64);
        if self.reaches(lo, db, q0, threshold)? || !self.reaches(hi, db, q0, threshold)? {
            return Err(Error::Bracketing { lo, hi });
        }
        let mut failure = None;
        let root = bisect(
            |t| match self.reaches(exp(t), db, q0, threshold) {
                Ok(true) => 1.0,
                Ok(false) => -1.0,
                Err(e) => {
                    failure = Some(e);
                    1.0
                }
            },
            ln(lo),
            ln(hi),
            1e-9,
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        let dw_bar = exp(root);
        let traj = self.fixed_point(dw_bar, db, q0, 1e-12, 1_000_000)?;
        Ok(Transition {
            alpha: self.alpha,
            dw_bar,
            qstar: traj.qstar,
            iterations: traj.iterations(),
        })
    }
}

/// One point of the ordered transition line.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Transition {
    pub alpha: f64,
    pub dw_bar: f64,
    pub qstar: f64,
    pub iterations: usize,
}

pub fn q_map(q_prev: f64, alpha: f64, dw: f64, db: f64, activation: Activation) -> Result<f64> {
    MeanFieldMap::new(alpha, activation)?.q_map(q_prev, dw, db)
}

pub fn fixed_point(
    alpha: f64,
    dw: f64,
    db: f64,
    q0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<MeanFieldTrajectory> {
    MeanFieldMap::new(alpha, Activation::Tanh)?.fixed_point(dw, db, q0, tol, max_iter)
}

pub fn ordered_transition(alpha: f64, db: f64, threshold: f64) -> Result<f64> {
    Ok(MeanFieldMap::new(alpha, Activation::Tanh)?
        .ordered_transition(db, threshold)?
        .dw_bar)
}
