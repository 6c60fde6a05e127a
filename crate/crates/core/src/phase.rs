//! Jacobian averages `J_f = int f(|z|) rho(z) d^2z`, their ratio against the
//! ordered transition, and the `(alpha, D_w^(1/alpha))` phase diagram.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::math::{abs, ln, powf, powi};
use crate::meanfield::{MeanFieldMap, Transition, ORDERED_THRESHOLD};
use crate::network::Activation;
use crate::rng::indexed_seed;
use crate::spectra::{RadialDensity, SpectralModel, DEFAULT_MIN_RADIUS, DEFAULT_RADII};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AveragingKind {
    /// `sgn(ln r) |ln r|^L`
    LogPower,
    /// `(r - 2)^L`, odd `L`
    ShiftedPower,
    /// `f = 1`; integrates the mass.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AveragingFunction {
    pub kind: AveragingKind,
    pub l: u32,
}

impl AveragingFunction {
    pub fn log_power(l: u32) -> Result<Self> {
        if l == 0 {
            return Err(Error::Domain("depth exponent must be at least 1"));
        }
        Ok(Self {
            kind: AveragingKind::LogPower,
            l,
        })
    }

    pub fn shifted_power(l: u32) -> Result<Self> {
        if l.is_multiple_of(2) {
            return Err(Error::Domain(
                "shifted power needs odd L to stay increasing",
            ));
        }
        Ok(Self {
            kind: AveragingKind::ShiftedPower,
            l,
        })
    }

    pub fn unit() -> Self {
        Self {
            kind: AveragingKind::Unit,
            l: 0,
        }
    }

    #[inline]
    pub fn eval(&self, r: f64) -> f64 {
        match self.kind {
            AveragingKind::LogPower => {
                let v = ln(r);
                let m = powi(abs(v), self.l as i32);
                if v < 0.0 {
                    -m
                } else {
                    m
                }
            }
            AveragingKind::ShiftedPower => powi(r - 2.0, self.l as i32),
            AveragingKind::Unit => 1.0,
        }
    }
}

/// `J_f` restricted to `|z| >= r_min`: trapezoid in `f` against the enclosed
/// mass between grid radii, plus the mass beyond the last radius counted at
/// that radius. Mass inside the first radius is left out.
pub fn average_over_profile(f: &AveragingFunction, profile: &RadialDensity) -> f64 {
    let r = &profile.radii;
    let m = &profile.mass;
    if r.is_empty() {
        return 0.0;
    }
    let mut j = 0.0;
    for i in 1..r.len() {
        j += 0.5 * (f.eval(r[i - 1]) + f.eval(r[i])) * (m[i] - m[i - 1]);
    }
    let last = r.len() - 1;
    j + f.eval(r[last]) * (1.0 - m[last]).max(0.0)
}

/// `J_f` on the default grid.
pub fn jacobian_average(f: &AveragingFunction, model: &SpectralModel) -> Result<f64> {
    let radii = model.default_radii(DEFAULT_MIN_RADIUS, DEFAULT_RADII);
    Ok(average_over_profile(f, &model.profile(&radii)?))
}

/// Ratio of `J` to its value `j_bar` at the transition, oriented so that
/// `ratio > 1` exactly when `J > j_bar`: `J / j_bar` for positive `j_bar`,
/// `j_bar / J` when both are negative, `+inf` when `j_bar < 0 <= J`.
pub fn average_ratio(j: f64, j_bar: f64) -> Result<f64> {
    if j_bar == 0.0 || !j_bar.is_finite() {
        return Err(Error::DegenerateAverage(j_bar));
    }
    Ok(if j_bar > 0.0 {
        j / j_bar
    } else if j < 0.0 {
        j_bar / j
    } else {
        f64::INFINITY
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConfig {
    pub alphas: Vec<f64>,
    /// Weight axis in `D_w^(1/alpha)`.
    pub dw_roots: Vec<f64>,
    /// `f_1` exponents `1..=l_max`.
    pub l_max: u32,
    /// Odd `f_2` exponents whose unit-ratio contours are traced.
    pub l_contours: Vec<u32>,
    pub db: f64,
    pub q0: f64,
    pub threshold: f64,
    pub n_mc: usize,
    pub n_radii: usize,
    pub r_min: f64,
    pub seed: u64,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            alphas: (0..=20).map(|i| 1.0 + 0.05 * i as f64).collect(),
            dw_roots: (0..=55).map(|i| 0.25 + 0.05 * i as f64).collect(),
            l_max: 6,
            l_contours: (0..=10).map(|i| 1 + 10 * i).collect(),
            db: 0.0,
            q0: 1.0,
            threshold: ORDERED_THRESHOLD,
            n_mc: 20_000,
            n_radii: DEFAULT_RADII,
            r_min: DEFAULT_MIN_RADIUS,
            seed: 0,
        }
    }
}

impl PhaseConfig {
    fn functions(&self) -> Result<Vec<AveragingFunction>> {
        let mut fs = Vec::new();
        for l in 1..=self.l_max {
            fs.push(AveragingFunction::log_power(l)?);
        }
        for &l in &self.l_contours {
            fs.push(AveragingFunction::shifted_power(l)?);
        }
        Ok(fs)
    }

    fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() || self.dw_roots.is_empty() {
            return Err(Error::Domain("phase grid axes must be nonempty"));
        }
        if self.l_max == 0 {
            return Err(Error::Domain("l_max must be at least 1"));
        }
        if self.n_radii < 2 || !(self.r_min > 0.0) {
            return Err(Error::Domain("need at least two radii above zero"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCell {
    pub alpha: f64,
    pub dw_root: f64,
    pub dw: f64,
    pub dw_bar: f64,
    pub qstar: f64,
    /// `J_{f_1}` for `L = 1..=l_max`.
    pub jac_avg: Vec<f64>,
    /// `f_1` ratios for `L = 1..=l_max`.
    pub ratio: Vec<f64>,
    /// `f_2` ratios, one per contour exponent.
    pub f2_ratio: Vec<f64>,
    pub total_mass: f64,
    pub max_l: u32,
}

impl PhaseCell {
    /// Largest `L` such that every `f_1` ratio up to `L` exceeds 1.
    fn max_l_of(ratio: &[f64]) -> u32 {
        ratio.iter().take_while(|&&r| r > 1.0).count() as u32
    }
}

/// The ordered transition and its Jacobian averages at one `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow {
    pub transition: Transition,
    pub averages: Vec<f64>,
    pub total_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub l: u32,
    /// `(alpha, dw_root)` crossings, ordered by alpha then `dw_root`.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    pub config: PhaseConfig,
    pub rows: Vec<core::result::Result<TransitionRow, Error>>,
    /// Row-major over `(alpha, dw_root)`.
    pub cells: Vec<core::result::Result<PhaseCell, Error>>,
    pub contours: Vec<Contour>,
}

impl PhaseGrid {
    pub fn cell(&self, i: usize, j: usize) -> &core::result::Result<PhaseCell, Error> {
        &self.cells[i * self.config.dw_roots.len() + j]
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.is_err()).count()
    }
}

struct RowContext {
    map: MeanFieldMap,
    row: TransitionRow,
}

fn profile_for(
    alpha: f64,
    dw: f64,
    qstar: f64,
    config: &PhaseConfig,
    seed: u64,
) -> Result<RadialDensity> {
    let model = SpectralModel::new(alpha, dw, qstar, config.n_mc, seed)?;
    let radii = model.default_radii(config.r_min, config.n_radii);
    model.profile(&radii)
}

fn row_seed(config: &PhaseConfig, i: usize) -> u64 {
    indexed_seed(config.seed, "phase-row", &[i as u64])
}

fn solve_row(config: &PhaseConfig, fs: &[AveragingFunction], i: usize) -> Result<RowContext> {
    let alpha = config.alphas[i];
    let map = MeanFieldMap::new(alpha, Activation::Tanh)?;
    let transition = map.ordered_transition(config.db, config.threshold)?;
    let profile = profile_for(
        alpha,
        transition.dw_bar,
        transition.qstar,
        config,
        row_seed(config, i),
    )?;
    let averages = fs
        .iter()
        .map(|f| average_over_profile(f, &profile))
        .collect();
    Ok(RowContext {
        map,
        row: TransitionRow {
            transition,
            averages,
            total_mass: profile.total_mass,
        },
    })
}

fn solve_cell(
    config: &PhaseConfig,
    fs: &[AveragingFunction],
    ctx: &RowContext,
    i: usize,
    j: usize,
) -> Result<PhaseCell> {
    let alpha = config.alphas[i];
    let dw_root = config.dw_roots[j];
    let dw = powf(dw_root, alpha);
    let traj = ctx
        .map
        .fixed_point(dw, config.db, config.q0, 1e-10, 100_000)?;
    let profile = profile_for(alpha, dw, traj.qstar, config, row_seed(config, i))?;
    let l_max = config.l_max as usize;
    let mut jac_avg = Vec::with_capacity(l_max);
    let mut ratio = Vec::with_capacity(l_max);
    let mut f2_ratio = Vec::with_capacity(fs.len() - l_max);
    for (k, f) in fs.iter().enumerate() {
        let j_val = average_over_profile(f, &profile);
        let r = average_ratio(j_val, ctx.row.averages[k])?;
        if k < l_max {
            jac_avg.push(j_val);
            ratio.push(r);
        } else {
            f2_ratio.push(r);
        }
    }
    let max_l = PhaseCell::max_l_of(&ratio);
    Ok(PhaseCell {
        alpha,
        dw_root,
        dw,
        dw_bar: ctx.row.transition.dw_bar,
        qstar: traj.qstar,
        jac_avg,
        ratio,
        f2_ratio,
        total_mass: profile.total_mass,
        max_l,
    })
}

/// Evaluates the full grid. Per-cell failures are recorded, not fatal.
pub fn phase_diagram<E: Executor>(config: &PhaseConfig, executor: &E) -> Result<PhaseGrid> {
    config.validate()?;
    let fs = config.functions()?;
    let rows: Vec<Result<RowContext>> =
        executor.map(config.alphas.len(), |i| solve_row(config, &fs, i));
    let nj = config.dw_roots.len();
    let cells: Vec<Result<PhaseCell>> = executor.map(config.alphas.len() * nj, |k| {
        let (i, j) = (k / nj, k % nj);
        match &rows[i] {
            Ok(ctx) => solve_cell(config, &fs, ctx, i, j),
            Err(e) => Err(e.clone()),
        }
    });
    let contours = trace_contours(config, &cells);
    Ok(PhaseGrid {
        config: config.clone(),
        rows: rows.into_iter().map(|r| r.map(|c| c.row)).collect(),
        cells,
        contours,
    })
}

/// Unit crossings of each `f_2` ratio along the weight axis, row by row.
fn trace_contours(config: &PhaseConfig, cells: &[Result<PhaseCell>]) -> Vec<Contour> {
    let nj = config.dw_roots.len();
    config
        .l_contours
        .iter()
        .enumerate()
        .map(|(c, &l)| {
            let mut points = Vec::new();
            for (i, &alpha) in config.alphas.iter().enumerate() {
                for j in 1..nj {
                    let (Ok(a), Ok(b)) = (&cells[i * nj + j - 1], &cells[i * nj + j]) else {
                        continue;
                    };
                    let (ra, rb) = (a.f2_ratio[c] - 1.0, b.f2_ratio[c] - 1.0);
                    if !(ra.is_finite() && rb.is_finite()) || ra * rb > 0.0 || ra == rb {
                        continue;
                    }
                    let t = ra / (ra - rb);
                    points.push((alpha, a.dw_root + t * (b.dw_root - a.dw_root)));
                }
            }
            Contour { l, points }
        })
        .collect()
}

/// `J_f(alpha, D_w) / J_f(alpha, D_w_bar(alpha))`, both spectra drawn from
/// the same random numbers.
pub fn ratio_to_transition(
    alpha: f64,
    dw: f64,
    f: &AveragingFunction,
    db: f64,
    n_mc: usize,
    seed: u64,
) -> Result<f64> {
    let map = MeanFieldMap::new(alpha, Activation::Tanh)?;
    let tr = map.ordered_transition(db, ORDERED_THRESHOLD)?;
    let q = map.fixed_point(dw, db, 1.0, 1e-10, 100_000)?.qstar;
    let j = jacobian_average(f, &SpectralModel::new(alpha, dw, q, n_mc, seed)?)?;
    let j_bar = jacobian_average(
        f,
        &SpectralModel::new(alpha, tr.dw_bar, tr.qstar, n_mc, seed)?,
    )?;
    average_ratio(j, j_bar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;

    #[test]
    fn averaging_functions() {
        let f = AveragingFunction::log_power(3).unwrap();
        assert!((f.eval(core::f64::consts::E) - 1.0).abs() < 1e-12);
        assert!((f.eval(1.0 / core::f64::consts::E.powi(2)) + 8.0).abs() < 1e-12);
        assert!(AveragingFunction::shifted_power(2).is_err());
        assert!(AveragingFunction::log_power(0).is_err());
        let g = AveragingFunction::shifted_power(3).unwrap();
        assert_eq!(g.eval(3.0), 1.0);
        assert_eq!(g.eval(1.0), -1.0);
        // both increasing
        let rs: Vec<f64> = (1..200).map(|i| 0.02 * i as f64).collect();
        for h in [f, g] {
            assert!(rs.windows(2).all(|w| h.eval(w[1]) > h.eval(w[0])));
        }
    }

    #[test]
    fn ratio_orientation() {
        assert_eq!(average_ratio(2.0, 1.0).unwrap(), 2.0);
        assert_eq!(average_ratio(-1.0, -2.0).unwrap(), 2.0);
        assert!(average_ratio(-3.0, -2.0).unwrap() < 1.0);
        assert_eq!(average_ratio(0.5, -2.0).unwrap(), f64::INFINITY);
        assert!(matches!(
            average_ratio(1.0, 0.0),
            Err(Error::DegenerateAverage(_))
        ));
        // comparison against 1 is invariant under positive scaling of f
        for (j, jb) in [(2.0, 1.0), (-1.0, -2.0), (-3.0, -2.0), (0.5, 0.7)] {
            for a in [0.1, 7.0] {
                let r1 = average_ratio(j, jb).unwrap() > 1.0;
                let r2 = average_ratio(a * j, a * jb).unwrap() > 1.0;
                assert_eq!(r1, r2);
            }
        }
    }

    #[test]
    fn unit_disk_log_average() {
        let m = SpectralModel::new(2.0, 1.0, 0.0, 4, 0).unwrap();
        let j = jacobian_average(&AveragingFunction::log_power(1).unwrap(), &m).unwrap();
        assert!((j + 0.5).abs() < 1e-3, "{j}");
        // disk mass outside r_min
        let one = jacobian_average(&AveragingFunction::unit(), &m).unwrap();
        assert!(
            (one - (1.0 - DEFAULT_MIN_RADIUS * DEFAULT_MIN_RADIUS)).abs() < 1e-9,
            "{one}"
        );
    }

    #[test]
    fn self_ratio_is_one() {
        let map = MeanFieldMap::new(1.5, Activation::Tanh).unwrap();
        let tr = map.ordered_transition(0.0, ORDERED_THRESHOLD).unwrap();
        let f = AveragingFunction::log_power(2).unwrap();
        let r = ratio_to_transition(1.5, tr.dw_bar, &f, 0.0, 2_000, 9).unwrap();
        assert!((r - 1.0).abs() < 1e-6, "{r}");
    }

    #[test]
    fn small_gaussian_grid() {
        let config = PhaseConfig {
            alphas: alloc::vec![2.0],
            dw_roots: alloc::vec![0.5, 1.0, 2.0],
            l_contours: alloc::vec![1, 3],
            n_mc: 2_000,
            n_radii: 80,
            ..PhaseConfig::default()
        };
        let grid = phase_diagram(&config, &Sequential).unwrap();
        assert_eq!(grid.failures(), 0);
        let row = grid.rows[0].as_ref().unwrap();
        assert!((row.transition.dw_bar - 1.0).abs() < 0.05);
        let first = grid.cell(0, 0).as_ref().unwrap();
        assert_eq!(first.ratio.len(), 6);
        assert_eq!(first.f2_ratio.len(), 2);
    }
}
