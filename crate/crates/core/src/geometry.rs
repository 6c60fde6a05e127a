//! Propagation of a great circle through a random network: per-layer PCA
//! and the coefficient of variation of pairwise distances.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::linalg::dot;
use crate::math::{cos, mean, powf, sin, sqrt, std_dev, PI};
use crate::network::{activity_moment, Network, NetworkSpec};
use crate::rng::{indexed_seed, stream};

pub const DEFAULT_POINTS: usize = 200;
pub const DEFAULT_DEPTH: usize = 20;
pub const DEFAULT_WIDTH: usize = 256;

/// Points `x(theta_k)` of a circle, one vector per angle.
#[derive(Debug, Clone, PartialEq)]
pub struct Circle {
    pub thetas: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldCloud {
    pub thetas: Vec<f64>,
    /// `layers[l][k]` is the image of point `k` after `l` layers; `l = 0` is
    /// the input circle.
    pub layers: Vec<Vec<Vec<f64>>>,
}

impl ManifoldCloud {
    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CvResult {
    pub cv: f64,
    pub mean_distance: f64,
    pub n_pairs: usize,
    pub collapsed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    /// `coords[k]` holds the top components of point `k`.
    pub coords: Vec<Vec<f64>>,
    /// All component variances, descending.
    pub variances: Vec<f64>,
    pub total_variance: f64,
}

fn gaussian(n: usize, rng: &mut crate::rng::StreamRng) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn normalize(v: &mut [f64]) {
    let s = sqrt(dot(v, v));
    v.iter_mut().for_each(|x| *x /= s);
}

/// `n_points` equally spaced angles on a random great circle of `R^n`,
/// scaled so the average activity moment over the points is `q0`.
pub fn great_circle(n: usize, alpha: f64, q0: f64, n_points: usize, seed: u64) -> Result<Circle> {
    if n_points < 3 {
        return Err(Error::Domain("a circle needs at least three points"));
    }
    if n < 2 {
        return Err(Error::Domain("a circle needs two dimensions"));
    }
    if !(q0 >= 0.0) {
        return Err(Error::Domain("input level must be nonnegative"));
    }
    let mut rng = stream(seed);
    let mut u = gaussian(n, &mut rng);
    normalize(&mut u);
    let mut w = gaussian(n, &mut rng);
    let p = dot(&u, &w);
    w.iter_mut().zip(&u).for_each(|(a, b)| *a -= p * b);
    normalize(&mut w);
    let thetas: Vec<f64> = (0..n_points)
        .map(|k| 2.0 * PI * k as f64 / n_points as f64)
        .collect();
    // antipodes are built by negation so they are exact
    let half = if n_points.is_multiple_of(2) {
        n_points / 2
    } else {
        n_points
    };
    let mut points: Vec<Vec<f64>> = thetas[..half]
        .iter()
        .map(|&t| {
            let (c, s) = (cos(t), sin(t));
            u.iter().zip(&w).map(|(a, b)| a * c + b * s).collect()
        })
        .collect();
    for k in half..n_points {
        let p = points[k - half].iter().map(|v| -v).collect();
        points.push(p);
    }
    let m = mean(
        &points
            .iter()
            .map(|x| activity_moment(x, alpha))
            .collect::<Vec<_>>(),
    );
    let radius = powf(q0 / m, 1.0 / alpha);
    for x in &mut points {
        x.iter_mut().for_each(|v| *v *= radius);
    }
    Ok(Circle {
        thetas,
        points,
        radius,
    })
}

/// Forward pass of every point, keeping the activations of every layer.
pub fn propagate(net: &Network, circle: &Circle) -> Result<ManifoldCloud> {
    let depth = net.spec().depth;
    let mut layers = vec![Vec::with_capacity(circle.points.len()); depth + 1];
    for p in &circle.points {
        let state = net.forward(p)?;
        for (l, x) in state.x.into_iter().enumerate() {
            layers[l].push(x);
        }
    }
    Ok(ManifoldCloud {
        thetas: circle.thetas.clone(),
        layers,
    })
}

/// Principal components of one layer through the centered Gram matrix.
/// Variances use the `1/n` normalization.
pub fn pca(points: &[Vec<f64>], k: usize) -> Result<Pca> {
    let n = points.len();
    if n <= k {
        return Err(Error::Domain("need more points than components"));
    }
    let dim = points[0].len();
    let mut centroid = vec![0.0; dim];
    for p in points {
        if p.len() != dim {
            return Err(Error::Shape {
                expected: dim,
                got: p.len(),
            });
        }
        centroid
            .iter_mut()
            .zip(p)
            .for_each(|(c, v)| *c += v / n as f64);
    }
    let centered: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(&centroid).map(|(v, c)| v - c).collect())
        .collect();
    let gram = DMatrix::from_fn(n, n, |i, j| dot(&centered[i], &centered[j]) / n as f64);
    let total_variance = gram.trace();
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let rank = dim.min(n - 1);
    let variances: Vec<f64> = order
        .iter()
        .enumerate()
        .map(|(r, &i)| {
            if r < rank {
                eig.eigenvalues[i].max(0.0)
            } else {
                0.0
            }
        })
        .collect();
    let mut coords = vec![vec![0.0; k]; n];
    for (c, &i) in order.iter().take(k).enumerate() {
        let col = eig.eigenvectors.column(i);
        // fix the sign so the largest entry is positive
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |a, b| if b.abs() > a.abs() { b } else { a });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        let s = sign * sqrt(n as f64 * variances[c]);
        for (row, v) in coords.iter_mut().zip(col.iter()) {
            row[c] = s * v;
        }
    }
    Ok(Pca {
        coords,
        variances,
        total_variance,
    })
}

/// Coefficient of variation of the Euclidean distances over all unordered
/// pairs.
pub fn pairwise_cv(points: &[Vec<f64>]) -> Result<CvResult> {
    let n = points.len();
    if n < 3 {
        return Err(Error::Domain("need at least three points"));
    }
    let mut d = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let s: f64 = points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d.push(sqrt(s));
        }
    }
    let scale = points.iter().map(|p| sqrt(dot(p, p))).fold(0.0, f64::max);
    let m = mean(&d);
    let n_pairs = d.len();
    if m <= 1e-12 * scale || m == 0.0 {
        return Ok(CvResult {
            cv: 0.0,
            mean_distance: m,
            n_pairs,
            collapsed: true,
        });
    }
    Ok(CvResult {
        cv: std_dev(&d) / m,
        mean_distance: m,
        n_pairs,
        collapsed: false,
    })
}

pub fn layer_cv(cloud: &ManifoldCloud) -> Result<Vec<CvResult>> {
    cloud.layers.iter().map(|l| pairwise_cv(l)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvMapConfig {
    pub alphas: Vec<f64>,
    pub dw_roots: Vec<f64>,
    pub db: f64,
    pub width: usize,
    pub depth: usize,
    /// Layers whose cv is reported; each must be `<= depth`.
    pub layers: Vec<usize>,
    pub ensembles: usize,
    pub n_points: usize,
    pub q0: f64,
    pub seed: u64,
}

impl Default for CvMapConfig {
    fn default() -> Self {
        Self {
            alphas: (0..=10).map(|i| 1.0 + 0.1 * i as f64).collect(),
            dw_roots: (0..=11).map(|i| 0.25 + 0.25 * i as f64).collect(),
            db: 0.0,
            width: DEFAULT_WIDTH,
            depth: DEFAULT_DEPTH,
            layers: vec![5, 10, 15, 20],
            ensembles: 100,
            n_points: DEFAULT_POINTS,
            q0: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvCell {
    pub alpha: f64,
    pub dw_root: f64,
    /// One entry per reported layer.
    pub cv_mean: Vec<f64>,
    pub cv_std: Vec<f64>,
    pub collapsed: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvMap {
    pub config: CvMapConfig,
    /// Row-major over `(alpha, dw_root)`.
    pub cells: Vec<core::result::Result<CvCell, Error>>,
}

impl CvMap {
    pub fn cell(&self, i: usize, j: usize) -> &core::result::Result<CvCell, Error> {
        &self.cells[i * self.config.dw_roots.len() + j]
    }
}

/// Per-layer cv of one network realization, at the requested layers.
pub fn ensemble_member_cv(
    spec: NetworkSpec,
    q0: f64,
    n_points: usize,
    layers: &[usize],
    seed: u64,
) -> Result<Vec<CvResult>> {
    let net = Network::init(spec, seed)?;
    let circle = great_circle(
        spec.width,
        spec.alpha,
        q0,
        n_points,
        indexed_seed(seed, "circle", &[]),
    )?;
    let cloud = propagate(&net, &circle)?;
    layers
        .iter()
        .map(|&l| pairwise_cv(&cloud.layers[l]))
        .collect()
}

fn cv_cell(config: &CvMapConfig, i: usize, j: usize) -> Result<CvCell> {
    let alpha = config.alphas[i];
    let dw_root = config.dw_roots[j];
    let spec = NetworkSpec::new(
        alpha,
        powf(dw_root, alpha),
        config.db,
        config.width,
        config.depth,
    )?;
    let nl = config.layers.len();
    let mut samples = vec![Vec::with_capacity(config.ensembles); nl];
    let mut collapsed = vec![0; nl];
    for e in 0..config.ensembles {
        let seed = indexed_seed(config.seed, "cv", &[i as u64, j as u64, e as u64]);
        let res = ensemble_member_cv(spec, config.q0, config.n_points, &config.layers, seed)?;
        for (k, r) in res.iter().enumerate() {
            samples[k].push(r.cv);
            collapsed[k] += r.collapsed as usize;
        }
    }
    Ok(CvCell {
        alpha,
        dw_root,
        cv_mean: samples.iter().map(|s| mean(s)).collect(),
        cv_std: samples.iter().map(|s| std_dev(s)).collect(),
        collapsed,
    })
}

/// Ensemble-mean cv over the grid. Per-cell failures are recorded.
pub fn cv_phase_map<E: Executor>(config: &CvMapConfig, executor: &E) -> Result<CvMap> {
    if config.alphas.is_empty() || config.dw_roots.is_empty() {
        return Err(Error::Domain("cv map axes must be nonempty"));
    }
    if config.ensembles == 0 || config.layers.is_empty() {
        return Err(Error::Domain("need at least one ensemble and one layer"));
    }
    if let Some(&l) = config.layers.iter().find(|&&l| l > config.depth) {
        return Err(Error::Index {
            index: l,
            limit: config.depth,
        });
    }
    let nj = config.dw_roots.len();
    let cells = executor.map(config.alphas.len() * nj, |k| {
        cv_cell(config, k / nj, k % nj)
    });
    Ok(CvMap {
        config: config.clone(),
        cells,
    })
}
