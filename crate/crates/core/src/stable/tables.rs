//! Quantile-matching start values in the style of McCulloch (1986).
//!
//! The tables were generated by Monte Carlo (8e6 draws per cell, unit scale)
//! on alpha = 0.5, 0.6, ..., 2.0 (rows) and beta = 0, 0.25, 0.5, 0.75, 1
//! (columns). Entries for negative beta follow by reflection.

use super::StableParams;
use crate::math::{abs, ln, tan, PI};

const ALPHAS: usize = 16;
const BETAS: usize = 5;

/// `(q95 - q05) / (q75 - q25)`
#[rustfmt::skip]
const NU_ALPHA: [[f64; BETAS]; ALPHAS] = [
    [44.6001, 40.2397, 33.1266, 29.2791, 27.7852],
    [23.5981, 22.0265, 18.4251, 16.2714, 15.6993],
    [14.889, 14.0114, 12.0671, 10.7637, 10.4357],
    [10.4684, 9.9647, 8.7961, 7.9048, 7.6967],
    [7.9188, 7.6023, 6.8722, 6.2759, 6.1293],
    [6.3112, 6.1144, 5.64, 5.2179, 5.1437],
    [5.2227, 5.0929, 4.7927, 4.5114, 4.4652],
    [4.4506, 4.3631, 4.1798, 4.01, 3.9678],
    [3.8912, 3.8407, 3.7216, 3.6308, 3.6],
    [3.4621, 3.4405, 3.3808, 3.3339, 3.3184],
    [3.1499, 3.1332, 3.112, 3.0922, 3.0913],
    [2.9143, 2.9103, 2.9038, 2.9025, 2.9065],
    [2.7408, 2.7402, 2.7418, 2.7435, 2.7475],
    [2.6108, 2.611, 2.6136, 2.6123, 2.6194],
    [2.5142, 2.5136, 2.5165, 2.5134, 2.5164],
    [2.4395, 2.4365, 2.4395, 2.4382, 2.4395],
];

/// `(q95 + q05 - 2 q50) / (q95 - q05)`
#[rustfmt::skip]
const NU_BETA: [[f64; BETAS]; ALPHAS] = [
    [0.0, 0.5106, 0.8383, 0.9701, 0.9846],
    [0.0, 0.4416, 0.7669, 0.9362, 0.9621],
    [0.0, 0.3869, 0.6993, 0.89, 0.9272],
    [0.0, 0.3439, 0.6349, 0.834, 0.8804],
    [0.0, 0.3022, 0.5716, 0.7701, 0.8245],
    [0.0, 0.267, 0.514, 0.6991, 0.7621],
    [0.0, 0.2375, 0.4552, 0.6239, 0.6937],
    [0.0, 0.2076, 0.3996, 0.5478, 0.621],
    [0.0, 0.1771, 0.3421, 0.4704, 0.5456],
    [0.0, 0.1474, 0.2862, 0.394, 0.4689],
    [0.0, 0.1184, 0.2281, 0.3199, 0.389],
    [0.0, 0.0897, 0.1736, 0.2471, 0.31],
    [0.0, 0.0625, 0.1227, 0.1782, 0.228],
    [0.0, 0.0386, 0.076, 0.1128, 0.1479],
    [0.0, 0.0181, 0.0355, 0.0535, 0.0714],
    [0.0, 0.0, 0.0, 0.0, 0.0],
];

/// Interquartile range of the unit-scale law.
#[rustfmt::skip]
const IQR: [[f64; BETAS]; ALPHAS] = [
    [2.5714, 3.0513, 4.5018, 6.5991, 9.0955],
    [2.3224, 2.6188, 3.5298, 4.8019, 6.2154],
    [2.1829, 2.3835, 2.9931, 3.8293, 4.7617],
    [2.0921, 2.2396, 2.6671, 3.2614, 3.9097],
    [2.0364, 2.1447, 2.4548, 2.8793, 3.349],
    [1.9987, 2.0802, 2.3093, 2.621, 2.9688],
    [1.9778, 2.0374, 2.1998, 2.4316, 2.6906],
    [1.9637, 2.0059, 2.1242, 2.2927, 2.4884],
    [1.952, 1.9804, 2.0647, 2.1856, 2.3298],
    [1.9453, 1.9647, 2.0207, 2.1042, 2.2109],
    [1.9378, 1.951, 1.9887, 2.0457, 2.114],
    [1.9306, 1.938, 1.9629, 1.9946, 2.0411],
    [1.9239, 1.9289, 1.9408, 1.9592, 1.9863],
    [1.9186, 1.9206, 1.9255, 1.9351, 1.9458],
    [1.9123, 1.9132, 1.9132, 1.917, 1.9189],
    [1.9065, 1.9082, 1.9074, 1.9078, 1.908],
];

/// Median of the unit-scale, zero-location law.
#[rustfmt::skip]
const MEDIAN: [[f64; BETAS]; ALPHAS] = [
    [0.0, 0.3109, 0.7791, 1.4093, 2.2012],
    [0.0, 0.4217, 0.96, 1.6142, 2.374],
    [0.0, 0.5797, 1.2428, 1.9903, 2.8156],
    [0.0, 0.865, 1.7886, 2.7772, 3.8219],
    [0.0, 1.6764, 3.393, 5.1587, 6.9656],
    [0.0, 0.0972, 0.2228, 0.3826, 0.5762],
    [0.0, -1.4828, -2.949, -4.39, -5.8067],
    [0.0, -0.679, -1.347, -1.998, -2.6307],
    [0.0, -0.407, -0.8075, -1.195, -1.5737],
    [0.0, -0.2692, -0.5345, -0.7906, -1.0408],
    [0.0, -0.1828, -0.3655, -0.5441, -0.7169],
    [0.0, -0.1265, -0.2517, -0.3752, -0.4958],
    [0.0, -0.0831, -0.1672, -0.2508, -0.3304],
    [0.0, -0.0505, -0.1004, -0.1523, -0.2019],
    [0.0, -0.024, -0.0465, -0.0714, -0.0938],
    [0.0, 0.0, 0.0, 0.0, 0.0],
];

fn alpha_of(row: usize) -> f64 {
    0.5 + 0.1 * row as f64
}

fn skew_shift(alpha: f64, beta: f64) -> f64 {
    if alpha == 1.0 {
        0.0
    } else {
        beta * tan(PI * alpha / 2.0)
    }
}

/// Median in the continuous (`Z - beta tan(pi alpha / 2)`) coordinate, which
/// interpolates smoothly through alpha = 1.
fn shifted_median(row: usize, col: usize) -> f64 {
    let alpha = alpha_of(row);
    let beta = 0.25 * col as f64;
    MEDIAN[row][col] - skew_shift(alpha, beta)
}

fn bilinear(f: impl Fn(usize, usize) -> f64, alpha: f64, beta_abs: f64) -> f64 {
    let a = ((alpha - 0.5) / 0.1).clamp(0.0, (ALPHAS - 1) as f64);
    let b = (beta_abs / 0.25).clamp(0.0, (BETAS - 1) as f64);
    let i = (a as usize).min(ALPHAS - 2);
    let j = (b as usize).min(BETAS - 2);
    let (u, v) = (a - i as f64, b - j as f64);
    (1.0 - u) * (1.0 - v) * f(i, j)
        + u * (1.0 - v) * f(i + 1, j)
        + (1.0 - u) * v * f(i, j + 1)
        + u * v * f(i + 1, j + 1)
}

/// Start values from the 5%, 25%, 50%, 75% and 95% sample quantiles.
pub(crate) fn quantile_start(q05: f64, q25: f64, q50: f64, q75: f64, q95: f64) -> StableParams {
    let nu_a = (q95 - q05) / (q75 - q25);
    let nu_b = (q95 + q05 - 2.0 * q50) / (q95 - q05);
    let sign = if nu_b < 0.0 { -1.0 } else { 1.0 };
    let target_b = abs(nu_b);

    let mut best = (f64::INFINITY, 2.0, 0.0);
    for ia in 0..=300 {
        let alpha = 0.5 + 0.005 * ia as f64;
        for ib in 0..=200 {
            let beta = 0.005 * ib as f64;
            let na = bilinear(|i, j| NU_ALPHA[i][j], alpha, beta);
            let nb = bilinear(|i, j| NU_BETA[i][j], alpha, beta);
            let la = ln(nu_a.max(1e-9) / na);
            let d = la * la + (target_b - nb) * (target_b - nb);
            if d < best.0 {
                best = (d, alpha, beta);
            }
        }
    }
    let (_, alpha, beta_abs) = best;
    let iqr = bilinear(|i, j| IQR[i][j], alpha, beta_abs);
    let sigma = ((q75 - q25) / iqr).max(f64::MIN_POSITIVE);
    let m0 = sign * bilinear(shifted_median, alpha, beta_abs);
    let beta = sign * beta_abs;
    // median of X in its own coordinates: sigma (m0 + zeta) + mu, and the
    // alpha = 1 log-scale offset
    let zeta = skew_shift(alpha, beta);
    let offset = if alpha == 1.0 {
        2.0 / PI * beta * sigma * ln(sigma)
    } else {
        0.0
    };
    let mu = q50 - sigma * (m0 + zeta) - offset;
    StableParams {
        alpha,
        beta,
        sigma,
        mu,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_nodes_invert_to_themselves() {
        for (row, col) in [(10, 0), (7, 2), (13, 1), (4, 3)] {
            let a = alpha_of(row);
            let b = 0.25 * col as f64;
            // synthesize quantiles for unit scale, zero location
            let iqr = IQR[row][col];
            let spread = NU_ALPHA[row][col] * iqr;
            let q50 = MEDIAN[row][col];
            let mid = q50 + 0.5 * NU_BETA[row][col] * spread;
            let (q05, q95) = (mid - spread / 2.0, mid + spread / 2.0);
            let p = quantile_start(q05, q50 - iqr / 2.0, q50, q50 + iqr / 2.0, q95);
            assert!((p.alpha - a).abs() < 0.011, "{row},{col}: {p:?}");
            assert!((p.beta - b).abs() < 0.03, "{row},{col}: {p:?}");
            assert!((p.sigma - 1.0).abs() < 0.02, "{row},{col}: {p:?}");
        }
    }
}
