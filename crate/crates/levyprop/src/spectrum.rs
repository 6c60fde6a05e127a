//! Empirical Jacobian spectra over network realizations and the statistics
//! used to compare them with the theoretical density.

use levyprop_core::rng::indexed_seed;
use levyprop_core::{
    fixed_point_input, Complex64, Eigensolver, Executor, JacobianForm, Network, NetworkSpec, Result,
};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::eigen::FaerEigen;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    /// Width and weight law; depth is set from `layer` and `form`.
    pub spec: NetworkSpec,
    pub layer: usize,
    pub form: JacobianForm,
    pub realizations: usize,
    /// Fluctuation level of the first-layer preactivations, usually `q*`.
    pub q0: f64,
    pub seed: u64,
}

/// Seed of realization `r`; the input uses `indexed_seed(that, "input", [])`.
pub fn realization_seed(master: u64, r: usize) -> u64 {
    indexed_seed(master, "spectrum", &[r as u64])
}

/// Eigenvalues of one sampled layerwise Jacobian.
pub fn realization_spectrum(config: &EnsembleConfig, r: usize) -> Result<Vec<Complex64>> {
    let depth = match config.form {
        JacobianForm::DW => config.layer,
        JacobianForm::WD => config.layer + 1,
    };
    let spec = NetworkSpec {
        depth,
        ..config.spec
    };
    let seed = realization_seed(config.seed, r);
    let net = Network::init(spec, seed)?;
    let x0 = fixed_point_input(&spec, config.q0, indexed_seed(seed, "input", &[]));
    let state = net.forward(&x0)?;
    FaerEigen.eigenvalues(&net.layer_jacobian(&state, config.layer, config.form)?)
}

/// Spectra of every realization, in realization order.
pub fn ensemble_spectra<E: Executor>(
    config: &EnsembleConfig,
    executor: &E,
) -> Result<Vec<Vec<Complex64>>> {
    executor
        .map(config.realizations, |r| realization_spectrum(config, r))
        .into_iter()
        .collect()
}

/// Fraction of all eigenvalues whose modulus falls in each `[e_k, e_{k+1})`.
pub fn radial_fractions(eigs: &[Complex64], edges: &[f64]) -> Vec<f64> {
    let mut counts = vec![0usize; edges.len().saturating_sub(1)];
    for z in eigs {
        let r = z.norm();
        if let Some(k) = edges.windows(2).position(|w| r >= w[0] && r < w[1]) {
            counts[k] += 1;
        }
    }
    counts
        .iter()
        .map(|&c| c as f64 / eigs.len() as f64)
        .collect()
}

/// Chi-squared test of uniform eigenvalue phases over `bins` equal bins of
/// the upper half-plane. Conjugate partners and real eigenvalues are left
/// out. Returns `(statistic, p-value)`.
pub fn angular_uniformity(eigs: &[Complex64], bins: usize) -> (f64, f64) {
    let mut counts = vec![0usize; bins];
    for z in eigs.iter().filter(|z| z.im > 0.0) {
        let t = z.arg() / std::f64::consts::PI;
        counts[((t * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let n: usize = counts.iter().sum();
    let expected = n as f64 / bins as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let p = ChiSquared::new((bins - 1) as f64).map_or(f64::NAN, |d| 1.0 - d.cdf(stat));
    (stat, p)
}

pub fn spectral_radius(eigs: &[Complex64]) -> f64 {
    eigs.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use levyprop_core::Sequential;

    #[test]
    fn conjugate_closed_and_identity_regime() {
        let spec = NetworkSpec::new(1.5, 1.0, 0.0, 40, 1).unwrap();
        let config = EnsembleConfig {
            spec,
            layer: 1,
            form: JacobianForm::DW,
            realizations: 2,
            q0: 0.0,
            seed: 3,
        };
        let spectra = ensemble_spectra(&config, &Sequential).unwrap();
        assert_eq!(spectra.len(), 2);
        for eigs in &spectra {
            for z in eigs {
                assert!(eigs.iter().any(|w| (w - z.conj()).norm() < 1e-8));
            }
        }
        // zero input: D = I, so the spectrum is that of W alone
        let w = Network::init(NetworkSpec { depth: 1, ..spec }, realization_seed(3, 0)).unwrap();
        let mut direct = FaerEigen.eigenvalues(w.weight(1)).unwrap();
        let mut got = spectra[0].clone();
        let key = |z: &Complex64| (z.re, z.im);
        direct.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        got.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        for (a, b) in direct.iter().zip(&got) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn histogram_and_uniformity() {
        let eigs: Vec<Complex64> = (0..1000)
            .map(|k| {
                Complex64::from_polar(
                    0.5 + 0.001 * (k % 7) as f64,
                    2.0 * std::f64::consts::PI * (k as f64 + 0.5) / 1000.0,
                )
            })
            .collect();
        let f = radial_fractions(&eigs, &[0.0, 0.5, 1.0]);
        assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (_, p) = angular_uniformity(&eigs, 16);
        assert!(p > 0.99);
        let clumped: Vec<Complex64> = eigs
            .iter()
            .map(|z| Complex64::from_polar(z.norm(), z.arg() * 0.2))
            .collect();
        assert!(angular_uniformity(&clumped, 16).1 < 1e-6);
        assert_eq!(spectral_radius(&[Complex64::new(3.0, 4.0)]), 5.0);
    }
}
