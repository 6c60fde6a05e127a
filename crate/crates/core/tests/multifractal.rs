use levyprop_core::multifractal::{fractal_dimension, ipr, log_ipr, IprSamples};
use levyprop_core::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_phases(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU)))
        .collect()
}

fn samples<F: FnMut(usize) -> Vec<Complex64>>(q: f64, mut make: F) -> Vec<IprSamples> {
    [64, 128, 256, 512, 1024]
        .iter()
        .map(|&n| IprSamples {
            n,
            log_ipr: (0..4).map(|_| log_ipr(&make(n), q).unwrap()).collect(),
        })
        .collect()
}

#[test]
fn ipr_baselines() {
    let n = 400;
    let uniform = vec![Complex64::new((n as f64).powf(-0.5), 0.0); n];
    assert!((ipr(&uniform, 2.0).unwrap() * n as f64 - 1.0).abs() < 1e-12);
    let mut e1 = vec![Complex64::new(0.0, 0.0); n];
    e1[7] = Complex64::new(0.0, 1.0);
    for q in [0.5, 2.0, 4.0] {
        assert!((ipr(&e1, q).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn synthetic_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for q in [2.0, 3.0] {
        let d = fractal_dimension(&samples(q, |n| random_phases(n, &mut rng)), q).unwrap();
        assert!((d.dq_mean - 1.0).abs() <= 0.05, "q {q}: {d:?}");
        let d = fractal_dimension(
            &samples(q, |n| {
                let mut v = vec![Complex64::new(0.0, 0.0); n];
                v[n / 3] = Complex64::new(1.0, 0.0);
                v
            }),
            q,
        )
        .unwrap();
        assert!(d.dq_mean.abs() <= 0.05, "q {q}: {d:?}");
    }
}

#[test]
fn order_one_is_excluded() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    assert!(fractal_dimension(&samples(1.0, |n| random_phases(n, &mut rng)), 1.0).is_err());
}

fn vector() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..60)
        .prop_filter("nonzero", |v| v.iter().any(|&(a, b)| a * a + b * b > 1e-6))
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
}

proptest! {
    #[test]
    fn ipr_decreases_with_order(v in vector(), q in 0.1f64..5.0, dq in 0.0f64..3.0) {
        prop_assert!(log_ipr(&v, q + dq).unwrap() <= log_ipr(&v, q).unwrap() + 1e-9);
        prop_assert!(ipr(&v, 1.0).unwrap() == 1.0);
    }

    #[test]
    fn ipr_ignores_global_phase_and_scale(v in vector(), q in 0.1f64..5.0, theta in 0.0f64..6.3, c in 0.01f64..100.0) {
        let w: Vec<Complex64> = v.iter().map(|z| z * Complex64::from_polar(c, theta)).collect();
        let (a, b) = (log_ipr(&v, q).unwrap(), log_ipr(&w, q).unwrap());
        prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
    }
}
