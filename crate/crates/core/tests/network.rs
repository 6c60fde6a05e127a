use levyprop_core::network::forward_streaming;
use levyprop_core::stable::fit;
use levyprop_core::{calibrated_input, JacobianForm, Matrix, Network, NetworkSpec};
use proptest::prelude::*;

fn trace_power(m: &Matrix, k: usize) -> f64 {
    let mut p = m.clone();
    for _ in 1..k {
        p = p.matmul(m).unwrap();
    }
    (0..m.rows()).map(|i| p.get(i, i)).sum()
}

#[test]
fn gaussian_entry_variance() {
    let net = Network::init(NetworkSpec::new(2.0, 1.0, 0.0, 1000, 2).unwrap(), 3).unwrap();
    for l in 1..=2 {
        let w = net.weight(l).as_slice();
        let v = w.iter().map(|x| x * x).sum::<f64>() / w.len() as f64;
        assert!((v * 1000.0 - 1.0).abs() < 0.1, "layer {l}: {v}");
    }
}

#[test]
fn heavy_tailed_weights_fit_back() {
    let spec = NetworkSpec::new(1.2, 1.0, 0.0, 1000, 1).unwrap();
    let net = Network::init(spec, 4).unwrap();
    let w: Vec<f64> = net
        .weight(1)
        .as_slice()
        .iter()
        .step_by(10)
        .copied()
        .collect();
    let f = fit(&w).unwrap();
    assert!((f.params.alpha - 1.2).abs() <= 0.05, "{:?}", f.params);
    assert!((f.params.sigma / spec.weight_scale() - 1.0).abs() < 0.05);
}

#[test]
fn biases_vanish_without_bias_scale() {
    let net = Network::init(NetworkSpec::new(1.5, 1.0, 0.0, 50, 3).unwrap(), 5).unwrap();
    assert!((1..=3).all(|l| net.bias(l).iter().all(|&b| b == 0.0)));
}

#[test]
fn activations_stay_in_range() {
    let spec = NetworkSpec::new(1.2, 4.0, 0.5, 200, 5).unwrap();
    let net = Network::init(spec, 6).unwrap();
    let s = net.forward(&calibrated_input(200, 1.2, 10.0, 7)).unwrap();
    // tanh rounds to +-1 in floating point once |h| exceeds about 19
    assert!(s.x[1..].iter().flatten().all(|&v| v.abs() <= 1.0));
    assert!(s.x[1..].iter().flatten().any(|&v| v.abs() < 1.0));
}

#[test]
fn jacobian_matches_central_differences() {
    let n = 64;
    let spec = NetworkSpec::new(1.5, 1.0, 0.1, n, 4).unwrap();
    let net = Network::init(spec, 8).unwrap();
    let x0 = calibrated_input(n, 1.5, 1.0, 9);
    let v = calibrated_input(n, 2.0, 1.0, 10);
    let jv = net
        .full_jacobian(&net.forward(&x0).unwrap())
        .unwrap()
        .matvec(&v)
        .unwrap();
    let h = 1e-6;
    let shifted = |s: f64| {
        let x: Vec<f64> = x0.iter().zip(&v).map(|(a, b)| a + s * b).collect();
        net.output(&x).unwrap()
    };
    let (p, m) = (shifted(h), shifted(-h));
    let fd: Vec<f64> = p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect();
    let err = fd
        .iter()
        .zip(&jv)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let norm = jv.iter().map(|a| a * a).sum::<f64>().sqrt();
    assert!(err / norm < 1e-4, "relative error {}", err / norm);
}

#[test]
fn single_layer_jacobian_is_the_layer_factor() {
    let net = Network::init(NetworkSpec::new(1.5, 2.0, 0.0, 30, 1).unwrap(), 11).unwrap();
    let s = net.forward(&calibrated_input(30, 1.5, 1.0, 12)).unwrap();
    assert_eq!(
        net.full_jacobian(&s).unwrap(),
        net.layer_jacobian(&s, 1, JacobianForm::DW).unwrap()
    );
}

#[test]
fn saturation_collapses_the_jacobian() {
    let n = 100;
    let net = Network::init(NetworkSpec::new(2.0, 1e4, 0.0, n, 3).unwrap(), 13).unwrap();
    let j = net
        .full_jacobian(&net.forward(&calibrated_input(n, 2.0, 1e6, 14)).unwrap())
        .unwrap();
    let bound: f64 = (1..=3).map(|l| net.weight(l).frobenius_norm()).product();
    assert!(
        j.frobenius_norm() < 1e-3 * bound,
        "{} vs {bound}",
        j.frobenius_norm()
    );
}

#[test]
fn dw_and_wd_share_spectral_moments() {
    let n = 40;
    let net = Network::init(NetworkSpec::new(1.5, 1.5, 0.0, n, 3).unwrap(), 15).unwrap();
    let s = net.forward(&calibrated_input(n, 1.5, 1.0, 16)).unwrap();
    let d = s.derivative(net.spec().activation, 1);
    let wd = net.layer_jacobian(&s, 1, JacobianForm::WD).unwrap();
    let dw = net.weight(2).scale_rows(&d);
    for k in 1..=4 {
        let (a, b) = (trace_power(&wd, k), trace_power(&dw, k));
        assert!(
            (a - b).abs() <= 1e-10 * a.abs().max(1.0),
            "k {k}: {a} vs {b}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn streaming_equals_stored(alpha in 1.0f64..=2.0, dw in 0.1f64..4.0, db in 0.0f64..0.5, seed in any::<u64>()) {
        let spec = NetworkSpec::new(alpha, dw, db, 20, 3).unwrap();
        let x0 = calibrated_input(20, alpha, 1.0, seed ^ 1);
        let stored = Network::init(spec, seed).unwrap().output(&x0).unwrap();
        let streamed = forward_streaming(&spec, seed, &x0, |_, _| {}).unwrap();
        prop_assert_eq!(stored, streamed);
    }

    #[test]
    fn zero_input_without_bias_is_fixed(alpha in 1.0f64..=2.0, dw in 0.1f64..4.0, seed in any::<u64>()) {
        let net = Network::init(NetworkSpec::new(alpha, dw, 0.0, 15, 4).unwrap(), seed).unwrap();
        let s = net.forward(&[0.0; 15]).unwrap();
        prop_assert!(s.h.iter().chain(&s.x).flatten().all(|&v| v == 0.0));
    }
}
