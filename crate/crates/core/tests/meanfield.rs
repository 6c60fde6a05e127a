use levyprop_core::meanfield::{fixed_point, ordered_transition, q_map, MeanFieldMap};
use levyprop_core::Activation;
use proptest::prelude::*;

// Physicists' Gauss-Hermite nodes by Newton iteration on the orthonormal
// recurrence; weights integrate exp(-x^2).
fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let (mut x, mut w) = (vec![0.0; n], vec![0.0; n]);
    let m = n.div_ceil(2);
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * (n as f64).powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

// E tanh^2(sqrt(q) Z), Z standard normal.
fn gaussian_length_map(q: f64) -> f64 {
    let (x, w) = gauss_hermite(120);
    let s: f64 = x
        .iter()
        .zip(&w)
        .map(|(&xi, &wi)| wi * (2f64.sqrt() * q.sqrt() * xi).tanh().powi(2))
        .sum();
    s / std::f64::consts::PI.sqrt()
}

#[test]
fn gauss_hermite_oracle_is_sound() {
    let (x, w) = gauss_hermite(120);
    let m0: f64 = w.iter().sum();
    let m2: f64 = x.iter().zip(&w).map(|(a, b)| a * a * b).sum();
    assert!((m0 - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    assert!((m2 - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    // frozen from the oracle
    assert!(
        (gaussian_length_map(1.0) - 0.394_294_4).abs() < 1e-6,
        "{}",
        gaussian_length_map(1.0)
    );
}

#[test]
fn gaussian_map_matches_hermite_oracle() {
    for &q in &[0.1, 0.5, 1.0, 3.0] {
        let m = q_map(q, 2.0, 1.0, 0.0, Activation::Tanh).unwrap();
        let o = gaussian_length_map(q);
        assert!((m - o).abs() < 1e-4, "q {q}: {m} vs {o}");
    }
    // the dip of tanh^2 is too narrow for the Hermite rule at q = 10;
    // value frozen from adaptive quadrature
    let m = q_map(10.0, 2.0, 1.0, 0.0, Activation::Tanh).unwrap();
    assert!((m - 0.757_266_28).abs() < 1e-6, "{m}");
}

#[test]
fn gaussian_fixed_points() {
    let ordered = fixed_point(2.0, 0.5, 0.0, 1.0, 1e-12, 10_000).unwrap();
    assert!(ordered.qstar < 1e-10);

    // damped iteration of the oracle map
    let mut q = 1.0;
    for _ in 0..2000 {
        q = 0.5 * q + 0.5 * 2.0 * gaussian_length_map(q);
    }
    let chaotic = fixed_point(2.0, 2.0, 0.0, 1.0, 1e-12, 10_000).unwrap();
    assert!(chaotic.qstar > 0.0);
    assert!((chaotic.qstar - q).abs() < 1e-4, "{} vs {q}", chaotic.qstar);
}

#[test]
fn first_step_is_affine() {
    for &(a, dw, db, q0) in &[
        (1.2, 1.7, 0.3, 0.4),
        (2.0, 0.5, 0.0, 2.0),
        (1.0, 3.0, 1.0, 0.0),
    ] {
        let t = fixed_point(a, dw, db, q0, 1e-8, 1000).unwrap();
        assert_eq!(t.q[0], q0);
        assert_eq!(t.q[1], dw * q0 + db);
    }
}

#[test]
fn transition_line() {
    let alphas = [1.0, 1.2, 1.5, 1.8, 2.0];
    let dw: Vec<f64> = alphas
        .iter()
        .map(|&a| ordered_transition(a, 0.0, 0.01).unwrap())
        .collect();
    // frozen from a bisection run
    let frozen = [0.51596, 0.56360, 0.66332, 0.82949, 1.01984];
    for (d, f) in dw.iter().zip(&frozen) {
        assert!((d - f).abs() < 2e-4, "{d} vs {f}");
    }
    assert!(dw.windows(2).all(|p| p[0] < p[1]));
    assert!((dw[4] - 1.0).abs() <= 0.05);
}

#[test]
fn gaussian_transition_tends_to_one() {
    let coarse = ordered_transition(2.0, 0.0, 0.01).unwrap();
    let fine = ordered_transition(2.0, 0.0, 0.001).unwrap();
    assert!((fine - 1.0).abs() < (coarse - 1.0).abs());
    assert!((fine - 1.0).abs() < 5e-3, "{fine}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn map_is_monotone(alpha in 1.0f64..=2.0, dw in 0.1f64..5.0, db in 0.0f64..1.0, q in 0.0f64..20.0, dq in 0.0f64..5.0) {
        let m = MeanFieldMap::new(alpha, Activation::Tanh).unwrap();
        let a = m.q_map(q, dw, db).unwrap();
        let b = m.q_map(q + dq, dw, db).unwrap();
        prop_assert!(a <= b + 1e-12);
        prop_assert!(a >= db && a <= dw + db);
    }
}
