//! Random fully connected networks with i.i.d. symmetric stable weights.
//!
//! Layer `l = 1..=L` computes `h^l = W^l x^(l-1) + b^l`, `x^l = phi(h^l)`,
//! with `W^l_ij ~ S_alpha((D_w / 2N)^(1/alpha))` and
//! `b^l_i ~ S_alpha((D_b / 2)^(1/alpha))`. Row `i` of `W^l` is drawn from its
//! own stream seeded by `(seed, l, i)`, so a layer can be regenerated row by
//! row without storing it.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::math::{abs, powf, tanh};
use rand_distr::{Distribution, StandardNormal};

use crate::rng::{indexed_seed, stream};
use crate::stable::sample_standard_symmetric;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Activation {
    #[default]
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => tanh(x),
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = tanh(x);
                1.0 - t * t
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkSpec {
    pub alpha: f64,
    pub dw: f64,
    pub db: f64,
    pub width: usize,
    pub depth: usize,
    #[cfg_attr(feature = "serde", serde(default))]
    pub activation: Activation,
}

impl NetworkSpec {
    pub fn new(alpha: f64, dw: f64, db: f64, width: usize, depth: usize) -> Result<Self> {
        let s = Self {
            alpha,
            dw,
            db,
            width,
            depth,
            activation: Activation::Tanh,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1.0..=2.0).contains(&self.alpha) {
            return Err(Error::Domain("network alpha must lie in [1, 2]"));
        }
        if !(self.dw > 0.0 && self.dw.is_finite()) {
            return Err(Error::Domain("dw must be positive"));
        }
        if !(self.db >= 0.0 && self.db.is_finite()) {
            return Err(Error::Domain("db must be non-negative"));
        }
        if self.width == 0 || self.depth == 0 {
            return Err(Error::Domain("width and depth must be at least 1"));
        }
        Ok(())
    }

    /// Stable scale of the weight entries, `(D_w / 2N)^(1/alpha)`.
    pub fn weight_scale(&self) -> f64 {
        powf(self.dw / (2.0 * self.width as f64), 1.0 / self.alpha)
    }

    /// Stable scale of the bias entries, `(D_b / 2)^(1/alpha)`.
    pub fn bias_scale(&self) -> f64 {
        powf(self.db / 2.0, 1.0 / self.alpha)
    }

    /// Fills `out` with row `i` of `W^l` (`l` is 1-based).
    pub fn weight_row(&self, seed: u64, l: usize, i: usize, out: &mut [f64]) {
        let mut rng = stream(indexed_seed(seed, "weight", &[l as u64, i as u64]));
        let scale = self.weight_scale();
        for w in out.iter_mut() {
            *w = scale * sample_standard_symmetric(self.alpha, &mut rng);
        }
    }

    /// Bias vector `b^l`; exactly zero when `D_b = 0`.
    pub fn bias(&self, seed: u64, l: usize) -> Vec<f64> {
        if self.db == 0.0 {
            return vec![0.0; self.width];
        }
        let mut rng = stream(indexed_seed(seed, "bias", &[l as u64]));
        let scale = self.bias_scale();
        (0..self.width)
            .map(|_| scale * sample_standard_symmetric(self.alpha, &mut rng))
            .collect()
    }

    /// Weight matrix `W^l` generated from its row streams.
    pub fn weight_matrix(&self, seed: u64, l: usize) -> Matrix {
        let n = self.width;
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            self.weight_row(seed, l, i, m.row_mut(i));
        }
        m
    }
}

/// Which layerwise Jacobian to form: `D^l W^l` or `W^(l+1) D^l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum JacobianForm {
    DW,
    WD,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerState {
    /// `h[l - 1]` is `h^l`.
    pub h: Vec<Vec<f64>>,
    /// `x[l]` is `x^l`; `x[0]` is the input.
    pub x: Vec<Vec<f64>>,
}

impl LayerState {
    /// `phi'(h^l)`, the diagonal of `D^l`.
    pub fn derivative(&self, activation: Activation, l: usize) -> Vec<f64> {
        self.h[l - 1]
            .iter()
            .map(|&v| activation.derivative(v))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    spec: NetworkSpec,
    seed: u64,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
}

impl Network {
    pub fn init(spec: NetworkSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let weights = (1..=spec.depth)
            .map(|l| spec.weight_matrix(seed, l))
            .collect();
        let biases = (1..=spec.depth).map(|l| spec.bias(seed, l)).collect();
        Ok(Self {
            spec,
            seed,
            weights,
            biases,
        })
    }

    /// Assembles a network from externally supplied parameters.
    pub fn from_parts(
        spec: NetworkSpec,
        seed: u64,
        weights: Vec<Matrix>,
        biases: Vec<Vec<f64>>,
    ) -> Result<Self> {
        spec.validate()?;
        let n = spec.width;
        if weights.len() != spec.depth {
            return Err(Error::Shape {
                expected: spec.depth,
                got: weights.len(),
            });
        }
        if biases.len() != spec.depth {
            return Err(Error::Shape {
                expected: spec.depth,
                got: biases.len(),
            });
        }
        for w in &weights {
            if w.rows() != n || w.cols() != n {
                return Err(Error::Shape {
                    expected: n * n,
                    got: w.rows() * w.cols(),
                });
            }
        }
        for b in &biases {
            if b.len() != n {
                return Err(Error::Shape {
                    expected: n,
                    got: b.len(),
                });
            }
        }
        Ok(Self {
            spec,
            seed,
            weights,
            biases,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `W^l`, 1-based.
    pub fn weight(&self, l: usize) -> &Matrix {
        &self.weights[l - 1]
    }

    /// `b^l`, 1-based.
    pub fn bias(&self, l: usize) -> &[f64] {
        &self.biases[l - 1]
    }

    pub fn forward(&self, x0: &[f64]) -> Result<LayerState> {
        let n = self.spec.width;
        if x0.len() != n {
            return Err(Error::Shape {
                expected: n,
                got: x0.len(),
            });
        }
        let act = self.spec.activation;
        let mut h = Vec::with_capacity(self.spec.depth);
        let mut x = Vec::with_capacity(self.spec.depth + 1);
        x.push(x0.to_vec());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            let prev = &x[x.len() - 1];
            let hl: Vec<f64> = (0..n).map(|i| dot(w.row(i), prev) + b[i]).collect();
            x.push(hl.iter().map(|&v| act.apply(v)).collect());
            h.push(hl);
        }
        Ok(LayerState { h, x })
    }

    /// Final-layer activations only.
    pub fn output(&self, x0: &[f64]) -> Result<Vec<f64>> {
        let mut state = self.forward(x0)?;
        Ok(state.x.pop().unwrap_or_default())
    }

    pub fn layer_jacobian(
        &self,
        state: &LayerState,
        l: usize,
        form: JacobianForm,
    ) -> Result<Matrix> {
        let depth = self.spec.depth;
        let act = self.spec.activation;
        match form {
            JacobianForm::DW => {
                if l == 0 || l > depth {
                    return Err(Error::Index {
                        index: l,
                        limit: depth,
                    });
                }
                Ok(self.weight(l).scale_rows(&state.derivative(act, l)))
            }
            JacobianForm::WD => {
                if l == 0 || l >= depth {
                    return Err(Error::Index {
                        index: l,
                        limit: depth.saturating_sub(1),
                    });
                }
                Ok(self.weight(l + 1).scale_cols(&state.derivative(act, l)))
            }
        }
    }

    /// `dx^L / dx^0 = D^L W^L ... D^1 W^1`.
    pub fn full_jacobian(&self, state: &LayerState) -> Result<Matrix> {
        let mut j = self.layer_jacobian(state, 1, JacobianForm::DW)?;
        for l in 2..=self.spec.depth {
            j = self
                .layer_jacobian(state, l, JacobianForm::DW)?
                .matmul(&j)?;
        }
        Ok(j)
    }
}

/// Forward pass that regenerates every weight row on demand instead of
/// storing the network; `observe(l, h^l)` is called after each layer. Gives
/// the same numbers as [`Network::forward`] on `Network::init(spec, seed)`.
pub fn forward_streaming<F: FnMut(usize, &[f64])>(
    spec: &NetworkSpec,
    seed: u64,
    x0: &[f64],
    mut observe: F,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.width;
    if x0.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: x0.len(),
        });
    }
    let mut x = x0.to_vec();
    let mut row = vec![0.0; n];
    let mut h = vec![0.0; n];
    for l in 1..=spec.depth {
        let b = spec.bias(seed, l);
        for i in 0..n {
            spec.weight_row(seed, l, i, &mut row);
            h[i] = dot(&row, &x) + b[i];
        }
        observe(l, &h);
        for (xi, &hi) in x.iter_mut().zip(&h) {
            *xi = spec.activation.apply(hi);
        }
    }
    Ok(x)
}

/// `(1/N) sum |x_i|^alpha`, the fluctuation level of an activity vector.
pub fn activity_moment(x: &[f64], alpha: f64) -> f64 {
    x.iter().map(|&v| powf(abs(v), alpha)).sum::<f64>() / x.len() as f64
}

/// Isotropic Gaussian direction rescaled so that its activity moment is
/// exactly `q0`.
pub fn calibrated_input(n: usize, alpha: f64, q0: f64, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed);
    let mut x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let m = activity_moment(&x, alpha);
    if m > 0.0 {
        let c = powf(q0 / m, 1.0 / alpha);
        x.iter_mut().for_each(|v| *v *= c);
    }
    x
}

/// Input whose first-layer preactivations sit at fluctuation level `q`:
/// `h^1 = W x^0 + b` is stable at level `D_w m + D_b` when `m` is the input
/// activity moment, so the moment is set to `(q - D_b) / D_w`.
pub fn fixed_point_input(spec: &NetworkSpec, q: f64, seed: u64) -> Vec<f64> {
    let m = ((q - spec.db) / spec.dw).max(0.0);
    calibrated_input(spec.width, spec.alpha, m, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_point_input_inverts_the_first_step() {
        let spec = NetworkSpec::new(1.4, 2.5, 0.3, 200, 1).unwrap();
        let x = fixed_point_input(&spec, 1.8, 3);
        assert!((spec.dw * activity_moment(&x, 1.4) + spec.db - 1.8).abs() < 1e-12);
        assert!(fixed_point_input(&spec, 0.1, 3).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn calibrated_input_hits_moment() {
        for alpha in [1.0, 1.3, 2.0] {
            let x = calibrated_input(300, alpha, 0.7, 5);
            assert!((activity_moment(&x, alpha) - 0.7).abs() < 1e-12);
        }
    }

    fn small(alpha: f64, db: f64) -> Network {
        Network::init(NetworkSpec::new(alpha, 1.3, db, 24, 3).unwrap(), 5).unwrap()
    }

    #[test]
    fn spec_domain() {
        assert!(NetworkSpec::new(0.9, 1.0, 0.0, 4, 1).is_err());
        assert!(NetworkSpec::new(1.5, 0.0, 0.0, 4, 1).is_err());
        assert!(NetworkSpec::new(1.5, 1.0, -1.0, 4, 1).is_err());
        assert!(NetworkSpec::new(1.5, 1.0, 0.0, 0, 1).is_err());
    }

    #[test]
    fn zero_input_without_bias_stays_zero() {
        let net = small(1.5, 0.0);
        let s = net.forward(&[0.0; 24]).unwrap();
        assert!(s.h.iter().chain(&s.x).all(|v| v.iter().all(|&x| x == 0.0)));
        assert!((1..=3).all(|l| net.bias(l).iter().all(|&b| b == 0.0)));
    }

    #[test]
    fn streaming_matches_stored_network() {
        let net = small(1.2, 0.3);
        let x0: Vec<f64> = (0..24).map(|i| (i as f64 * 0.37).sin()).collect();
        let state = net.forward(&x0).unwrap();
        let mut seen = Vec::new();
        let out = forward_streaming(net.spec(), 5, &x0, |l, h| seen.push((l, h.to_vec()))).unwrap();
        assert_eq!(out, state.x[3]);
        for (l, h) in seen {
            assert_eq!(h, state.h[l - 1]);
        }
    }

    #[test]
    fn jacobian_forms_and_ranges() {
        let net = small(1.5, 0.0);
        let s = net.forward(&[0.0; 24]).unwrap();
        // tanh'(0) = 1 so D^l W^l = W^l
        assert_eq!(
            &net.layer_jacobian(&s, 2, JacobianForm::DW).unwrap(),
            net.weight(2)
        );
        assert!(net.layer_jacobian(&s, 0, JacobianForm::DW).is_err());
        assert!(net.layer_jacobian(&s, 4, JacobianForm::DW).is_err());
        assert!(net.layer_jacobian(&s, 3, JacobianForm::WD).is_err());
        assert!(net.layer_jacobian(&s, 2, JacobianForm::WD).is_ok());
    }

    #[test]
    fn shape_errors() {
        let net = small(1.5, 0.0);
        assert!(matches!(net.forward(&[0.0; 3]), Err(Error::Shape { .. })));
        let spec = *net.spec();
        assert!(Network::from_parts(spec, 0, vec![], vec![]).is_err());
    }
}
