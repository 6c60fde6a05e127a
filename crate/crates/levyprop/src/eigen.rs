//! Dense nonsymmetric eigendecomposition through faer.

use faer::{c64, Mat};
use levyprop_core::{
    Complex64, Eigensolver, Error, JacobianForm, LayerState, Matrix, Network, Result,
};

#[derive(Debug, Clone, Copy, Default)]
pub struct FaerEigen;

fn to_faer(m: &Matrix) -> Mat<f64> {
    Mat::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j))
}

fn cx(z: c64) -> Complex64 {
    Complex64::new(z.re, z.im)
}

impl Eigensolver for FaerEigen {
    fn eigenvalues(&self, m: &Matrix) -> Result<Vec<Complex64>> {
        let values = to_faer(m).eigenvalues().map_err(|_| Error::Numerical {
            what: "eigenvalues",
            residual: f64::NAN,
        })?;
        Ok(values.into_iter().map(cx).collect())
    }

    fn eigenpairs(&self, m: &Matrix, visit: &mut dyn FnMut(Complex64, &[Complex64])) -> Result<()> {
        let eig = to_faer(m).eigen().map_err(|_| Error::Numerical {
            what: "eigendecomposition",
            residual: f64::NAN,
        })?;
        let (s, u) = (eig.S(), eig.U());
        let mut v = vec![Complex64::new(0.0, 0.0); u.nrows()];
        for k in 0..u.ncols() {
            for (i, x) in v.iter_mut().enumerate() {
                *x = cx(u[(i, k)]);
            }
            visit(cx(s[k]), &v);
        }
        Ok(())
    }
}

/// Eigenvalues of the layerwise Jacobian at layer `l`.
pub fn empirical_spectrum(
    net: &Network,
    state: &LayerState,
    l: usize,
    form: JacobianForm,
) -> Result<Vec<Complex64>> {
    FaerEigen.eigenvalues(&net.layer_jacobian(state, l, form)?)
}
