//! Dense SVD and symmetric eigensolvers on nalgebra storage.
//!
//! nalgebra's own SVD loses several digits on clustered singular values
//! (relative reconstruction errors near 1e-9 on small operator matrices), which
//! is visible in the Penrose relations; these routines delegate the
//! decompositions to faer instead.

use faer::{Mat, Side};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn to_faer(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| *m.get(i, j))
}

/// Thin SVD `m = U diag(s) Vᵀ` with `s` nonincreasing.
pub(crate) struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub(crate) fn svd(m: &DMatrix<f64>) -> Result<Svd> {
    let f = to_faer(m).thin_svd().map_err(|_| Error::NoConvergence("SVD"))?;
    let s = f.S().column_vector();
    Ok(Svd {
        u: from_faer(f.U()),
        s: (0..s.nrows()).map(|i| *s.get(i)).collect(),
        v: from_faer(f.V()),
    })
}

/// Singular values in nonincreasing order.
pub(crate) fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    to_faer(m).singular_values().map_err(|_| Error::NoConvergence("SVD"))
}

/// Eigenpairs of the symmetric part of `m`, eigenvalues nondecreasing.
pub(crate) fn sym_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let sym = (m + m.transpose()) * 0.5;
    let f = to_faer(&sym)
        .self_adjoint_eigen(Side::Lower)
        .map_err(|_| Error::NoConvergence("symmetric eigensolver"))?;
    let s = f.S().column_vector();
    Ok(((0..s.nrows()).map(|i| *s.get(i)).collect(), from_faer(f.U())))
}

/// Eigenvalues of the symmetric part of `m`, nondecreasing.
pub(crate) fn sym_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let sym = (m + m.transpose()) * 0.5;
    to_faer(&sym)
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|_| Error::NoConvergence("symmetric eigensolver"))
}
