//! Dense helpers on top of nalgebra used by the certificates.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn symmetric_part(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Eigenvalues of the symmetric part, ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = symmetric_part(a)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

pub fn lambda_min_sym(a: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(a)[0]
}

pub fn lambda_max_sym(a: &DMatrix<f64>) -> f64 {
    *sym_eigenvalues(a).last().expect("non-empty matrix")
}

pub fn sigma_max(a: &DMatrix<f64>) -> f64 {
    a.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Largest real part among the eigenvalues of a general square matrix.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Solves `P A + Aᵀ P = −H` through the Kronecker form.
pub fn lyapunov(a: &DMatrix<f64>, h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || h.nrows() != n || h.ncols() != n {
        return Err(Error::InvalidParams("lyapunov: dimension mismatch".into()));
    }
    let eye = DMatrix::<f64>::identity(n, n);
    // column-major vec: vec(P A) = (Aᵀ ⊗ I) vec(P), vec(Aᵀ P) = (I ⊗ Aᵀ) vec(P)
    let big = a.transpose().kronecker(&eye) + eye.kronecker(&a.transpose());
    let rhs = -DMatrix::from_column_slice(n * n, 1, h.as_slice());
    let sol = big.lu().solve(&rhs).ok_or_else(|| {
        Error::InvalidParams("lyapunov: singular operator (A not Hurwitz?)".into())
    })?;
    let p = DMatrix::from_column_slice(n, n, sol.as_slice());
    Ok(symmetric_part(&p))
}
