//! Small dense complex linear algebra for two-qubit states.

use nalgebra::{DMatrix, Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

const EIG_MAX_ITER: usize = 10_000;

/// Eigenvalues must not fall below this before [`matrix_sqrt_psd`] refuses the input.
pub const PSD_CLIP_TOL: f64 = 1e-10;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn pauli_x() -> Mat2 {
    Mat2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

pub fn pauli_y() -> Mat2 {
    Mat2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0))
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
}

pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = Mat4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn commutator(a: &Mat4, b: &Mat4) -> Mat4 {
    a * b - b * a
}

/// Largest entry of |m - m†|.
pub fn hermiticity_defect<R, C, S>(m: &nalgebra::Matrix<C64, R, C, S>) -> f64
where
    R: nalgebra::Dim,
    C: nalgebra::Dim,
    S: nalgebra::RawStorage<C64, R, C>,
{
    let (rows, cols) = m.shape();
    let mut worst = 0.0_f64;
    for i in 0..rows {
        for j in 0..cols {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn to_dyn(m: &Mat4) -> DMatrix<C64> {
    DMatrix::from_iterator(4, 4, m.iter().copied())
}

pub fn from_dyn(m: &DMatrix<C64>) -> Mat4 {
    assert_eq!(m.shape(), (4, 4));
    Mat4::from_iterator(m.iter().copied())
}

fn dump(m: &DMatrix<C64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| format!("{:+.6e}{:+.6e}i", m[(i, j)].re, m[(i, j)].im))
            .collect();
        s.push_str(&row.join("  "));
        s.push('\n');
    }
    s
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues sorted descending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Columns are the eigenvectors, in the same order as `values`.
    pub vectors: DMatrix<C64>,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let n = self.values.len();
        let mut lambda = DMatrix::<C64>::zeros(n, n);
        for (i, &v) in self.values.iter().enumerate() {
            lambda[(i, i)] = c(v, 0.0);
        }
        &self.vectors * lambda * self.vectors.adjoint()
    }
}

/// Eigen-decomposition of a Hermitian matrix of dimension at most 4.
///
/// The input is symmetrised as (m + m†)/2 before decomposition, so a defect of
/// up to 1e-8 is tolerated; anything larger is rejected.
pub fn hermitian_eigs(m: &DMatrix<C64>) -> Result<HermitianEigen> {
    let n = m.nrows();
    if n != m.ncols() || n == 0 || n > 4 {
        return Err(Error::UnsupportedDimension(format!(
            "hermitian_eigs expects a square matrix up to 4x4, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let defect = hermiticity_defect(m);
    if defect > 1e-8 {
        return Err(Error::Numeric(format!(
            "matrix is not Hermitian (defect {defect:e})"
        )));
    }
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, EIG_MAX_ITER)
        .ok_or_else(|| Error::Eigen(dump(m)))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(HermitianEigen { values, vectors })
}

pub fn hermitian_eigs4(m: &Mat4) -> Result<HermitianEigen> {
    hermitian_eigs(&to_dyn(m))
}

/// Principal square root of a positive semidefinite matrix.
///
/// Eigenvalues in `[-PSD_CLIP_TOL, 0)` are clipped to zero; more negative
/// eigenvalues are an error.
pub fn matrix_sqrt_psd(m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let eig = hermitian_eigs(m)?;
    let n = eig.values.len();
    let mut root = DMatrix::<C64>::zeros(n, n);
    for (i, &v) in eig.values.iter().enumerate() {
        if v < -PSD_CLIP_TOL {
            return Err(Error::Numeric(format!(
                "matrix is not positive semidefinite (eigenvalue {v:e})"
            )));
        }
        root[(i, i)] = c(v.max(0.0).sqrt(), 0.0);
    }
    Ok(&eig.vectors * root * eig.vectors.adjoint())
}

pub fn matrix_sqrt_psd4(m: &Mat4) -> Result<Mat4> {
    Ok(from_dyn(&matrix_sqrt_psd(&to_dyn(m))?))
}
