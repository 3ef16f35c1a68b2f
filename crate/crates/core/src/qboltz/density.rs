//! Two-qubit density matrices in the basis |00>, |01>, |10>, |11>.

use crate::error::{Error, Result};
use crate::witnesses::linalg::{c, hermitian_eigs4, hermiticity_defect, kron2, Mat2, Mat4, C64};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;

/// A physical two-qubit state: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(Mat4);

impl DensityMatrix {
    /// Validates all three invariants and returns the first violation found.
    pub fn new(m: Mat4) -> Result<Self> {
        let defect = hermiticity_defect(&m);
        if defect > HERMITIAN_TOL {
            return Err(Error::Numeric(format!(
                "density matrix is not Hermitian (defect {defect:e})"
            )));
        }
        let tr = m.trace();
        if (tr - c(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::Numeric(format!(
                "density matrix trace is {} {:+}i, expected 1",
                tr.re, tr.im
            )));
        }
        let min = hermitian_eigs4(&m)?.values[3];
        if min < -PSD_TOL {
            return Err(Error::Numeric(format!(
                "density matrix has negative eigenvalue {min:e}"
            )));
        }
        Ok(Self(m))
    }

    pub(crate) fn new_unchecked(m: Mat4) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn into_matrix(self) -> Mat4 {
        self.0
    }

    /// Row-major entries, the layout used by the CSV exports.
    pub fn row_major(&self) -> [C64; 16] {
        let mut out = [C64::default(); 16];
        for i in 0..4 {
            for j in 0..4 {
                out[4 * i + j] = self.0[(i, j)];
            }
        }
        out
    }

    pub fn from_row_major(entries: &[C64; 16]) -> Result<Self> {
        Self::new(Mat4::from_fn(|i, j| entries[4 * i + j]))
    }

    /// |psi><psi| for an (unnormalised) state vector.
    pub fn pure(psi: [C64; 4]) -> Self {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        let m = Mat4::from_fn(|i, j| psi[i] * psi[j].conj() / norm2);
        Self(m)
    }

    pub fn plus_plus() -> Self {
        Self::pure([c(1.0, 0.0); 4])
    }

    /// (|00> + |11>)/sqrt(2).
    pub fn bell_phi_plus() -> Self {
        Self::pure([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
    }

    pub fn maximally_mixed() -> Self {
        Self(Mat4::identity() * c(0.25, 0.0))
    }

    /// p |Phi+><Phi+| + (1 - p) I/4.
    pub fn werner(p: f64) -> Self {
        let bell = Self::bell_phi_plus().0;
        Self(bell * c(p, 0.0) + Mat4::identity() * c((1.0 - p) / 4.0, 0.0))
    }

    /// rho_A ⊗ rho_B for two single-qubit states.
    pub fn product(a: &Mat2, b: &Mat2) -> Result<Self> {
        Self::new(kron2(a, b))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    /// Tr rho^2.
    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.0)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(hermitian_eigs4(&self.0)?.values[3])
    }

    /// Diagnostics used by the physicality checks.
    pub fn physicality(&self) -> Result<Physicality> {
        Ok(Physicality {
            trace_error: (self.trace() - c(1.0, 0.0)).norm(),
            hermiticity_defect: self.hermiticity_defect(),
            min_eigenvalue: self.min_eigenvalue()?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Physicality {
    pub trace_error: f64,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_states_are_physical() {
        for rho in [
            DensityMatrix::plus_plus(),
            DensityMatrix::bell_phi_plus(),
            DensityMatrix::maximally_mixed(),
            DensityMatrix::werner(0.3),
        ] {
            let checked = DensityMatrix::new(*rho.matrix()).unwrap();
            assert!((checked.trace() - c(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_each_invariant() {
        let mut m = *DensityMatrix::maximally_mixed().matrix();
        m[(0, 1)] = c(0.1, 0.0);
        assert!(DensityMatrix::new(m).is_err());

        let m = Mat4::identity() * c(0.5, 0.0);
        assert!(DensityMatrix::new(m).is_err());

        let m = Mat4::from_diagonal(&nalgebra::Vector4::new(
            c(1.1, 0.0),
            c(-0.1, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ));
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn purity_of_pure_and_mixed() {
        assert!((DensityMatrix::bell_phi_plus().purity() - 1.0).abs() < 1e-14);
        assert!((DensityMatrix::maximally_mixed().purity() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn row_major_layout() {
        let rho = DensityMatrix::bell_phi_plus();
        let rm = rho.row_major();
        assert_eq!(rm[3], c(0.5, 0.0));
        assert_eq!(rm[12], c(0.5, 0.0));
        assert_eq!(DensityMatrix::from_row_major(&rm).unwrap(), rho);
    }
}
