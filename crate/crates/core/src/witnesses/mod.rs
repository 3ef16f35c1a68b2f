//! Entanglement witnesses for two-qubit states: Wootters concurrence, the
//! pure-state concurrence and the negativity, plus the partial trace,
//! partial transpose and spin-flip they are built from.

pub mod linalg;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qboltz::DensityMatrix;
use linalg::{
    c, from_dyn, hermitian_eigs4, kron2, matrix_sqrt_psd, matrix_sqrt_psd4, pauli_y, to_dyn, Mat2,
    Mat4,
};

/// Eigenvalues of rho inside `[-WOOTTERS_CLIP, 0)` are treated as zero.
pub const WOOTTERS_CLIP: f64 = 1e-10;

/// Minimum purity accepted by [`concurrence_pure`].
pub const PURE_STATE_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

pub fn partial_trace(rho: &DensityMatrix, keep: Subsystem) -> Mat2 {
    let m = rho.matrix();
    Mat2::from_fn(|i, j| match keep {
        Subsystem::A => m[(2 * i, 2 * j)] + m[(2 * i + 1, 2 * j + 1)],
        Subsystem::B => m[(i, j)] + m[(2 + i, 2 + j)],
    })
}

/// Transpose of the indices belonging to `subsystem`.
pub fn partial_transpose(rho: &DensityMatrix, subsystem: Subsystem) -> Mat4 {
    partial_transpose_matrix(rho.matrix(), subsystem)
}

fn partial_transpose_matrix(m: &Mat4, subsystem: Subsystem) -> Mat4 {
    Mat4::from_fn(|row, col| {
        let (a, b) = (row / 2, row % 2);
        let (a2, b2) = (col / 2, col % 2);
        match subsystem {
            Subsystem::B => m[(2 * a + b2, 2 * a2 + b)],
            Subsystem::A => m[(2 * a2 + b, 2 * a + b2)],
        }
    })
}

/// sqrt(2 (1 - Tr rho_A^2)), valid only for pure states.
pub fn concurrence_pure(rho: &DensityMatrix) -> Result<f64> {
    let purity = rho.purity();
    if purity < 1.0 - PURE_STATE_TOL {
        return Err(Error::Purity { purity });
    }
    let reduced = partial_trace(rho, Subsystem::A);
    let reduced_purity = (reduced * reduced).trace().re;
    Ok((2.0 * (1.0 - reduced_purity)).max(0.0).sqrt().min(1.0))
}

/// Wootters spin flip: (σy⊗σy) ρ* (σy⊗σy).
pub fn spin_flip(rho: &DensityMatrix) -> Mat4 {
    spin_flip_matrix(rho.matrix())
}

fn spin_flip_matrix(m: &Mat4) -> Mat4 {
    let yy = kron2(&pauli_y(), &pauli_y());
    yy * m.map(|z| z.conj()) * yy
}

/// The four Wootters values in descending order: square roots of the
/// eigenvalues of rho·rho~, computed as the singular values of
/// tau = Psi^T (σy⊗σy) Psi, where the columns of Psi are sqrt(p_i) v_i
/// from the eigendecomposition of rho.
pub fn wootters_lambdas(rho: &DensityMatrix) -> Result<[f64; 4]> {
    let eig = hermitian_eigs4(rho.matrix())?;
    if let Some(&p) = eig.values.iter().find(|&&p| p < -WOOTTERS_CLIP) {
        return Err(Error::Numeric(format!(
            "density matrix has eigenvalue {p:e}; input is not a physical state"
        )));
    }
    let psi = Mat4::from_fn(|i, k| eig.vectors[(i, k)] * c(eig.values[k].max(0.0).sqrt(), 0.0));
    let yy = kron2(&pauli_y(), &pauli_y());
    let tau = psi.transpose() * yy * psi;
    let sv = tau
        .try_svd(false, false, f64::EPSILON, 500)
        .ok_or_else(|| Error::Eigen(format!("{tau}")))?
        .singular_values;
    let mut out = [sv[0], sv[1], sv[2], sv[3]];
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

fn from_lambdas(l: &[f64; 4]) -> f64 {
    (l[0] - l[1] - l[2] - l[3]).clamp(0.0, 1.0)
}

/// Wootters concurrence max(0, λ1 - λ2 - λ3 - λ4).
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    Ok(from_lambdas(&wootters_lambdas(rho)?))
}

/// Concurrence from the eigenvalues of sqrt(sqrt(rho) rho~ sqrt(rho)) taken
/// literally, with an explicit outer matrix square root. Loses about half
/// the digits on rank-deficient states.
pub fn concurrence_nested_sqrt(rho: &DensityMatrix) -> Result<f64> {
    let root = matrix_sqrt_psd4(rho.matrix())?;
    let inner = root * spin_flip(rho) * root;
    let inner = (inner + inner.adjoint()) * c(0.5, 0.0);
    let outer = from_dyn(&matrix_sqrt_psd(&to_dyn(&inner))?);
    let eig = hermitian_eigs4(&outer)?;
    let l = [eig.values[0], eig.values[1], eig.values[2], eig.values[3]];
    Ok(from_lambdas(&l))
}

/// Spectrum of the partial transpose over B, descending.
pub fn partial_transpose_spectrum(rho: &DensityMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eigs4(&partial_transpose(rho, Subsystem::B))?.values)
}

/// (||rho^{T_B}||_1 - 1) / 2.
pub fn negativity(rho: &DensityMatrix) -> Result<f64> {
    let spectrum = partial_transpose_spectrum(rho)?;
    let trace_norm: f64 = spectrum.iter().map(|v| v.abs()).sum();
    Ok(((trace_norm - 1.0) / 2.0).clamp(0.0, 0.5))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessReport {
    pub t: f64,
    pub concurrence: f64,
    pub negativity: f64,
    pub wootters_lambdas: [f64; 4],
    pub pt_min_eigenvalue: f64,
    pub purity: f64,
}

impl WitnessReport {
    pub fn compute(t: f64, rho: &DensityMatrix) -> Result<Self> {
        let lambdas = wootters_lambdas(rho)?;
        let pt = partial_transpose_spectrum(rho)?;
        let trace_norm: f64 = pt.iter().map(|v| v.abs()).sum();
        Ok(Self {
            t,
            concurrence: from_lambdas(&lambdas),
            negativity: ((trace_norm - 1.0) / 2.0).clamp(0.0, 0.5),
            wootters_lambdas: lambdas,
            pt_min_eigenvalue: pt[3],
            purity: rho.purity().clamp(0.0, 1.0),
        })
    }

    pub const CSV_HEADER: &'static str =
        "t,concurrence,negativity,lambda1,lambda2,lambda3,lambda4,pt_min_eig,purity";

    pub fn csv_row(&self) -> String {
        let l = &self.wootters_lambdas;
        [
            self.t,
            self.concurrence,
            self.negativity,
            l[0],
            l[1],
            l[2],
            l[3],
            self.pt_min_eigenvalue,
            self.purity,
        ]
        .iter()
        .map(|&v| crate::csvio::num(v))
        .collect::<Vec<_>>()
        .join(",")
    }
}
