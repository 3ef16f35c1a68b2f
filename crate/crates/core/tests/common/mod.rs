#![allow(dead_code)]

use hjent::hjnet::{EpochTerms, NetConfig, NetState, Transfer};
use hjent::qboltz::DensityMatrix;
use hjent::witnesses::linalg::{c, kron2, pauli_y, Mat2, Mat4, C64};
use nalgebra::{DMatrix, DVector, Matrix4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_config(rng: &mut ChaCha8Rng, n: usize) -> NetConfig {
    let transfer = match rng.random_range(0..3) {
        0 => Transfer::Tanh,
        1 => Transfer::Logistic,
        _ => Transfer::Identity,
    };
    let mut v = |lo: f64, hi: f64| (0..n).map(|_| rng.random_range(lo..hi)).collect::<Vec<_>>();
    NetConfig {
        n_neurons: n,
        transfer,
        external_input: v(-1.0, 1.0),
        thresholds: v(-0.5, 0.5),
        target: v(-0.8, 0.8),
        lambda: 0.5 + rng.random_range(0.0..1.5),
        omega: 0.2 + rng.random_range(0.0..2.0),
        ..NetConfig::default()
    }
}

pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> NetState {
    let mut r = |lo: f64, hi: f64| rng.random_range(lo..hi);
    NetState {
        t: 0.0,
        y: DVector::from_fn(n, |_, _| r(-1.0, 1.0)),
        delta: DVector::from_fn(n, |_, _| r(-1.0, 1.0)),
        w: DMatrix::from_fn(n, n, |_, _| r(-1.0, 1.0)),
        m: DMatrix::from_fn(n, n, |_, _| r(-1.0, 1.0)),
    }
}

pub fn random_terms(rng: &mut ChaCha8Rng, n: usize) -> EpochTerms {
    EpochTerms {
        w_offset: DMatrix::from_fn(n, n, |_, _| rng.random_range(-0.3..0.3)),
        kinetic_multiplicity: 1.0,
        buffered_kinetic: rng.random_range(0.0..2.0),
    }
}

/// GG†/Tr with G a 4×4 Gaussian matrix.
pub fn ginibre(rng: &mut ChaCha8Rng, real: bool) -> DensityMatrix {
    let g = Mat4::from_fn(|_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = if real {
            0.0
        } else {
            rng.sample(StandardNormal)
        };
        c(re, im)
    });
    let m = g * g.adjoint();
    let tr = m.trace();
    DensityMatrix::new(m / tr).unwrap()
}

pub fn random_unitary2(rng: &mut ChaCha8Rng) -> Mat2 {
    let (a, b, g, d): (f64, f64, f64, f64) =
        (rng.random(), rng.random(), rng.random(), rng.random());
    let (a, b, g, d) = (a * 6.3, b * 6.3, g * 6.3, d * 1.6);
    let e = |x: f64| C64::from_polar(1.0, x);
    Mat2::new(
        e(a) * e(b) * d.cos(),
        e(a) * e(g) * d.sin(),
        -e(a) * e(-g) * d.sin(),
        e(a) * e(-b) * d.cos(),
    )
}

pub fn random_pure_product(rng: &mut ChaCha8Rng) -> DensityMatrix {
    let e0 = Mat2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
    let u = random_unitary2(rng);
    let v = random_unitary2(rng);
    DensityMatrix::product(&(u * e0 * u.adjoint()), &(v * e0 * v.adjoint())).unwrap()
}

/// max(0, λ1-λ2-λ3-λ4) with λ² the eigenvalues of ρρ̃, for real ρ, via a real Schur form.
pub fn direct_concurrence(rho: &DensityMatrix) -> f64 {
    let yy = kron2(&pauli_y(), &pauli_y());
    let tilde = yy * rho.matrix().conjugate() * yy;
    let prod = rho.matrix() * tilde;
    assert!(prod.iter().all(|z| z.im.abs() < 1e-14));
    let real: Matrix4<f64> = prod.map(|z| z.re);
    let mut lambdas: Vec<f64> = real
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re.max(0.0).sqrt())
        .collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    (lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0)
}
