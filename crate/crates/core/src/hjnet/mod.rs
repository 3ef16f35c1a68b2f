//! Hamilton–Jacobi formulation of network learning: the neuron model, the
//! error surface, the (extended) Hamiltonians and their characteristic flow.

mod config;
mod trajectory;

pub use config::{EpochCoupling, NetConfig, Transfer};
pub use trajectory::{
    accumulate_action, action_accumulate, epoch_shift, learning_run, wavefunction_from_action,
    Field, Trajectory,
};

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Dynamical snapshot of the characteristic system.
#[derive(Clone, Debug, PartialEq)]
pub struct NetState {
    pub t: f64,
    pub y: DVector<f64>,
    pub delta: DVector<f64>,
    pub w: DMatrix<f64>,
    pub m: DMatrix<f64>,
}

impl NetState {
    pub fn zeros(n: usize) -> Self {
        Self {
            t: 0.0,
            y: DVector::zeros(n),
            delta: DVector::zeros(n),
            w: DMatrix::zeros(n, n),
            m: DMatrix::zeros(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.y.iter().all(|v| v.is_finite())
            && self.delta.iter().all(|v| v.is_finite())
            && self.w.iter().all(|v| v.is_finite())
            && self.m.iter().all(|v| v.is_finite())
    }

    fn check_dims(&self, n: usize) -> Result<()> {
        let ok = self.y.len() == n
            && self.delta.len() == n
            && self.w.shape() == (n, n)
            && self.m.shape() == (n, n);
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "state dimensions do not match n_neurons = {n}"
            )))
        }
    }
}

/// Time derivative of a [`NetState`] (the `t` field is unused).
#[derive(Clone, Debug, PartialEq)]
pub struct StateDerivative {
    pub y: DVector<f64>,
    pub delta: DVector<f64>,
    pub w: DMatrix<f64>,
    pub m: DMatrix<f64>,
}

impl StateDerivative {
    fn is_finite(&self) -> bool {
        self.y
            .iter()
            .chain(self.delta.iter())
            .all(|v| v.is_finite())
            && self.w.iter().chain(self.m.iter()).all(|v| v.is_finite())
    }
}

/// Terms of the extended Hamiltonian that are read from the epoch buffer and
/// held fixed over one integration step.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochTerms {
    /// Subtracted from the live weights to give the weights seen by F.
    pub w_offset: DMatrix<f64>,
    /// Multiplicity of the live |M|^2 in the kinetic sum.
    pub kinetic_multiplicity: f64,
    /// Sum of |M(t - νT)|^2 over the buffered shifts ν ≥ 1.
    pub buffered_kinetic: f64,
}

impl EpochTerms {
    /// No shift, a single kinetic term: the plain autonomous system.
    pub fn identity(n: usize) -> Self {
        Self {
            w_offset: DMatrix::zeros(n, n),
            kinetic_multiplicity: 1.0,
            buffered_kinetic: 0.0,
        }
    }
}

fn check_len(name: &str, v: usize, n: usize) -> Result<()> {
    if v != n {
        return Err(Error::Config(format!(
            "{name} has length {v}, expected {n}"
        )));
    }
    Ok(())
}

fn activation(y: &DVector<f64>, w: &DMatrix<f64>, cfg: &NetConfig) -> DVector<f64> {
    let mut a = w * y;
    for i in 0..a.len() {
        a[i] += cfg.external_input[i] + cfg.thresholds[i];
    }
    a
}

/// F_i = (-y_i + f(Y_i + θ_i + Σ_j W_ij y_j)) / λ, with `w` the weights the
/// model sees (already shifted where required).
pub fn neuron_model_f(y: &DVector<f64>, w: &DMatrix<f64>, cfg: &NetConfig) -> Result<DVector<f64>> {
    let n = cfg.n_neurons;
    check_len("y", y.len(), n)?;
    if w.shape() != (n, n) {
        return Err(Error::Config(format!(
            "weight matrix is {}x{}, expected {n}x{n}",
            w.nrows(),
            w.ncols()
        )));
    }
    Ok(model_f(y, w, cfg))
}

fn model_f(y: &DVector<f64>, w: &DMatrix<f64>, cfg: &NetConfig) -> DVector<f64> {
    let a = activation(y, w, cfg);
    DVector::from_fn(y.len(), |i, _| {
        (-y[i] + cfg.transfer.value(a[i])) / cfg.lambda
    })
}

/// Mean squared deviation from the target.
pub fn error_e(y: &DVector<f64>, cfg: &NetConfig) -> Result<f64> {
    check_len("y", y.len(), cfg.n_neurons)?;
    Ok(mse(y, cfg))
}

fn mse(y: &DVector<f64>, cfg: &NetConfig) -> f64 {
    let n = y.len() as f64;
    y.iter()
        .zip(&cfg.target)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n
}

/// ∂E/∂y.
pub fn error_gradient(y: &DVector<f64>, cfg: &NetConfig) -> DVector<f64> {
    let n = y.len() as f64;
    DVector::from_fn(y.len(), |i, _| 2.0 * (y[i] - cfg.target[i]) / n)
}

/// h = Σ Δ_j F_j + E.
pub fn hamiltonian_h(delta: &DVector<f64>, f: &DVector<f64>, e: f64) -> Result<f64> {
    check_len("F", f.len(), delta.len())?;
    Ok(delta.dot(f) + e)
}

/// Kinetic part (1/2ω) Σ_ν |S_νT M|^2 given the live conjugate weights and the frozen buffer.
pub fn kinetic_energy(m: &DMatrix<f64>, terms: &EpochTerms, omega: f64) -> f64 {
    (terms.kinetic_multiplicity * m.norm_squared() + terms.buffered_kinetic) / (2.0 * omega)
}

/// Extended Hamiltonian for a state under the given frozen epoch terms.
pub fn extended_hamiltonian(state: &NetState, terms: &EpochTerms, cfg: &NetConfig) -> Result<f64> {
    state.check_dims(cfg.n_neurons)?;
    let w_eff = &state.w - &terms.w_offset;
    let f = model_f(&state.y, &w_eff, cfg);
    Ok(state.delta.dot(&f) + kinetic_energy(&state.m, terms, cfg.omega) + mse(&state.y, cfg))
}

/// Interaction part Σ Δ_k F_k + E, the quantity the coupling signal is built from.
pub fn interaction_energy(state: &NetState, terms: &EpochTerms, cfg: &NetConfig) -> f64 {
    let w_eff = &state.w - &terms.w_offset;
    state.delta.dot(&model_f(&state.y, &w_eff, cfg)) + mse(&state.y, cfg)
}

/// dΔ/dt = (Δ - Wᵀ(Δ∘f'))/λ - ∂E/∂y, evaluated with the unshifted weights.
pub fn costate_derivative(state: &NetState, cfg: &NetConfig) -> Result<DVector<f64>> {
    state.check_dims(cfg.n_neurons)?;
    Ok(derivative(state, &EpochTerms::identity(cfg.n_neurons), cfg).delta)
}

/// Right-hand side of the four characteristic equations.
pub fn derivative(state: &NetState, terms: &EpochTerms, cfg: &NetConfig) -> StateDerivative {
    let w_eff = &state.w - &terms.w_offset;
    let a = activation(&state.y, &w_eff, cfg);
    let fp = a.map(|x| cfg.transfer.derivative(x));
    let lam = cfg.lambda;

    let dy = DVector::from_fn(state.n(), |i, _| {
        (-state.y[i] + cfg.transfer.value(a[i])) / lam
    });
    let back = state.delta.component_mul(&fp);
    let dd = (&state.delta - w_eff.transpose() * &back) / lam - error_gradient(&state.y, cfg);
    let dw = &state.m * (terms.kinetic_multiplicity / cfg.omega);
    let dm = -(&back * state.y.transpose()) / lam;
    StateDerivative {
        y: dy,
        delta: dd,
        w: dw,
        m: dm,
    }
}

fn advance(s: &NetState, k: &StateDerivative, h: f64) -> NetState {
    NetState {
        t: s.t + h,
        y: &s.y + &k.y * h,
        delta: &s.delta + &k.delta * h,
        w: &s.w + &k.w * h,
        m: &s.m + &k.m * h,
    }
}

/// One classical RK4 step of size `dt` (which may be negative) with the epoch
/// terms held fixed across the substeps.
pub fn characteristic_step(
    state: &NetState,
    terms: &EpochTerms,
    cfg: &NetConfig,
    dt: f64,
) -> Result<NetState> {
    state.check_dims(cfg.n_neurons)?;
    let eval = |s: &NetState| {
        let d = derivative(s, terms, cfg);
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::Integration {
                t: state.t,
                reason: "non-finite derivative".into(),
            })
        }
    };
    let k1 = eval(state)?;
    let k2 = eval(&advance(state, &k1, dt / 2.0))?;
    let k3 = eval(&advance(state, &k2, dt / 2.0))?;
    let k4 = eval(&advance(state, &k3, dt))?;
    let w = dt / 6.0;
    let next = NetState {
        t: state.t + dt,
        y: &state.y + (&k1.y + &k2.y * 2.0 + &k3.y * 2.0 + &k4.y) * w,
        delta: &state.delta + (&k1.delta + &k2.delta * 2.0 + &k3.delta * 2.0 + &k4.delta) * w,
        w: &state.w + (&k1.w + &k2.w * 2.0 + &k3.w * 2.0 + &k4.w) * w,
        m: &state.m + (&k1.m + &k2.m * 2.0 + &k3.m * 2.0 + &k4.m) * w,
    };
    if !next.is_finite() {
        return Err(Error::Integration {
            t: next.t,
            reason: "state became non-finite".into(),
        });
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg1(transfer: Transfer, lambda: f64, input: f64) -> NetConfig {
        NetConfig {
            n_neurons: 1,
            lambda,
            transfer,
            external_input: vec![input],
            thresholds: vec![0.0],
            target: vec![0.0],
            ..NetConfig::default()
        }
    }

    #[test]
    fn model_at_origin_is_fixed_point() {
        let mut cfg = cfg1(Transfer::Tanh, 1.0, 0.0);
        cfg.n_neurons = 2;
        cfg.external_input = vec![0.0; 2];
        cfg.thresholds = vec![0.0; 2];
        cfg.target = vec![0.0; 2];
        let f = neuron_model_f(&DVector::zeros(2), &DMatrix::zeros(2, 2), &cfg).unwrap();
        assert_eq!(f, DVector::zeros(2));
    }

    #[test]
    fn model_scalar_value() {
        let cfg = cfg1(Transfer::Tanh, 2.0, 0.3);
        let f = neuron_model_f(
            &DVector::from_element(1, 0.5),
            &DMatrix::from_element(1, 1, 1.0),
            &cfg,
        )
        .unwrap();
        let expected = (-0.5 + 0.8_f64.tanh()) / 2.0;
        assert!((f[0] - expected).abs() < 1e-15);
        assert!((f[0] - 0.0820).abs() < 1e-4);
    }

    #[test]
    fn identity_transfer_with_unit_weights_cancels() {
        let mut cfg = cfg1(Transfer::Identity, 1.0, 0.0);
        cfg.n_neurons = 3;
        cfg.external_input = vec![0.0; 3];
        cfg.thresholds = vec![0.0; 3];
        cfg.target = vec![0.0; 3];
        let y = DVector::from_vec(vec![0.3, -1.2, 4.0]);
        let f = neuron_model_f(&y, &DMatrix::identity(3, 3), &cfg).unwrap();
        assert!(f.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn model_rejects_dimension_mismatch() {
        let cfg = cfg1(Transfer::Tanh, 1.0, 0.0);
        assert!(neuron_model_f(&DVector::zeros(2), &DMatrix::zeros(1, 1), &cfg).is_err());
    }

    #[test]
    fn error_values() {
        let mut cfg = cfg1(Transfer::Tanh, 1.0, 0.0);
        assert_eq!(error_e(&DVector::from_element(1, 0.0), &cfg).unwrap(), 0.0);
        assert_eq!(error_e(&DVector::from_element(1, 1.0), &cfg).unwrap(), 1.0);
        cfg.n_neurons = 2;
        cfg.target = vec![0.0, 0.0];
        assert_eq!(
            error_e(&DVector::from_vec(vec![1.0, -1.0]), &cfg).unwrap(),
            1.0
        );
    }

    #[test]
    fn h_values() {
        let z = DVector::zeros(2);
        assert_eq!(hamiltonian_h(&z, &z, 0.0).unwrap(), 0.0);
        assert_eq!(
            hamiltonian_h(&z, &DVector::from_element(2, 3.0), 0.7).unwrap(),
            0.7
        );
        let d = DVector::from_vec(vec![2.0, -1.0]);
        let f = DVector::from_vec(vec![0.5, 0.5]);
        assert!((hamiltonian_h(&d, &f, 0.25).unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn costate_examples() {
        let mut cfg = cfg1(Transfer::Identity, 1.0, 0.0);
        let mut s = NetState::zeros(1);
        assert_eq!(costate_derivative(&s, &cfg).unwrap()[0], 0.0);

        s.delta[0] = 1.0;
        cfg.target = vec![0.0];
        assert_eq!(costate_derivative(&s, &cfg).unwrap()[0], 1.0);
    }

    #[test]
    fn zero_hamiltonian_leaves_state_unchanged() {
        let mut cfg = cfg1(Transfer::Identity, 1.0, 0.0);
        cfg.n_neurons = 2;
        cfg.external_input = vec![0.0; 2];
        cfg.thresholds = vec![0.0; 2];
        cfg.target = vec![0.0; 2];
        let mut s = NetState::zeros(2);
        s.w = DMatrix::from_row_slice(2, 2, &[0.1, -0.2, 0.3, 0.4]);
        let next = characteristic_step(&s, &EpochTerms::identity(2), &cfg, 0.01).unwrap();
        assert_eq!(next.y, s.y);
        assert_eq!(next.delta, s.delta);
        assert_eq!(next.w, s.w);
        assert_eq!(next.m, s.m);
    }

    #[test]
    fn non_finite_derivative_reports_time() {
        let cfg = cfg1(Transfer::Tanh, 1.0, 0.0);
        let mut s = NetState::zeros(1);
        s.t = 2.5;
        s.delta[0] = f64::INFINITY;
        match characteristic_step(&s, &EpochTerms::identity(1), &cfg, 0.1) {
            Err(Error::Integration { t, .. }) => assert_eq!(t, 2.5),
            other => panic!("unexpected {other:?}"),
        }
    }
}
