use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    characteristic_step, extended_hamiltonian, interaction_energy, mse, EpochCoupling, EpochTerms,
    NetConfig, NetState,
};
use crate::csvio::num;
use crate::error::{Error, Result};

/// Relative tolerance on the uniform time grid.
const GRID_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    W,
    M,
}

/// Time-ordered history of a learning run. The stored states double as the
/// epoch buffer for the S_νT lookups.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub epoch_length: f64,
    pub coupling: EpochCoupling,
    pub states: Vec<NetState>,
    pub action_j: Vec<f64>,
    pub error: Vec<f64>,
    /// Σ Δ·F + E at each stored state.
    pub interaction: Vec<f64>,
    /// Extended Hamiltonian at each stored state.
    pub hamiltonian: Vec<f64>,
}

impl Trajectory {
    /// Wraps an existing history, checking the grid and recomputing the
    /// per-state diagnostics.
    pub fn from_states(states: Vec<NetState>, cfg: &NetConfig) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Config("trajectory needs at least one state".into()));
        }
        for (k, pair) in states.windows(2).enumerate() {
            let step = pair[1].t - pair[0].t;
            if (step - cfg.dt).abs() > GRID_TOL * cfg.dt.max(1.0) {
                return Err(Error::Config(format!(
                    "states {k} and {} are {step} apart, expected dt = {}",
                    k + 1,
                    cfg.dt
                )));
            }
        }
        let mut traj = Self::empty(cfg);
        traj.states = states;
        for k in 0..traj.states.len() {
            traj.record(k, cfg)?;
        }
        traj.action_j = accumulate_action(&traj.error, traj.dt, cfg.initial_action);
        Ok(traj)
    }

    fn empty(cfg: &NetConfig) -> Self {
        Self {
            dt: cfg.dt,
            epoch_length: cfg.epoch_length,
            coupling: cfg.epoch_coupling,
            states: Vec::new(),
            action_j: Vec::new(),
            error: Vec::new(),
            interaction: Vec::new(),
            hamiltonian: Vec::new(),
        }
    }

    fn record(&mut self, k: usize, cfg: &NetConfig) -> Result<EpochTerms> {
        let terms = self.epoch_terms(k);
        let s = &self.states[k];
        self.error.push(mse(&s.y, cfg));
        self.interaction.push(interaction_energy(s, &terms, cfg));
        self.hamiltonian.push(extended_hamiltonian(s, &terms, cfg)?);
        Ok(terms)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn n_neurons(&self) -> usize {
        self.states[0].n()
    }

    fn lag(&self) -> usize {
        ((self.epoch_length / self.dt).round() as usize).max(1)
    }

    fn field(&self, k: usize, field: Field) -> &DMatrix<f64> {
        match field {
            Field::W => &self.states[k].w,
            Field::M => &self.states[k].m,
        }
    }

    /// Frozen epoch terms for the step that starts at stored index `k`.
    pub fn epoch_terms(&self, k: usize) -> EpochTerms {
        let lag = self.lag();
        let epoch = k / lag;
        let n = self.states[k].n();
        match self.coupling {
            EpochCoupling::Identity => EpochTerms {
                w_offset: DMatrix::zeros(n, n),
                kinetic_multiplicity: (epoch + 2) as f64,
                buffered_kinetic: 0.0,
            },
            EpochCoupling::Delayed => {
                let lagged = if k >= lag {
                    self.states[k - lag].w.clone()
                } else {
                    DMatrix::zeros(n, n)
                };
                let buffered_kinetic = (1..=epoch + 1)
                    .filter(|nu| k >= nu * lag)
                    .map(|nu| self.states[k - nu * lag].m.norm_squared())
                    .sum();
                EpochTerms {
                    w_offset: &self.states[k].w - lagged,
                    kinetic_multiplicity: 1.0,
                    buffered_kinetic,
                }
            }
        }
    }

    /// Extended Hamiltonian of stored state `k`.
    pub fn extended_hamiltonian_at(&self, k: usize, cfg: &NetConfig) -> Result<f64> {
        extended_hamiltonian(&self.states[k], &self.epoch_terms(k), cfg)
    }

    pub fn csv_header(&self) -> String {
        let n = self.n_neurons();
        let mut cols: Vec<String> = ["t", "J", "E", "H"].iter().map(|s| s.to_string()).collect();
        cols.extend((0..n).map(|i| format!("y_{i}")));
        cols.extend((0..n).map(|i| format!("delta_{i}")));
        for prefix in ["w", "m"] {
            for i in 0..n {
                for j in 0..n {
                    cols.push(format!("{prefix}_{i}_{j}"));
                }
            }
        }
        cols.join(",")
    }

    /// CSV export, one row per stored state, weights flattened row-major.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{}", self.csv_header())?;
        let n = self.n_neurons();
        for (k, s) in self.states.iter().enumerate() {
            let mut row = vec![
                num(s.t),
                num(self.action_j[k]),
                num(self.error[k]),
                num(self.hamiltonian[k]),
            ];
            row.extend(s.y.iter().map(|&v| num(v)));
            row.extend(s.delta.iter().map(|&v| num(v)));
            for mat in [&s.w, &s.m] {
                for i in 0..n {
                    for j in 0..n {
                        row.push(num(mat[(i, j)]));
                    }
                }
            }
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// (S_νT X)(t) = X(t - νT): the stored sample nearest t - νT, or the zero
/// matrix before the start of the history.
///
/// Panics if t - νT lies beyond the last stored state.
pub fn epoch_shift(traj: &Trajectory, field: Field, v: usize, t: f64) -> DMatrix<f64> {
    let t0 = traj.states[0].t;
    let target = t - v as f64 * traj.epoch_length;
    if target < t0 - traj.dt / 2.0 {
        let n = traj.n_neurons();
        return DMatrix::zeros(n, n);
    }
    let k = ((target - t0) / traj.dt).round() as usize;
    assert!(
        k < traj.len(),
        "epoch_shift: t - vT = {target} is past the end of the history"
    );
    traj.field(k, field).clone()
}

/// Trapezoidal J(t) = J0 - ∫ E dτ on a uniform grid.
pub fn accumulate_action(errors: &[f64], dt: f64, j0: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(errors.len());
    let mut acc = j0;
    for (k, &e) in errors.iter().enumerate() {
        if k > 0 {
            acc -= 0.5 * dt * (errors[k - 1] + e);
        }
        out.push(acc);
    }
    out
}

pub fn action_accumulate(traj: &Trajectory, j0: f64) -> Vec<f64> {
    accumulate_action(&traj.error, traj.dt, j0)
}

/// ψ = A·exp(-iJ/ħ), pointwise.
pub fn wavefunction_from_action(
    amplitude: &[f64],
    j: &[f64],
    hbar_eff: f64,
) -> Result<Vec<Complex64>> {
    if hbar_eff.is_nan() || hbar_eff <= 0.0 {
        return Err(Error::Config(format!(
            "hbar_eff must be positive (got {hbar_eff})"
        )));
    }
    if amplitude.len() != j.len() {
        return Err(Error::Config(format!(
            "amplitude has {} samples but J has {}",
            amplitude.len(),
            j.len()
        )));
    }
    Ok(amplitude
        .iter()
        .zip(j)
        .map(|(&a, &jj)| Complex64::from_polar(a, -jj / hbar_eff))
        .collect())
}

fn initial_state(cfg: &NetConfig) -> NetState {
    let n = cfg.n_neurons;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let w = DMatrix::from_row_iterator(n, n, (0..n * n).map(|_| rng.random_range(-0.5..0.5)));
    let mut s = NetState::zeros(n);
    s.w = w;
    if let Some(y0) = &cfg.initial_y {
        s.y = DVector::from_column_slice(y0);
    }
    s
}

/// Integrates the characteristic system over [0, n_epochs·T] from Δ = 0,
/// M = 0 and seeded uniform weights on [-0.5, 0.5].
pub fn learning_run(cfg: &NetConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let steps = cfg.total_steps();
    let mut traj = Trajectory::empty(cfg);
    traj.states.reserve(steps + 1);
    traj.states.push(initial_state(cfg));
    for k in 0..=steps {
        let terms = traj.record(k, cfg)?;
        if k == steps {
            break;
        }
        let mut next = characteristic_step(&traj.states[k], &terms, cfg, cfg.dt)?;
        next.t = (k + 1) as f64 * cfg.dt;
        traj.states.push(next);
    }
    traj.action_j = accumulate_action(&traj.error, traj.dt, cfg.initial_action);
    Ok(traj)
}
