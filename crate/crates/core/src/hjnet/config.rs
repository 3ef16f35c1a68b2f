use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transfer {
    #[default]
    Tanh,
    Logistic,
    Identity,
}

impl Transfer {
    pub fn value(self, x: f64) -> f64 {
        match self {
            Transfer::Tanh => x.tanh(),
            Transfer::Logistic => 1.0 / (1.0 + (-x).exp()),
            Transfer::Identity => x,
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Transfer::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Transfer::Logistic => {
                let s = 1.0 / (1.0 + (-x).exp());
                s * (1.0 - s)
            }
            Transfer::Identity => 1.0,
        }
    }
}

/// How the shifted weights S_T W enter the neuron model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpochCoupling {
    /// F sees W(t) - [W(t_n) - W(t_n - T)], the bracket frozen at the start of
    /// each step, so it reads the weights one epoch back while still being
    /// differentiable in the live W.
    #[default]
    Delayed,
    /// Every shift is the identity (the T = 0 policy): F sees W(t) and all
    /// n + 2 kinetic terms equal |M(t)|^2.
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetConfig {
    pub n_neurons: usize,
    pub lambda: f64,
    pub transfer: Transfer,
    pub omega: f64,
    pub epoch_length: f64,
    pub dt: f64,
    pub n_epochs: usize,
    pub external_input: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub target: Vec<f64>,
    pub seed: u64,
    /// y(0); zeros when absent.
    pub initial_y: Option<Vec<f64>>,
    pub epoch_coupling: EpochCoupling,
    pub hbar_eff: f64,
    /// J(t0).
    pub initial_action: f64,
}

impl Default for NetConfig {
    /// The two-neuron supervised network used by the `potential` command.
    fn default() -> Self {
        Self {
            n_neurons: 2,
            lambda: 1.0,
            transfer: Transfer::Tanh,
            omega: 1.0,
            epoch_length: 1.0,
            dt: 0.01,
            n_epochs: 3,
            external_input: vec![1.0, -0.5],
            thresholds: vec![0.0, 0.0],
            target: vec![0.5, -0.5],
            seed: 0,
            initial_y: None,
            epoch_coupling: EpochCoupling::Delayed,
            hbar_eff: 1.0,
            initial_action: 0.0,
        }
    }
}

impl NetConfig {
    /// All invariant violations, each prefixed with `prefix` (e.g. `net.`).
    pub fn violations(&self, prefix: &str) -> Vec<String> {
        let mut out = Vec::new();
        let mut bad = |field: &str, msg: String| out.push(format!("{prefix}{field}: {msg}"));

        if self.n_neurons == 0 {
            bad("n_neurons", "must be positive".into());
        }
        for (name, v) in [
            ("lambda", self.lambda),
            ("omega", self.omega),
            ("dt", self.dt),
            ("hbar_eff", self.hbar_eff),
        ] {
            if !(v.is_finite() && v > 0.0) {
                bad(name, format!("must be a positive finite number (got {v})"));
            }
        }
        if !self.epoch_length.is_finite() || self.epoch_length < self.dt {
            bad(
                "epoch_length",
                format!(
                    "must be at least dt = {} (got {})",
                    self.dt, self.epoch_length
                ),
            );
        }
        if self.n_epochs == 0 {
            bad("n_epochs", "must be positive".into());
        }
        let n = self.n_neurons;
        let mut vectors = vec![
            ("external_input", &self.external_input),
            ("thresholds", &self.thresholds),
            ("target", &self.target),
        ];
        if let Some(y0) = &self.initial_y {
            vectors.push(("initial_y", y0));
        }
        for (name, v) in vectors {
            if v.len() != n {
                bad(
                    name,
                    format!("has length {}, expected n_neurons = {n}", v.len()),
                );
            }
            if v.iter().any(|x| !x.is_finite()) {
                bad(name, "contains a non-finite entry".into());
            }
        }
        if !self.initial_action.is_finite() {
            bad("initial_action", "must be finite".into());
        }
        out
    }

    pub fn validate(&self) -> crate::Result<()> {
        let v = self.violations("");
        if v.is_empty() {
            Ok(())
        } else {
            Err(crate::Error::Validation(v))
        }
    }

    /// Integration steps covering n_epochs·T.
    pub fn total_steps(&self) -> usize {
        (self.n_epochs as f64 * self.epoch_length / self.dt).round() as usize
    }

    /// Samples per epoch.
    pub fn lag_steps(&self) -> usize {
        ((self.epoch_length / self.dt).round() as usize).max(1)
    }
}
