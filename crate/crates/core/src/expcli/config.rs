use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::canonical::SolveOptions;
use crate::csvio::Table;
use crate::error::{Error, Result};
use crate::hjnet::NetConfig;
use crate::qboltz::{self, DensityMatrix};
use crate::witnesses::linalg::{c, hermiticity_defect, Mat4, C64};
use crate::witnesses::negativity;

/// Coupling operator C.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum COperator {
    #[default]
    Zz,
    Xx,
    /// CSV with columns `re_c_ij`, `im_c_ij` (first data row is used).
    Custom(PathBuf),
}

/// Initial two-qubit state.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialState {
    #[default]
    PlusPlus,
    Bell,
    /// CSV with columns `re_rho_ij`, `im_rho_ij` holding a separable state.
    Product(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingConfig {
    pub scale: f64,
    pub gamma: f64,
    pub c_op: COperator,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self {
            scale: 1.0,
            gamma: 0.1,
            c_op: COperator::Zz,
        }
    }
}

/// Constant coupling used instead of a learning run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantCoupling {
    pub g: f64,
    pub dt: f64,
    pub steps: usize,
}

/// Pendulum sweep for `canonical`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CanonicalConfig {
    pub action: f64,
    pub epsilons: Vec<f64>,
    pub order: usize,
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Symplectic check grid.
    pub check_grid: usize,
}

impl Default for CanonicalConfig {
    fn default() -> Self {
        Self {
            action: 1.0,
            epsilons: vec![0.0, 0.01, 0.02, 0.04, 0.08, 0.1],
            order: 1,
            grid: 64,
            tol: 1e-13,
            max_iter: 200,
            check_grid: 64,
        }
    }
}

impl CanonicalConfig {
    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            order: self.order,
            grid: self.grid,
            tol: self.tol,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub net: NetConfig,
    pub coupling: CouplingConfig,
    pub rho0: InitialState,
    pub ensemble_size: usize,
    pub warmup_fraction: f64,
    pub output_dir: PathBuf,
    pub emit_plots: bool,
    /// Replaces the learning run in `entangle` with a constant g.
    pub constant_coupling: Option<ConstantCoupling>,
    pub canonical: CanonicalConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            net: NetConfig::default(),
            coupling: CouplingConfig::default(),
            rho0: InitialState::PlusPlus,
            ensemble_size: 64,
            warmup_fraction: 0.1,
            output_dir: PathBuf::from("out"),
            emit_plots: true,
            constant_coupling: None,
            canonical: CanonicalConfig::default(),
        }
    }
}

/// Built-in configuration per subcommand, used when no file is given.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Simulate,
    Potential,
    Entangle,
    Canonical,
    Witness,
}

impl ExperimentConfig {
    pub fn preset(which: Preset) -> Self {
        let base = Self::default();
        match which {
            Preset::Entangle => Self {
                net: NetConfig {
                    lambda: 2.0,
                    ..NetConfig::default()
                },
                coupling: CouplingConfig {
                    scale: 0.8,
                    gamma: 0.1,
                    c_op: COperator::Zz,
                },
                ensemble_size: 1,
                ..base
            },
            Preset::Simulate | Preset::Canonical | Preset::Witness => Self {
                ensemble_size: 1,
                ..base
            },
            Preset::Potential => base,
        }
    }

    /// Every invariant violation, with dotted field names.
    pub fn violations(&self) -> Vec<String> {
        let mut out = self.net.violations("net.");
        let mut bad = |field: &str, msg: String| out.push(format!("{field}: {msg}"));
        if !self.coupling.scale.is_finite() {
            bad("coupling.scale", "must be finite".into());
        }
        if !(self.coupling.gamma.is_finite() && self.coupling.gamma >= 0.0) {
            bad(
                "coupling.gamma",
                format!(
                    "must be finite and non-negative (got {})",
                    self.coupling.gamma
                ),
            );
        }
        if let COperator::Custom(p) = &self.coupling.c_op {
            match read_matrix(p, "c") {
                Ok(m) if hermiticity_defect(&m) > 1e-12 => {
                    bad("coupling.c_op", format!("{} is not Hermitian", p.display()))
                }
                Ok(_) => {}
                Err(e) => bad("coupling.c_op", e.to_string()),
            }
        }
        if let InitialState::Product(p) = &self.rho0 {
            match read_state(p) {
                Ok(rho) => match negativity(&rho) {
                    Ok(n) if n > 1e-9 => bad(
                        "rho0",
                        format!("{} is entangled (negativity {n})", p.display()),
                    ),
                    Ok(_) => {}
                    Err(e) => bad("rho0", e.to_string()),
                },
                Err(e) => bad("rho0", e.to_string()),
            }
        }
        if self.ensemble_size == 0 {
            bad("ensemble_size", "must be at least 1".into());
        }
        if !(0.0..0.5).contains(&self.warmup_fraction) {
            bad(
                "warmup_fraction",
                format!("must lie in [0, 0.5) (got {})", self.warmup_fraction),
            );
        }
        if let Some(k) = &self.constant_coupling {
            if !k.g.is_finite() {
                bad("constant_coupling.g", "must be finite".into());
            }
            if !(k.dt.is_finite() && k.dt > 0.0) {
                bad("constant_coupling.dt", "must be positive".into());
            }
            if k.steps == 0 {
                bad("constant_coupling.steps", "must be positive".into());
            }
        }
        let cc = &self.canonical;
        if !cc.action.is_finite() {
            bad("canonical.action", "must be finite".into());
        }
        if cc.epsilons.iter().any(|e| !e.is_finite()) {
            bad("canonical.epsilons", "contains a non-finite entry".into());
        }
        if cc.order == 0 {
            bad("canonical.order", "must be positive".into());
        }
        if cc.grid < 2 * cc.order + 2 {
            bad(
                "canonical.grid",
                format!(
                    "{} points cannot resolve order {} (need at least {})",
                    cc.grid,
                    cc.order,
                    2 * cc.order + 2
                ),
            );
        }
        if !(cc.tol.is_finite() && cc.tol > 0.0) {
            bad("canonical.tol", "must be positive".into());
        }
        if cc.max_iter == 0 {
            bad("canonical.max_iter", "must be positive".into());
        }
        if cc.check_grid == 0 {
            bad("canonical.check_grid", "must be positive".into());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    pub fn c_operator(&self) -> Result<Mat4> {
        match &self.coupling.c_op {
            COperator::Zz => Ok(qboltz::zz()),
            COperator::Xx => Ok(qboltz::xx()),
            COperator::Custom(p) => read_matrix(p, "c"),
        }
    }

    pub fn initial_state(&self) -> Result<DensityMatrix> {
        match &self.rho0 {
            InitialState::PlusPlus => Ok(DensityMatrix::plus_plus()),
            InitialState::Bell => Ok(DensityMatrix::bell_phi_plus()),
            InitialState::Product(p) => read_state(p),
        }
    }

    /// Seeds of the ensemble members: master + i.
    pub fn member_seeds(&self) -> Vec<u64> {
        (0..self.ensemble_size as u64)
            .map(|i| self.net.seed.wrapping_add(i))
            .collect()
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let COperator::Custom(p) = &mut self.coupling.c_op {
            fix(p);
        }
        if let InitialState::Product(p) = &mut self.rho0 {
            fix(p);
        }
    }
}

/// Parses and validates a JSON experiment file; missing fields take the
/// defaults of [`ExperimentConfig::default`]. Relative file references are
/// resolved against the file's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let mut cfg = parse_config(&text, path)?;
    cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    cfg.validate()?;
    Ok(cfg)
}

/// Parses JSON without validating.
pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Column names `re_{name}_ij`, `im_{name}_ij` in row-major order.
pub fn matrix_columns(name: &str) -> Vec<(String, String)> {
    (0..4)
        .flat_map(|i| {
            (0..4).map(move |j| (format!("re_{name}_{i}{j}"), format!("im_{name}_{i}{j}")))
        })
        .collect()
}

/// Row `row` of a table as a 4×4 matrix.
pub fn matrix_from_row(table: &Table, name: &str, row: usize) -> Result<[C64; 16]> {
    let mut out = [c(0.0, 0.0); 16];
    for (k, (re, im)) in matrix_columns(name).iter().enumerate() {
        let (a, b) = (table.column_index(re)?, table.column_index(im)?);
        out[k] = c(table.rows[row][a], table.rows[row][b]);
    }
    Ok(out)
}

fn first_row(path: &Path, name: &str) -> Result<[C64; 16]> {
    if !path.is_file() {
        return Err(Error::Config(format!("{} does not exist", path.display())));
    }
    let table = Table::read(path)?;
    if table.rows.is_empty() {
        return Err(Error::Config(format!(
            "{} has no data rows",
            path.display()
        )));
    }
    matrix_from_row(&table, name, 0)
}

pub fn read_matrix(path: &Path, name: &str) -> Result<Mat4> {
    Ok(Mat4::from_row_slice(&first_row(path, name)?))
}

pub fn read_state(path: &Path) -> Result<DensityMatrix> {
    DensityMatrix::from_row_major(&first_row(path, "rho")?)
}
