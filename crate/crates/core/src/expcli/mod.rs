//! Experiment orchestration: configuration, seeded ensembles, CSV and SVG
//! artifacts, and the command-line front end.

mod config;
pub mod plot;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{
    load_config, matrix_columns, matrix_from_row, parse_config, read_matrix, read_state, COperator,
    CanonicalConfig, ConstantCoupling, CouplingConfig, ExperimentConfig, InitialState, Preset,
};
pub use plot::{emit_plot, render_svg, PlotSpec};

use crate::canonical::{
    hj_residual, solve_generator_with_derivative, symplectic_check, PerturbedHamiltonian,
};
use crate::csvio::Table;
use crate::error::{Error, Result};
use crate::hjnet::{learning_run, NetConfig, Trajectory};
use crate::qboltz::{
    coupling_signal, evolution_table, learning_potential, run_evolution, warmup_start,
    CouplingSeries, DensityMatrix, Evolution,
};
use crate::witnesses::WitnessReport;

/// Written as `manifest.json` next to the artifacts of a successful run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// First 64 bits of SHA-256 over the effective configuration, hex encoded.
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<PathBuf>,
    pub tool_version: String,
    pub wall_time_s: f64,
    pub warnings: Vec<String>,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let json = serde_json::to_vec(cfg).expect("configuration serializes");
    let digest = Sha256::digest(&json);
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    format!("{:016x}", u64::from_be_bytes(word))
}

struct Run {
    command: &'static str,
    dir: PathBuf,
    started: Instant,
    artifacts: Vec<PathBuf>,
    seeds: Vec<u64>,
    warnings: Vec<String>,
}

impl Run {
    fn start(command: &'static str, cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        std::fs::create_dir_all(&cfg.output_dir)?;
        Ok(Self {
            command,
            dir: cfg.output_dir.clone(),
            started: Instant::now(),
            artifacts: Vec::new(),
            seeds: Vec::new(),
            warnings: Vec::new(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let p = self.path(name);
        std::fs::write(&p, contents)?;
        self.artifacts.push(p.clone());
        Ok(p)
    }

    fn table(&mut self, name: &str, table: &Table) -> Result<PathBuf> {
        self.write(name, &table.to_csv_string())
    }

    fn plot(
        &mut self,
        cfg: &ExperimentConfig,
        csv: &Path,
        name: &str,
        spec: &PlotSpec,
    ) -> Result<()> {
        if cfg.emit_plots {
            let out = self.path(name);
            emit_plot(csv, spec, &out)?;
            self.artifacts.push(out);
        }
        Ok(())
    }

    fn finish(self, cfg: &ExperimentConfig) -> Result<RunManifest> {
        let manifest = RunManifest {
            command: self.command.into(),
            config_hash: config_hash(cfg),
            seeds: self.seeds,
            artifacts: self.artifacts,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            wall_time_s: self.started.elapsed().as_secs_f64(),
            warnings: self.warnings,
        };
        let json =
            serde_json::to_string_pretty(&manifest).map_err(|e| Error::Numeric(e.to_string()))?;
        std::fs::write(self.dir.join("manifest.json"), json + "\n")?;
        Ok(manifest)
    }
}

fn member_config(net: &NetConfig, seed: u64) -> NetConfig {
    NetConfig {
        seed,
        ..net.clone()
    }
}

/// Learning runs for every member, returned in member order.
pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<Vec<Trajectory>> {
    cfg.member_seeds()
        .into_par_iter()
        .map(|seed| learning_run(&member_config(&cfg.net, seed)))
        .collect()
}

/// `simulate`: one learning run, `trajectory.csv`.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let mut run = Run::start("simulate", cfg)?;
    let traj = learning_run(&cfg.net)?;
    let mut buf = Vec::new();
    traj.write_csv(&mut buf)?;
    let csv = run.write(
        "trajectory.csv",
        &String::from_utf8(buf).expect("CSV is UTF-8"),
    )?;
    run.seeds.push(cfg.net.seed);
    run.plot(
        cfg,
        &csv,
        "trajectory.svg",
        &PlotSpec::new("Learning error", "t", &["E"]),
    )?;
    run.finish(cfg)
}

/// `potential`: ensemble-averaged interaction energy, `potential.csv`.
pub fn cmd_potential(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let mut run = Run::start("potential", cfg)?;
    let ensemble = run_ensemble(cfg)?;
    let pot = learning_potential(&ensemble, cfg.coupling.scale)?;
    run.seeds = cfg.member_seeds();
    let csv = run.table("potential.csv", &pot.table())?;
    run.plot(
        cfg,
        &csv,
        "potential.svg",
        &PlotSpec::new("Averaged interaction potential", "t", &["V"]),
    )?;
    run.finish(cfg)
}

/// Coupling series for `entangle`: constant in debug mode, otherwise from one learning run.
pub fn entangle_coupling(cfg: &ExperimentConfig) -> Result<CouplingSeries> {
    let c_op = cfg.c_operator()?;
    match &cfg.constant_coupling {
        Some(k) => CouplingSeries::constant(k.g, k.dt, k.steps, cfg.coupling.gamma, c_op),
        None => {
            let traj = learning_run(&cfg.net)?;
            let base = coupling_signal(&traj, cfg.coupling.scale)?;
            CouplingSeries::new(base.times, base.g, cfg.coupling.gamma, c_op)
        }
    }
}

/// Density-matrix evolution behind `entangle`.
pub fn entangle_evolution(cfg: &ExperimentConfig) -> Result<Evolution> {
    cfg.validate()?;
    run_evolution(&entangle_coupling(cfg)?, &cfg.initial_state()?)
}

/// `entangle`: `concurrence.csv` (t, concurrence, negativity) and `rho.csv`, warm-up rows cut.
pub fn cmd_entangle(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let mut run = Run::start("entangle", cfg)?;
    let evo = entangle_evolution(cfg)?;
    if cfg.constant_coupling.is_none() {
        run.seeds.push(cfg.net.seed);
    }
    let from = warmup_start(evo.states.len(), cfg.warmup_fraction);
    let full = evolution_table(&evo, from)?;
    let mut short = Table::new(vec!["t".into(), "concurrence".into(), "negativity".into()]);
    let (ci, ni) = (
        full.column_index("concurrence")?,
        full.column_index("negativity")?,
    );
    for r in &full.rows {
        short.push(vec![r[0], r[ci], r[ni]]);
    }
    let csv = run.table("concurrence.csv", &short)?;
    run.table("rho.csv", &full)?;
    run.plot(
        cfg,
        &csv,
        "concurrence.svg",
        &PlotSpec::new("Concurrence", "t", &["concurrence"]),
    )?;
    run.finish(cfg)
}

/// One row of the canonical sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalRow {
    pub epsilon: f64,
    pub residual: f64,
    pub symplectic_defect: f64,
    pub iterations: usize,
}

/// Pendulum sweep; failures become NaN rows plus a message.
pub fn canonical_sweep(cc: &CanonicalConfig) -> (Vec<CanonicalRow>, Vec<String>, Option<String>) {
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut generator = None;
    for &eps in &cc.epsilons {
        let ph = PerturbedHamiltonian::pendulum(eps);
        let solved = solve_generator_with_derivative(&ph, &[cc.action], cc.solve_options())
            .and_then(|g| Ok((symplectic_check(&g, cc.check_grid)?, g)));
        match solved {
            Ok((defect, g)) => {
                let residual = hj_residual(&ph, &g);
                generator = Some(g.write_csv(eps, residual));
                rows.push(CanonicalRow {
                    epsilon: eps,
                    residual,
                    symplectic_defect: defect,
                    iterations: g.iterations,
                });
            }
            Err(e) => {
                let iterations = match e {
                    Error::NonConvergence { iterations, .. } => iterations,
                    _ => 0,
                };
                warnings.push(format!("epsilon = {eps}: {e}"));
                rows.push(CanonicalRow {
                    epsilon: eps,
                    residual: f64::NAN,
                    symplectic_defect: f64::NAN,
                    iterations,
                });
            }
        }
    }
    (rows, warnings, generator)
}

/// `canonical`: `canonical.csv` with ε, residual, symplectic defect and iterations.
pub fn cmd_canonical(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let mut run = Run::start("canonical", cfg)?;
    let (rows, warnings, generator) = canonical_sweep(&cfg.canonical);
    let mut table = Table::new(
        ["epsilon", "residual", "symplectic_defect", "iterations"]
            .map(String::from)
            .to_vec(),
    );
    for r in &rows {
        table.push(vec![
            r.epsilon,
            r.residual,
            r.symplectic_defect,
            r.iterations as f64,
        ]);
    }
    let csv = run.table("canonical.csv", &table)?;
    if let Some(g) = generator {
        run.write("generator.csv", &g)?;
    }
    run.warnings = warnings;
    run.plot(
        cfg,
        &csv,
        "canonical.svg",
        &PlotSpec::new("Hamilton-Jacobi residual", "epsilon", &["residual"]),
    )?;
    run.finish(cfg)
}

/// Witness reports for every row of a CSV with `t` and `re_rho_ij`/`im_rho_ij` columns.
pub fn witness_table(input: &Path) -> Result<Vec<WitnessReport>> {
    if !input.is_file() {
        return Err(Error::Config(format!("{} does not exist", input.display())));
    }
    let table = Table::read(input)?;
    let ti = table.column_index("t")?;
    (0..table.rows.len())
        .map(|r| {
            let rho = DensityMatrix::from_row_major(&matrix_from_row(&table, "rho", r)?)?;
            WitnessReport::compute(table.rows[r][ti], &rho)
        })
        .collect()
}

/// `witness <csv>`: `witness.csv`.
pub fn cmd_witness(cfg: &ExperimentConfig, input: &Path) -> Result<RunManifest> {
    let mut run = Run::start("witness", cfg)?;
    let reports = witness_table(input)?;
    let mut out = String::from(WitnessReport::CSV_HEADER);
    out.push('\n');
    for r in &reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    let csv = run.write("witness.csv", &out)?;
    if !reports.is_empty() {
        run.plot(
            cfg,
            &csv,
            "witness.svg",
            &PlotSpec::new("Witnesses", "t", &["concurrence", "negativity"]),
        )?;
    }
    run.finish(cfg)
}

#[derive(Debug, Parser)]
#[command(
    name = "hjent",
    version,
    about = "Learning dynamics, coupled-qubit evolution and entanglement witnesses"
)]
pub struct Cli {
    /// JSON experiment file; the command's built-in preset when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (member i uses seed + i).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Skip SVG output.
    #[arg(long, global = true)]
    pub no_plots: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Single learning run.
    Simulate,
    /// Ensemble-averaged interaction potential.
    Potential,
    /// Concurrence of the coupled qubits.
    Entangle,
    /// Pendulum generator sweep.
    Canonical,
    /// Witnesses for a CSV of density matrices.
    Witness { csv: PathBuf },
}

impl Command {
    fn preset(&self) -> Preset {
        match self {
            Command::Simulate => Preset::Simulate,
            Command::Potential => Preset::Potential,
            Command::Entangle => Preset::Entangle,
            Command::Canonical => Preset::Canonical,
            Command::Witness { .. } => Preset::Witness,
        }
    }
}

/// Effective configuration for a parsed command line.
pub fn resolve_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::preset(cli.command.preset()),
    };
    if let Some(seed) = cli.seed {
        cfg.net.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if cli.no_plots {
        cfg.emit_plots = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run_cli(cli: &Cli) -> Result<RunManifest> {
    let cfg = resolve_config(cli)?;
    match &cli.command {
        Command::Simulate => cmd_simulate(&cfg),
        Command::Potential => cmd_potential(&cfg),
        Command::Entangle => cmd_entangle(&cfg),
        Command::Canonical => cmd_canonical(&cfg),
        Command::Witness { csv } => cmd_witness(&cfg, csv),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn in_dir(mut cfg: ExperimentConfig, dir: &Path) -> ExperimentConfig {
        cfg.output_dir = dir.to_path_buf();
        cfg
    }

    #[test]
    fn zero_scale_potential_is_flat() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = in_dir(ExperimentConfig::preset(Preset::Potential), dir.path());
        cfg.ensemble_size = 1;
        cfg.coupling.scale = 0.0;
        let m = cmd_potential(&cfg).unwrap();
        let t = Table::read(&dir.path().join("potential.csv")).unwrap();
        assert!(t.column("V").unwrap().iter().all(|&v| v == 0.0));
        assert!(m
            .artifacts
            .iter()
            .all(|p| std::fs::metadata(p).unwrap().len() > 0));
        assert!(dir.path().join("manifest.json").exists());
        let svg = std::fs::read_to_string(dir.path().join("potential.svg")).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn zero_scale_entangle_stays_separable() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = in_dir(ExperimentConfig::preset(Preset::Entangle), dir.path());
        cfg.coupling.scale = 0.0;
        cfg.emit_plots = false;
        cmd_entangle(&cfg).unwrap();
        let t = Table::read(&dir.path().join("concurrence.csv")).unwrap();
        assert!(t.column("concurrence").unwrap().iter().all(|&v| v <= 1e-12));
    }

    #[test]
    fn canonical_zero_row() {
        let (rows, warnings, _) = canonical_sweep(&CanonicalConfig {
            epsilons: vec![0.0],
            ..CanonicalConfig::default()
        });
        assert!(warnings.is_empty());
        assert_eq!(rows[0].residual, 0.0);
        assert_eq!(rows[0].symplectic_defect, 0.0);
        assert_eq!(rows[0].iterations, 1);
    }

    #[test]
    fn canonical_failures_become_rows() {
        let (rows, warnings, _) = canonical_sweep(&CanonicalConfig {
            action: 0.0,
            epsilons: vec![0.1],
            ..CanonicalConfig::default()
        });
        assert_eq!(warnings.len(), 1);
        assert!(rows[0].residual.is_nan());
    }

    #[test]
    fn invalid_config_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("o");
        let mut cfg = in_dir(ExperimentConfig::default(), &out);
        cfg.canonical.grid = 3;
        assert!(matches!(cmd_canonical(&cfg), Err(Error::Validation(_))));
        assert!(!out.exists());
    }

    #[test]
    fn hash_tracks_config() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.net.seed = 1;
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 16);
    }

    #[test]
    fn cli_flags_override() {
        let cli = Cli::parse_from([
            "hjent",
            "--seed",
            "7",
            "--out",
            "/tmp/x",
            "--no-plots",
            "entangle",
        ]);
        let cfg = resolve_config(&cli).unwrap();
        assert_eq!(cfg.net.seed, 7);
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/x"));
        assert!(!cfg.emit_plots);
        assert_eq!(cfg.net.lambda, 2.0);
    }
}
