//! Canonical perturbation theory on the angle torus: the Fourier generator
//! G(φ, J) that removes the angle dependence of H0(I) + εV(φ, I), the averaged
//! Hamiltonian K(J), and the induced action-angle transform.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use num_complex::Complex64;

use crate::csvio::num;
use crate::error::{Error, Result};

pub const DEFAULT_ORDER: usize = 8;
pub const DEFAULT_GRID: usize = 64;
/// |m·∂H0/∂J| below this is treated as resonant.
pub const RESONANCE_TOL: f64 = 1e-12;
/// Largest allowed |g_m - conj(g_-m)|.
pub const REALITY_TOL: f64 = 1e-12;

type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;
type PotentialFn = dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync;

/// H(φ, I) = H0(I) + εV(φ, I) on an n-torus.
#[derive(Clone)]
pub struct PerturbedHamiltonian {
    pub h0: Arc<ScalarFn>,
    pub h0_prime: Arc<GradFn>,
    /// V(φ, I).
    pub v: Arc<PotentialFn>,
    pub epsilon: f64,
    pub n_dof: usize,
}

impl std::fmt::Debug for PerturbedHamiltonian {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PerturbedHamiltonian")
            .field("epsilon", &self.epsilon)
            .field("n_dof", &self.n_dof)
            .finish_non_exhaustive()
    }
}

impl PerturbedHamiltonian {
    /// H0 = I²/2, V = cos φ.
    pub fn pendulum(epsilon: f64) -> Self {
        Self {
            h0: Arc::new(|i| 0.5 * i[0] * i[0]),
            h0_prime: Arc::new(|i| vec![i[0]]),
            v: Arc::new(|phi, _| phi[0].cos()),
            epsilon,
            n_dof: 1,
        }
    }

    /// H0 = ωI, V = cos φ.
    pub fn rotor(omega: f64, epsilon: f64) -> Self {
        Self {
            h0: Arc::new(move |i| omega * i[0]),
            h0_prime: Arc::new(move |_| vec![omega]),
            v: Arc::new(|phi, _| phi[0].cos()),
            epsilon,
            n_dof: 1,
        }
    }

    pub fn value(&self, phi: &[f64], action: &[f64]) -> f64 {
        (self.h0)(action) + self.epsilon * (self.v)(phi, action)
    }

    /// Largest relative mismatch between `h0_prime` and central differences of `h0`.
    pub fn gradient_mismatch(&self, actions: &[Vec<f64>]) -> f64 {
        let mut worst = 0.0_f64;
        for a in actions {
            let grad = (self.h0_prime)(a);
            for k in 0..self.n_dof {
                let h = 1e-5 * (1.0 + a[k].abs());
                let mut p = a.clone();
                let mut m = a.clone();
                p[k] += h;
                m[k] -= h;
                let fd = ((self.h0)(&p) - (self.h0)(&m)) / (2.0 * h);
                worst = worst.max((fd - grad[k]).abs() / grad[k].abs().max(1.0));
            }
        }
        worst
    }
}

/// Uniform product grid on the n-torus.
fn torus_points(n: usize, grid: usize) -> Vec<Vec<f64>> {
    let total = grid.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            (0..n)
                .map(|_| {
                    let j = idx % grid;
                    idx /= grid;
                    2.0 * PI * j as f64 / grid as f64
                })
                .collect()
        })
        .collect()
}

fn dot_i(m: &[i32], x: &[f64]) -> f64 {
    m.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum()
}

/// Mode vectors with entries in [-order, order], zero excluded, in lexicographic order.
pub fn mode_set(n: usize, order: usize) -> Vec<Vec<i32>> {
    let o = order as i32;
    let mut out: Vec<Vec<i32>> = vec![vec![]];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (-o..=o).map(move |k| {
                    let mut v = prefix.clone();
                    v.push(k);
                    v
                })
            })
            .collect();
    }
    out.retain(|m| m.iter().any(|&k| k != 0));
    out
}

fn check_grid(grid: usize, order: usize) -> Result<()> {
    if grid < 2 * order + 2 {
        return Err(Error::Config(format!(
            "torus grid of {grid} points is too coarse for order {order} (need at least {})",
            2 * order + 2
        )));
    }
    Ok(())
}

/// (1/N) Σ samples·exp(-i m·φ) over a uniform grid of `grid` points per dimension.
pub fn fourier_project(samples: &[f64], grid: usize, m: &[i32]) -> Result<Complex64> {
    let n = m.len();
    if n == 0 || grid.checked_pow(n as u32) != Some(samples.len()) {
        return Err(Error::Config(format!(
            "{} samples do not form a {n}-dimensional grid of {grid} points",
            samples.len()
        )));
    }
    let top = m
        .iter()
        .map(|k| k.unsigned_abs() as usize)
        .max()
        .unwrap_or(0);
    check_grid(grid, top)?;
    Ok(project(samples, &torus_points(n, grid), m))
}

fn project(samples: &[f64], points: &[Vec<f64>], m: &[i32]) -> Complex64 {
    let sum: Complex64 = samples
        .iter()
        .zip(points)
        .map(|(&s, phi)| Complex64::from_polar(s, -dot_i(m, phi)))
        .sum();
    sum / points.len() as f64
}

#[derive(Clone, Debug, PartialEq)]
struct Neighbors {
    delta: Vec<f64>,
    /// For each action component k: coefficients at J - δ_k e_k and J + δ_k e_k.
    minus: Vec<BTreeMap<Vec<i32>, Complex64>>,
    plus: Vec<BTreeMap<Vec<i32>, Complex64>>,
}

/// Truncated Fourier series of the generator at a fixed action.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSeries {
    pub modes: BTreeMap<Vec<i32>, Complex64>,
    pub truncation_order: usize,
    pub action_j: Vec<f64>,
    pub grid_size: usize,
    pub iterations: usize,
    /// Sup-norm change of G on the grid after each iteration.
    pub residual_history: Vec<f64>,
    neighbors: Option<Neighbors>,
}

fn eval_series(modes: &BTreeMap<Vec<i32>, Complex64>, phi: &[f64]) -> f64 {
    modes
        .iter()
        .map(|(m, g)| (g * Complex64::from_polar(1.0, dot_i(m, phi))).re)
        .sum()
}

fn eval_grad(modes: &BTreeMap<Vec<i32>, Complex64>, phi: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (m, g) in modes {
        let z = g * Complex64::from_polar(1.0, dot_i(m, phi)) * Complex64::i();
        for k in 0..n {
            out[k] += m[k] as f64 * z.re;
        }
    }
    out
}

impl GeneratorSeries {
    /// Builds a series from explicit coefficients, checking reality and the absence of the zero mode.
    pub fn from_modes(
        modes: BTreeMap<Vec<i32>, Complex64>,
        action_j: Vec<f64>,
        truncation_order: usize,
        grid_size: usize,
    ) -> Result<Self> {
        let s = Self {
            modes,
            truncation_order,
            action_j,
            grid_size,
            iterations: 0,
            residual_history: Vec::new(),
            neighbors: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn n_dof(&self) -> usize {
        self.action_j.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_dof();
        for (m, g) in &self.modes {
            if m.len() != n {
                return Err(Error::InvalidSeries(format!(
                    "mode {m:?} has the wrong dimension"
                )));
            }
            if m.iter().all(|&k| k == 0) {
                return Err(Error::InvalidSeries(
                    "the zero mode belongs to K, not G".into(),
                ));
            }
            let neg: Vec<i32> = m.iter().map(|k| -k).collect();
            let partner = self.modes.get(&neg).copied().unwrap_or_default();
            if (partner - g.conj()).norm() > REALITY_TOL {
                return Err(Error::InvalidSeries(format!(
                    "g{m:?} = {g} but g{neg:?} = {partner}; G would not be real"
                )));
            }
        }
        Ok(())
    }

    /// G(φ) at the stored action.
    pub fn value(&self, phi: &[f64]) -> f64 {
        eval_series(&self.modes, phi)
    }

    /// ∂G/∂φ.
    pub fn grad_phi(&self, phi: &[f64]) -> Vec<f64> {
        eval_grad(&self.modes, phi, self.n_dof())
    }

    /// ∂G/∂J by central differences over the neighbouring solves; zero when
    /// the series was built without them.
    pub fn grad_j(&self, phi: &[f64]) -> Vec<f64> {
        match &self.neighbors {
            None => vec![0.0; self.n_dof()],
            Some(nb) => (0..self.n_dof())
                .map(|k| {
                    (eval_series(&nb.plus[k], phi) - eval_series(&nb.minus[k], phi))
                        / (2.0 * nb.delta[k])
                })
                .collect(),
        }
    }

    /// ∂/∂J_k of ∂G/∂φ_k by central differences over the neighbours.
    fn mixed_from_neighbors(&self, phi: &[f64], k: usize) -> f64 {
        match &self.neighbors {
            None => 0.0,
            Some(nb) => {
                let n = self.n_dof();
                (eval_grad(&nb.plus[k], phi, n)[k] - eval_grad(&nb.minus[k], phi, n)[k])
                    / (2.0 * nb.delta[k])
            }
        }
    }

    pub fn write_csv(&self, epsilon: f64, residual: f64) -> String {
        let mut out = String::new();
        let j: Vec<String> = self.action_j.iter().map(|&v| num(v)).collect();
        let _ = writeln!(
            out,
            "# J={} epsilon={} order={} grid={} residual={}",
            j.join(";"),
            num(epsilon),
            self.truncation_order,
            self.grid_size,
            num(residual)
        );
        if self.n_dof() == 1 {
            out.push_str("m,re_g,im_g\n");
        } else {
            let cols: Vec<String> = (0..self.n_dof()).map(|k| format!("m_{k}")).collect();
            let _ = writeln!(out, "{},re_g,im_g", cols.join(","));
        }
        for (m, g) in &self.modes {
            let ms: Vec<String> = m.iter().map(|k| k.to_string()).collect();
            let _ = writeln!(out, "{},{},{}", ms.join(","), num(g.re), num(g.im));
        }
        out
    }
}

/// Options for [`solve_generator`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub order: usize,
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            order: DEFAULT_ORDER,
            grid: DEFAULT_GRID,
            tol: 1e-13,
            max_iter: 200,
        }
    }
}

/// Fixed-point iteration for g_m(J) starting from G = 0:
/// g_m = i/(m·H0'(J)) · F_m[εV(φ, J+G_φ) + H0(J+G_φ) - H0(J) - H0'(J)·G_φ].
pub fn solve_generator(
    ph: &PerturbedHamiltonian,
    j: &[f64],
    opts: SolveOptions,
) -> Result<GeneratorSeries> {
    let n = ph.n_dof;
    if j.len() != n {
        return Err(Error::Config(format!(
            "action has {} components, expected {n}",
            j.len()
        )));
    }
    if opts.order == 0 {
        return Err(Error::Config("truncation order must be positive".into()));
    }
    check_grid(opts.grid, opts.order)?;

    let freq = (ph.h0_prime)(j);
    let h0_j = (ph.h0)(j);
    let modes = mode_set(n, opts.order);
    // One representative per ±m pair; the partner is its conjugate.
    let half: Vec<&Vec<i32>> = modes
        .iter()
        .filter(|m| m.iter().find(|&&k| k != 0).is_some_and(|&k| k > 0))
        .collect();
    let mut divisors = Vec::with_capacity(half.len());
    for m in &half {
        let d = dot_i(m, &freq);
        if d.abs() < RESONANCE_TOL {
            return Err(Error::Resonance {
                mode: (*m).clone(),
                divisor: d.abs(),
            });
        }
        divisors.push(d);
    }

    let points = torus_points(n, opts.grid);
    let mut coeffs: BTreeMap<Vec<i32>, Complex64> = modes
        .iter()
        .map(|m| (m.clone(), Complex64::default()))
        .collect();
    let mut g_old = vec![0.0; points.len()];
    let mut history = Vec::new();

    for it in 1..=opts.max_iter {
        let bracket: Vec<f64> = points
            .iter()
            .map(|phi| {
                let gp = eval_grad(&coeffs, phi, n);
                let action: Vec<f64> = j.iter().zip(&gp).map(|(a, b)| a + b).collect();
                let lin: f64 = freq.iter().zip(&gp).map(|(a, b)| a * b).sum();
                ph.epsilon * (ph.v)(phi, &action) + (ph.h0)(&action) - h0_j - lin
            })
            .collect();
        let mut next = BTreeMap::new();
        for (m, d) in half.iter().zip(&divisors) {
            let g = Complex64::i() * project(&bracket, &points, m) / *d;
            let neg: Vec<i32> = m.iter().map(|k| -k).collect();
            next.insert((*m).clone(), g);
            next.insert(neg, g.conj());
        }
        let g_new: Vec<f64> = points.iter().map(|phi| eval_series(&next, phi)).collect();
        let change = g_new
            .iter()
            .zip(&g_old)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        history.push(change);
        coeffs = next;
        g_old = g_new;
        if !change.is_finite() {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: change,
            });
        }
        if change <= opts.tol {
            return Ok(GeneratorSeries {
                modes: coeffs,
                truncation_order: opts.order,
                action_j: j.to_vec(),
                grid_size: opts.grid,
                iterations: it,
                residual_history: history,
                neighbors: None,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        residual: *history.last().unwrap_or(&f64::NAN),
    })
}

/// Step used for ∂G/∂J.
pub fn action_step(j: f64) -> f64 {
    1e-4 * (1.0 + j.abs())
}

/// As [`solve_generator`], additionally solving at J ± δ e_k so that ∂G/∂J is available.
pub fn solve_generator_with_derivative(
    ph: &PerturbedHamiltonian,
    j: &[f64],
    opts: SolveOptions,
) -> Result<GeneratorSeries> {
    let mut base = solve_generator(ph, j, opts)?;
    let mut nb = Neighbors {
        delta: Vec::new(),
        minus: Vec::new(),
        plus: Vec::new(),
    };
    for k in 0..j.len() {
        let d = action_step(j[k]);
        let mut jm = j.to_vec();
        let mut jp = j.to_vec();
        jm[k] -= d;
        jp[k] += d;
        nb.delta.push(d);
        nb.minus.push(solve_generator(ph, &jm, opts)?.modes);
        nb.plus.push(solve_generator(ph, &jp, opts)?.modes);
    }
    base.neighbors = Some(nb);
    Ok(base)
}

/// K(J): torus average of H(φ, J + G_φ).
pub fn new_hamiltonian_k(ph: &PerturbedHamiltonian, g: &GeneratorSeries) -> f64 {
    let points = torus_points(ph.n_dof, g.grid_size);
    let total: f64 = points
        .iter()
        .map(|phi| transformed_energy(ph, g, phi))
        .sum();
    total / points.len() as f64
}

fn transformed_energy(ph: &PerturbedHamiltonian, g: &GeneratorSeries, phi: &[f64]) -> f64 {
    let gp = g.grad_phi(phi);
    let action: Vec<f64> = g.action_j.iter().zip(&gp).map(|(a, b)| a + b).collect();
    ph.value(phi, &action)
}

/// sup over the grid of |H(φ, J + G_φ) - K(J)|.
pub fn hj_residual(ph: &PerturbedHamiltonian, g: &GeneratorSeries) -> f64 {
    let k = new_hamiltonian_k(ph, g);
    torus_points(ph.n_dof, g.grid_size)
        .iter()
        .map(|phi| (transformed_energy(ph, g, phi) - k).abs())
        .fold(0.0, f64::max)
}

/// I = J + ∂G/∂φ, ψ = φ + ∂G/∂J (mod 2π).
pub fn apply_transform(g: &GeneratorSeries, phi: &[f64], j: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let gp = g.grad_phi(phi);
    let gj = g.grad_j(phi);
    let action = j.iter().zip(&gp).map(|(a, b)| a + b).collect();
    let psi = phi
        .iter()
        .zip(&gj)
        .map(|(p, d)| (p + d).rem_euclid(2.0 * PI))
        .collect();
    (action, psi)
}

/// max over the grid of |det ∂(ψ,J)/∂(φ,I) - 1| for one degree of freedom.
///
/// det = (∂ψ/∂φ)|_J / (∂I/∂J)|_φ, with ∂ψ/∂φ taken by central differences in φ
/// and ∂I/∂J by central differences over the neighbouring solves.
pub fn symplectic_check(g: &GeneratorSeries, grid: usize) -> Result<f64> {
    if g.n_dof() != 1 {
        return Err(Error::UnsupportedDimension(format!(
            "symplectic check is implemented for one degree of freedom, got {}",
            g.n_dof()
        )));
    }
    g.validate()?;
    if grid == 0 {
        return Err(Error::Config(
            "symplectic check needs a non-empty grid".into(),
        ));
    }
    let h = 1e-4;
    let mut worst = 0.0_f64;
    for phi in torus_points(1, grid) {
        let shift = |x: f64| g.grad_j(&[x])[0];
        let dpsi_dphi = 1.0 + (shift(phi[0] + h) - shift(phi[0] - h)) / (2.0 * h);
        let di_dj = 1.0 + g.mixed_from_neighbors(&phi, 0);
        worst = worst.max((dpsi_dphi / di_dj - 1.0).abs());
    }
    Ok(worst)
}
