//! Two-qubit density-matrix evolution driven by the network's coupling
//! signal: a coherent forward-scattering term plus an adjacent-step
//! double-commutator damping term.

mod density;

pub use density::{DensityMatrix, Physicality, HERMITIAN_TOL, PSD_TOL, TRACE_TOL};

use crate::csvio::Table;
use crate::error::{Error, Result};
use crate::hjnet::Trajectory;
use crate::witnesses::linalg::{
    c, commutator, hermitian_eigs4, hermiticity_defect, kron2, pauli_x, pauli_z, Mat4,
};
use crate::witnesses::{concurrence, negativity};

/// Raw matrices further than this from Hermitian are refused by [`project_physical`].
pub const PROJECTION_INPUT_TOL: f64 = 1e-3;

pub fn zz() -> Mat4 {
    kron2(&pauli_z(), &pauli_z())
}

pub fn xx() -> Mat4 {
    kron2(&pauli_x(), &pauli_x())
}

/// Scalar coupling g(t) on a uniform grid together with the operator it multiplies.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingSeries {
    pub times: Vec<f64>,
    pub g: Vec<f64>,
    pub gamma: f64,
    pub c_op: Mat4,
}

impl CouplingSeries {
    pub fn new(times: Vec<f64>, g: Vec<f64>, gamma: f64, c_op: Mat4) -> Result<Self> {
        if times.len() != g.len() || times.is_empty() {
            return Err(Error::Config(format!(
                "coupling series needs matching non-empty times and g (got {} and {})",
                times.len(),
                g.len()
            )));
        }
        if let Some(k) = g.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "coupling g is not finite at step {k}"
            )));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Config(format!(
                "gamma must be non-negative (got {gamma})"
            )));
        }
        let defect = hermiticity_defect(&c_op);
        if defect > 1e-12 {
            return Err(Error::Config(format!(
                "coupling operator is not Hermitian (defect {defect:e})"
            )));
        }
        if times.len() > 1 {
            let dt = times[1] - times[0];
            if dt.is_nan() || dt <= 0.0 {
                return Err(Error::Config("coupling times must increase".into()));
            }
            for (k, w) in times.windows(2).enumerate() {
                if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
                    return Err(Error::Config(format!(
                        "coupling times are not uniform at step {k}"
                    )));
                }
            }
        }
        Ok(Self {
            times,
            g,
            gamma,
            c_op,
        })
    }

    /// g ≡ g0 on `steps + 1` samples spaced by `dt`.
    pub fn constant(g0: f64, dt: f64, steps: usize, gamma: f64, c_op: Mat4) -> Result<Self> {
        let times = (0..=steps).map(|k| k as f64 * dt).collect();
        Self::new(times, vec![g0; steps + 1], gamma, c_op)
    }

    pub fn dt(&self) -> f64 {
        if self.times.len() > 1 {
            self.times[1] - self.times[0]
        } else {
            0.0
        }
    }

    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }
}

/// g(t) = scale·(Σ Δ_k F_k + E) along the trajectory, with γ = 0 and C = σz⊗σz.
pub fn coupling_signal(traj: &Trajectory, scale: f64) -> Result<CouplingSeries> {
    if traj.is_empty() {
        return Err(Error::Config(
            "coupling signal needs a non-empty trajectory".into(),
        ));
    }
    let g = traj.interaction.iter().map(|&h| scale * h).collect();
    CouplingSeries::new(traj.times(), g, 0.0, zz())
}

/// -i g [C, ρ].
pub fn forward_scattering(rho: &DensityMatrix, g: f64, c_op: &Mat4) -> Mat4 {
    commutator(c_op, rho.matrix()) * c(0.0, -g)
}

/// -(γ/2) g_now g_prev [C, [C, ρ]].
pub fn damping_term(rho: &DensityMatrix, g_now: f64, g_prev: f64, gamma: f64, c_op: &Mat4) -> Mat4 {
    let inner = commutator(c_op, rho.matrix());
    commutator(c_op, &inner) * c(-0.5 * gamma * g_now * g_prev, 0.0)
}

/// Hermitise, clip negative eigenvalues and renormalise. Also returns the
/// smallest eigenvalue before clipping. A matrix with no negative eigenvalue
/// is only Hermitised and renormalised, never rebuilt from its eigenvectors.
pub fn project_physical_with_min(raw: &Mat4) -> Result<(DensityMatrix, f64)> {
    let defect = hermiticity_defect(raw);
    if defect > PROJECTION_INPUT_TOL {
        return Err(Error::Numeric(format!(
            "matrix is too far from Hermitian to project (defect {defect:e})"
        )));
    }
    let herm = (raw + raw.adjoint()) * c(0.5, 0.0);
    let eig = hermitian_eigs4(&herm)?;
    let min_raw = eig.values[3];
    let tr = herm.trace().re;
    if min_raw >= 0.0 && tr > 0.0 {
        return Ok((DensityMatrix::new_unchecked(herm / c(tr, 0.0)), min_raw));
    }
    let clipped: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Degenerate(format!(
            "all eigenvalues clipped (spectrum {:?})",
            eig.values
        )));
    }
    let mut m = Mat4::zeros();
    for (k, &lam) in clipped.iter().enumerate() {
        if lam == 0.0 {
            continue;
        }
        let v = eig.vectors.column(k);
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] += v[i] * v[j].conj() * (lam / total);
            }
        }
    }
    let mut m = (m + m.adjoint()) * c(0.5, 0.0);
    let tr = m.trace().re;
    m /= c(tr, 0.0);
    Ok((DensityMatrix::new_unchecked(m), min_raw))
}

pub fn project_physical(raw: &Mat4) -> Result<DensityMatrix> {
    Ok(project_physical_with_min(raw)?.0)
}

fn raw_step(
    rho: &DensityMatrix,
    g_now: f64,
    g_prev: f64,
    dt: f64,
    gamma: f64,
    c_op: &Mat4,
) -> Mat4 {
    let drift =
        forward_scattering(rho, g_now, c_op) + damping_term(rho, g_now, g_prev, gamma, c_op);
    rho.matrix() + drift * c(dt, 0.0)
}

/// ρ' = P(ρ + dt·(-i g_now [C,ρ] - (γ/2) g_now g_prev [C,[C,ρ]])), P the projection.
pub fn boltzmann_step(
    rho: &DensityMatrix,
    g_now: f64,
    g_prev: f64,
    dt: f64,
    params: &CouplingSeries,
) -> Result<DensityMatrix> {
    project_physical(&raw_step(
        rho,
        g_now,
        g_prev,
        dt,
        params.gamma,
        &params.c_op,
    ))
}

#[derive(Clone, Debug)]
pub struct Evolution {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Most negative eigenvalue seen before projection, over all steps (0 if none).
    pub worst_pre_projection: f64,
}

/// Evolves `rho0` through the series, one state per sample. The first step
/// uses g_prev = g_now.
pub fn run_evolution(params: &CouplingSeries, rho0: &DensityMatrix) -> Result<Evolution> {
    let dt = params.dt();
    let mut states = Vec::with_capacity(params.len());
    states.push(rho0.clone());
    let mut worst = 0.0_f64;
    for k in 0..params.len().saturating_sub(1) {
        let g_now = params.g[k];
        let g_prev = if k == 0 { g_now } else { params.g[k - 1] };
        let raw = raw_step(&states[k], g_now, g_prev, dt, params.gamma, &params.c_op);
        let (next, min_raw) = project_physical_with_min(&raw).map_err(|e| match e {
            Error::Degenerate(msg) => Error::Degenerate(format!(
                "step {} (t = {}), last good state at t = {}: {msg}",
                k + 1,
                params.times[k + 1],
                params.times[k]
            )),
            other => other,
        })?;
        worst = worst.min(min_raw);
        states.push(next);
    }
    Ok(Evolution {
        times: params.times.clone(),
        states,
        worst_pre_projection: worst,
    })
}

/// First reported index after cutting `fraction` of the samples.
pub fn warmup_start(len: usize, fraction: f64) -> usize {
    ((len as f64 * fraction).ceil() as usize).min(len)
}

/// Evolution export: time, the 16 entries of ρ as (re, im) pairs, concurrence, negativity.
pub fn evolution_table(evo: &Evolution, from: usize) -> Result<Table> {
    let mut header = vec!["t".to_string()];
    for i in 0..4 {
        for j in 0..4 {
            header.push(format!("re_rho_{i}{j}"));
            header.push(format!("im_rho_{i}{j}"));
        }
    }
    header.push("concurrence".into());
    header.push("negativity".into());
    let mut table = Table::new(header);
    for (t, rho) in evo.times.iter().zip(&evo.states).skip(from) {
        let mut row = vec![*t];
        for z in rho.row_major() {
            row.push(z.re);
            row.push(z.im);
        }
        row.push(concurrence(rho)?);
        row.push(negativity(rho)?);
        table.push(row);
    }
    Ok(table)
}

/// Ensemble-averaged interaction energy, time axis shifted so the first epoch
/// lies at negative times.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    pub times: Vec<f64>,
    pub v: Vec<f64>,
}

impl Potential {
    pub fn table(&self) -> Table {
        let mut t = Table::new(vec!["t".into(), "V".into()]);
        for (&a, &b) in self.times.iter().zip(&self.v) {
            t.push(vec![a, b]);
        }
        t
    }
}

pub fn learning_potential(ensemble: &[Trajectory], scale: f64) -> Result<Potential> {
    let first = ensemble
        .first()
        .ok_or_else(|| Error::Config("learning potential needs at least one trajectory".into()))?;
    let times = first.times();
    for (i, traj) in ensemble.iter().enumerate().skip(1) {
        let same = traj.len() == first.len()
            && traj.epoch_length == first.epoch_length
            && traj
                .states
                .iter()
                .zip(&first.states)
                .all(|(a, b)| (a.t - b.t).abs() <= 1e-9 * first.dt);
        if !same {
            return Err(Error::Config(format!(
                "ensemble member {i} is on a different time grid"
            )));
        }
    }
    let mut sum = vec![0.0; times.len()];
    for traj in ensemble {
        for (s, &h) in sum.iter_mut().zip(&traj.interaction) {
            *s += scale * h;
        }
    }
    let count = ensemble.len() as f64;
    Ok(Potential {
        times: times.iter().map(|t| t - first.epoch_length).collect(),
        v: sum.into_iter().map(|s| s / count).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::witnesses::linalg::{Mat2, C64};

    fn diag(v: [f64; 4]) -> Mat4 {
        Mat4::from_diagonal(&nalgebra::Vector4::new(
            c(v[0], 0.0),
            c(v[1], 0.0),
            c(v[2], 0.0),
            c(v[3], 0.0),
        ))
    }

    fn max_abs(m: &Mat4) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn forward_term_examples() {
        let pp = DensityMatrix::plus_plus();
        assert_eq!(forward_scattering(&pp, 0.0, &zz()), Mat4::zeros());
        let diag_state = DensityMatrix::new(diag([0.4, 0.1, 0.2, 0.3])).unwrap();
        assert!(max_abs(&forward_scattering(&diag_state, 1.3, &zz())) < 1e-15);

        let out = forward_scattering(&pp, 1.0, &zz());
        assert!(out.trace().norm() < 1e-15);
        assert!(max_abs(&out) > 0.1);
        let c_op = zz();
        let r = pp.matrix();
        for i in 0..4 {
            for j in 0..4 {
                let mut comm = C64::new(0.0, 0.0);
                for k in 0..4 {
                    comm += c_op[(i, k)] * r[(k, j)] - r[(i, k)] * c_op[(k, j)];
                }
                assert!((out[(i, j)] - comm * c(0.0, -1.0)).norm() < 1e-12);
            }
        }
        assert!(hermiticity_defect(&out) < 1e-15);
    }

    #[test]
    fn damping_term_examples() {
        let pp = DensityMatrix::plus_plus();
        assert_eq!(damping_term(&pp, 1.0, 1.0, 0.0, &zz()), Mat4::zeros());
        let diag_state = DensityMatrix::new(diag([0.4, 0.1, 0.2, 0.3])).unwrap();
        assert!(max_abs(&damping_term(&diag_state, 1.0, 1.0, 1.0, &zz())) < 1e-15);

        let out = damping_term(&pp, 1.0, 1.0, 1.0, &zz());
        let c_op = zz();
        let r = pp.matrix();
        let inner = c_op * r - r * c_op;
        let expected = (c_op * inner - inner * c_op) * c(-0.5, 0.0);
        assert!(max_abs(&(out - expected)) < 1e-12);
        assert!(out.trace().norm() < 1e-15);
    }

    #[test]
    fn projection_examples() {
        let bell = DensityMatrix::bell_phi_plus();
        let p = project_physical(bell.matrix()).unwrap();
        assert!(max_abs(&(p.matrix() - bell.matrix())) < 1e-12);

        let p = project_physical(&diag([1.1, -0.1, 0.0, 0.0])).unwrap();
        assert!(max_abs(&(p.matrix() - diag([1.0, 0.0, 0.0, 0.0]))) < 1e-15);

        let n = xx() + zz();
        let raw = DensityMatrix::werner(0.6).matrix() + n * c(0.0, 1e-6);
        let p = project_physical(&raw).unwrap();
        assert!(p.hermiticity_defect() == 0.0);

        assert!(matches!(
            project_physical(&diag([-0.5, -0.5, 0.0, 0.0])),
            Err(Error::Degenerate(_))
        ));
        let mut far = Mat4::identity();
        far[(0, 1)] = c(0.1, 0.0);
        assert!(project_physical(&far).is_err());
    }

    #[test]
    fn zero_coupling_keeps_state() {
        let params = CouplingSeries::constant(0.0, 0.01, 50, 0.5, zz()).unwrap();
        let rho0 = DensityMatrix::plus_plus();
        let evo = run_evolution(&params, &rho0).unwrap();
        assert_eq!(evo.states.len(), 51);
        for s in &evo.states {
            assert!(max_abs(&(s.matrix() - rho0.matrix())) < 1e-14);
        }
    }

    #[test]
    fn unitary_limit_tracks_ising_phase() {
        let g0 = 0.7;
        let dt = 1e-4;
        let steps = 10_000;
        let params = CouplingSeries::constant(g0, dt, steps, 0.0, zz()).unwrap();
        let evo = run_evolution(&params, &DensityMatrix::plus_plus()).unwrap();
        let mut worst = 0.0_f64;
        for (t, rho) in evo.times.iter().zip(&evo.states).step_by(100) {
            let expected = (2.0 * g0 * t).sin().abs();
            worst = worst.max((concurrence(rho).unwrap() - expected).abs());
            assert!((rho.trace() - c(1.0, 0.0)).norm() < 1e-12);
        }
        assert!(worst < 1e-3, "max error {worst}");
    }

    #[test]
    fn unitary_limit_trace_distance() {
        // Exact evolution: exp(-i g t C) ρ exp(i g t C) with C diagonal.
        let g0 = 1.0;
        let dt = 1e-3;
        let steps = 1000;
        let params = CouplingSeries::constant(g0, dt, steps, 0.0, zz()).unwrap();
        let rho0 = DensityMatrix::plus_plus();
        let evo = run_evolution(&params, &rho0).unwrap();
        let t = evo.times[steps];
        let d = [1.0, -1.0, -1.0, 1.0];
        let u = Mat4::from_diagonal(&nalgebra::Vector4::from_fn(|i, _| {
            C64::from_polar(1.0, -g0 * t * d[i])
        }));
        let exact = u * rho0.matrix() * u.adjoint();
        let diff = evo.states[steps].matrix() - exact;
        let eig = hermitian_eigs4(&diff).unwrap();
        let trace_distance = 0.5 * eig.values.iter().map(|v| v.abs()).sum::<f64>();
        assert!(
            trace_distance <= 10.0 * dt,
            "trace distance {trace_distance}"
        );
    }

    #[test]
    fn damping_alone_does_not_raise_purity() {
        let mut rho = DensityMatrix::plus_plus();
        let c_op = zz();
        let mut last = rho.purity();
        for k in 0..500 {
            let g = (0.05 * k as f64).sin();
            let raw = rho.matrix()
                + damping_term(&rho, g.abs() + 0.1, g.abs() + 0.1, 0.8, &c_op) * c(0.01, 0.0);
            rho = project_physical(&raw).unwrap();
            let p = rho.purity();
            assert!(p <= last + 1e-12);
            last = p;
        }
        assert!(last < 0.99);
    }

    #[test]
    fn series_validation() {
        assert!(CouplingSeries::new(vec![0.0, 1.0], vec![0.0], 0.0, zz()).is_err());
        assert!(CouplingSeries::new(vec![0.0, 1.0], vec![0.0, f64::NAN], 0.0, zz()).is_err());
        assert!(CouplingSeries::new(vec![0.0, 1.0, 3.0], vec![0.0; 3], 0.0, zz()).is_err());
        let mut bad = zz();
        bad[(0, 1)] = c(0.0, 1.0);
        assert!(CouplingSeries::new(vec![0.0], vec![0.0], 0.0, bad).is_err());
        assert!(CouplingSeries::new(vec![0.0], vec![0.0], -1.0, zz()).is_err());
    }

    #[test]
    fn product_operator_builders() {
        let p = kron2(&Mat2::identity(), &pauli_z());
        assert_eq!(p[(1, 1)], c(-1.0, 0.0));
        assert_eq!(xx()[(0, 3)], c(1.0, 0.0));
    }

    #[test]
    fn warmup_index() {
        assert_eq!(warmup_start(100, 0.05), 5);
        assert_eq!(warmup_start(101, 0.05), 6);
        assert_eq!(warmup_start(10, 0.0), 0);
    }
}
