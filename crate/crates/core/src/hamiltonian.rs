//! Control Hamiltonians from planned `(Lambda(t), pi(t))` trajectories, full
//! Lindblad simulation, and the book-ended transport construction.

use crate::error::{Error, Result};
use crate::flag::{Flag, FlagPath};
use crate::linalg::{self, c, CMatrix, RVector, I};
use crate::model::{self, DensityMatrix, LindbladSystem};
use crate::orbit::{dissipator_in_frame, LambdaTrajectory, ADMISSIBLE_TOL};

pub type FlagTrajectory = FlagPath;

pub const TRACE_TOL: f64 = 1e-9;
pub const POSITIVITY_TOL: f64 = 1e-8;
/// Upper bound on `dt * (||H|| + sum ||L||^2)` for book-end substeps.
pub const BOOKEND_STEP_BUDGET: f64 = 0.01;

/// Generalized Gell-Mann basis of `su(n)`, normalised to `Tr(H_i H_j) = 2 delta_ij`.
///
/// Order: symmetric `e_jk + e_kj` and antisymmetric `-i e_jk + i e_kj` for each
/// `j < k` (row-major), then the `n - 1` diagonal generators.
#[derive(Debug, Clone)]
pub struct ControlBasis {
    dim: usize,
    generators: Vec<CMatrix>,
}

impl ControlBasis {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(n));
        }
        let mut generators = Vec::with_capacity(n * n - 1);
        for j in 0..n {
            for k in j + 1..n {
                generators.push(linalg::unit(n, j, k) + linalg::unit(n, k, j));
                generators.push(linalg::unit(n, j, k) * (-I) + linalg::unit(n, k, j) * I);
            }
        }
        for l in 1..n {
            let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
            let mut d = vec![0.0; n];
            d[..l].iter_mut().for_each(|v| *v = norm);
            d[l] = -(l as f64) * norm;
            generators.push(linalg::diag_real(&d));
        }
        Ok(Self { dim: n, generators })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    /// `offset * I + sum_i u_i H_i`.
    pub fn reassemble(&self, u: &[f64], offset: f64) -> CMatrix {
        let mut out = linalg::identity(self.dim).scale(offset);
        for (g, ui) in self.generators.iter().zip(u) {
            out += g.scale(*ui);
        }
        out
    }
}

/// Coefficients `u_i = Tr(H H_i) / Tr(H_i^2)` and the trace part `Tr(H) / n`.
pub fn decompose_control(h: &CMatrix, basis: &ControlBasis) -> Result<(Vec<f64>, f64)> {
    linalg::check_dim(h, basis.dim)?;
    let residual = linalg::hermitian_residual(h);
    if residual > model::DEFAULT_HERMITICITY_TOL * linalg::fro(h).max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    let u = basis.generators.iter().map(|g| (h * g).trace().re / (g * g).trace().re).collect();
    Ok((u, linalg::trace(h).re / basis.dim as f64))
}

/// Control Hamiltonian that keeps `rho = sum lambda_j pi_j` on the planned path.
///
/// In the flag frame, with `K = U^dagger U'` and `M = U^dagger L_D(rho) U`,
/// the total Hamiltonian has entries `i K_jk + i M_jk / (lambda_j - lambda_k)`
/// off the diagonal and zero on it. Pairs closer than `crossing_tol` are
/// dropped when their `M` entry vanishes (admissible flag) and rejected
/// otherwise. The drift, if any, is subtracted so the result is the control
/// part only.
pub fn reconstruct_hamiltonian(
    sys: &LindbladSystem,
    lambda: &RVector,
    flag: &Flag,
    flag_dot: &CMatrix,
    crossing_tol: f64,
) -> Result<CMatrix> {
    let n = sys.dim();
    if flag.dim() != n || lambda.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: lambda.len().max(flag.dim()) });
    }
    linalg::check_dim(flag_dot, n)?;
    let u = flag.frame();
    let k = u.adjoint() * flag_dot;
    let m = dissipator_in_frame(sys, lambda, u);
    let mut local = CMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let gap = lambda[a] - lambda[b];
            let kk = 0.5 * (k[(a, b)] - k[(b, a)].conj());
            if gap.abs() < crossing_tol {
                let block = m[(a, b)].norm();
                if block > ADMISSIBLE_TOL {
                    return Err(if gap == 0.0 {
                        Error::NonAdmissibleFlag { i: a, j: b, block }
                    } else {
                        Error::NearCrossingBlowup { i: a, j: b, gap: gap.abs(), block }
                    });
                }
                local[(a, b)] = I * kk;
            } else {
                local[(a, b)] = I * kk + I * m[(a, b)] / c(gap);
            }
        }
    }
    let mut h = linalg::hermitian_part(&(u * local * u.adjoint()));
    if let Some(d) = sys.drift() {
        h -= d;
    }
    Ok(h)
}

/// Output of [`simulate_full`].
#[derive(Debug, Clone)]
pub struct Simulation {
    pub times: Vec<f64>,
    pub states: Vec<CMatrix>,
    pub min_eigenvalue: f64,
    /// True when some state had an eigenvalue below `-POSITIVITY_TOL`.
    pub positivity_violated: bool,
}

impl Simulation {
    pub fn final_state(&self) -> &CMatrix {
        self.states.last().expect("non-empty simulation")
    }
}

/// Fixed-step RK4 of `drho/dt = -i[H(t) + H_0, rho] + L_D(rho)`.
pub fn simulate_full<F>(
    sys: &LindbladSystem,
    h_path: F,
    rho0: &DensityMatrix,
    t_span: (f64, f64),
    step: f64,
) -> Result<Simulation>
where
    F: FnMut(f64) -> Result<CMatrix>,
{
    simulate_budgeted(sys, h_path, rho0, t_span, step, None)
}

/// As [`simulate_full`], but each output step is split into substeps with
/// `substep * (||H(t)|| + rate_scale) <= budget`, `H` taken at the step start.
/// States are still recorded on the `step` grid.
pub fn simulate_budgeted<F>(
    sys: &LindbladSystem,
    mut h_path: F,
    rho0: &DensityMatrix,
    t_span: (f64, f64),
    step: f64,
    budget: Option<f64>,
) -> Result<Simulation>
where
    F: FnMut(f64) -> Result<CMatrix>,
{
    if rho0.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: rho0.dim() });
    }
    if !(step > 0.0) || !(t_span.1 >= t_span.0) {
        return Err(Error::InvalidArgument("need step > 0 and t_end >= t_start".into()));
    }
    let mut rho = rho0.matrix().clone();
    let mut out = Simulation {
        times: vec![t_span.0],
        states: vec![rho.clone()],
        min_eigenvalue: min_eigenvalue(&rho)?,
        positivity_violated: false,
    };
    if t_span.1 == t_span.0 {
        return Ok(out);
    }
    let steps = crate::integrate::step_count(t_span.1 - t_span.0, step);
    let dt = (t_span.1 - t_span.0) / steps as f64;
    let gen = |h: CMatrix, r: &CMatrix| model::lindblad_unchecked(sys, &h, r);
    let rates = sys.rate_scale();
    for i in 0..steps {
        let t = t_span.0 + i as f64 * dt;
        let sub = match budget {
            Some(b) => {
                let h = linalg::spectral_norm(&h_path(t)?);
                ((dt * (h + rates) / b).ceil() as usize).max(1)
            }
            None => 1,
        };
        let ds = dt / sub as f64;
        let half = c(0.5 * ds);
        for k in 0..sub {
            let s = t + k as f64 * ds;
            let k1 = gen(h_path(s)?, &rho);
            let h_mid = h_path(s + 0.5 * ds)?;
            let k2 = gen(h_mid.clone(), &(&rho + &k1 * half));
            let k3 = gen(h_mid, &(&rho + &k2 * half));
            let k4 = gen(h_path(s + ds)?, &(&rho + &k3 * c(ds)));
            rho += (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * c(ds / 6.0);
        }
        let t_next = t_span.0 + (i + 1) as f64 * dt;
        let drift = (linalg::trace(&rho) - c(1.0)).norm();
        if drift > TRACE_TOL || !rho.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::StepTooLarge { time: t_next, reason: format!("trace drift {drift:e}") });
        }
        let min = min_eigenvalue(&rho)?;
        out.min_eigenvalue = out.min_eigenvalue.min(min);
        out.positivity_violated |= min < -POSITIVITY_TOL;
        out.times.push(t_next);
        out.states.push(rho.clone());
    }
    Ok(out)
}

fn min_eigenvalue(rho: &CMatrix) -> Result<f64> {
    let e = linalg::hermitian_eigen(rho, 0.0)?;
    Ok(e.values[e.values.len() - 1])
}

/// Planned orbit trajectory: a flag path and the eigenvalues it produces.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    pub path: FlagTrajectory,
    pub lambda: LambdaTrajectory,
    /// Integrator step for the planned segment.
    pub step: f64,
}

impl TransportPlan {
    pub fn duration(&self) -> f64 {
        self.lambda.times.last().copied().unwrap_or(0.0) - self.lambda.times[0]
    }

    /// Integrates the eigenvalue ODE along `path` on `[0, duration]`.
    pub fn plan(sys: &LindbladSystem, path: FlagPath, lambda0: &RVector, duration: f64, step: f64) -> Result<Self> {
        let lambda = crate::orbit::integrate_lambda(sys, &path, lambda0, (0.0, duration), step)?;
        Ok(Self { path, lambda, step })
    }

    pub fn state_at(&self, t: f64) -> CMatrix {
        let (flag, _) = self.path.at(t);
        model::assemble(self.lambda.at(t).as_slice(), flag.frame())
    }

    /// Reconstructed control Hamiltonian at `t`.
    pub fn hamiltonian_at(&self, sys: &LindbladSystem, t: f64, crossing_tol: f64) -> Result<CMatrix> {
        let (flag, dot) = self.path.at(t);
        reconstruct_hamiltonian(sys, &self.lambda.at(t), &flag, &dot, crossing_tol)
    }

    /// Sample intervals where two planned eigenvalues swap order, as
    /// `(t_before, j, k)` in plan labels. An exact reconstruction generally
    /// does not exist across such a crossing unless the flag is admissible there.
    pub fn crossings(&self) -> Vec<(f64, usize, usize)> {
        let mut out = Vec::new();
        let l = &self.lambda.lambdas;
        for i in 1..l.len() {
            let n = l[i].len();
            for j in 0..n {
                for k in j + 1..n {
                    let before = l[i - 1][j] - l[i - 1][k];
                    let after = l[i][j] - l[i][k];
                    if before != 0.0 && before.signum() != after.signum() {
                        out.push((self.lambda.times[i - 1], j, k));
                    }
                }
            }
        }
        out
    }

    /// Frame of the planned state at `t`, with columns ordered by non-increasing eigenvalue.
    fn sorted_frame(&self, t: f64) -> (RVector, CMatrix) {
        let lam = self.lambda.at(t);
        let sigma = crate::simplex::weyl_chamber(&lam);
        let (flag, _) = self.path.at(t);
        (sigma.apply(&lam), flag.permuted(&sigma).frame().clone())
    }
}

/// Per-checkpoint record of a reconstruction round trip.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub t: f64,
    pub planned: RVector,
    pub simulated: RVector,
    pub min_gap: f64,
    pub h_norm: f64,
    pub eigenvalue_deviation: f64,
    pub projector_deviation: f64,
}

#[derive(Debug, Clone)]
pub struct RoundTrip {
    pub checkpoints: Vec<Checkpoint>,
    pub max_eigenvalue_deviation: f64,
    pub max_projector_deviation: f64,
    pub simulation: Simulation,
}

/// Substep budget `substep * (||H|| + rate_scale)` for the round-trip simulation.
pub const ROUND_TRIP_STEP_BUDGET: f64 = 0.01;

/// Simulates the full Lindblad equation under the reconstructed Hamiltonian and
/// compares the state with the plan every `every` steps.
pub fn round_trip(sys: &LindbladSystem, plan: &TransportPlan, crossing_tol: f64, every: usize) -> Result<RoundTrip> {
    let rho0 = model::validate_density(&plan.state_at(0.0), 1e-9)?;
    let sim = simulate_budgeted(
        sys,
        |t| plan.hamiltonian_at(sys, t, crossing_tol),
        &rho0,
        (0.0, plan.duration()),
        plan.step,
        Some(ROUND_TRIP_STEP_BUDGET),
    )?;
    let every = every.max(1);
    let mut checkpoints = Vec::new();
    for (i, (t, rho)) in sim.times.iter().zip(&sim.states).enumerate() {
        if i % every != 0 && i + 1 != sim.times.len() {
            continue;
        }
        let (lam, frame) = plan.sorted_frame(*t);
        let e = linalg::hermitian_eigen(rho, 0.0)?;
        let eig_dev = (&e.values - &lam).amax();
        let proj_dev = (0..lam.len())
            .map(|j| linalg::fro(&(linalg::column_projector(&frame, j) - linalg::column_projector(&e.vectors, j))))
            .fold(0.0, f64::max);
        let min_gap = lam.as_slice().windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
        let h = plan.hamiltonian_at(sys, *t, crossing_tol)?;
        checkpoints.push(Checkpoint {
            t: *t,
            planned: lam,
            simulated: e.values,
            min_gap,
            h_norm: linalg::spectral_norm(&h),
            eigenvalue_deviation: eig_dev,
            projector_deviation: proj_dev,
        });
    }
    Ok(RoundTrip {
        max_eigenvalue_deviation: checkpoints.iter().map(|c| c.eigenvalue_deviation).fold(0.0, f64::max),
        max_projector_deviation: checkpoints.iter().map(|c| c.projector_deviation).fold(0.0, f64::max),
        checkpoints,
        simulation: sim,
    })
}

/// Result of [`bookend_transport`].
#[derive(Debug, Clone)]
pub struct BookendReport {
    pub final_state: CMatrix,
    pub distance: f64,
    /// `2 n delta sum_m ||L_m||^2` (spectral norm).
    pub bound: f64,
    pub ratio: f64,
    pub holds: bool,
    /// Some simulated state left the positive cone by more than `POSITIVITY_TOL`.
    pub positivity_violated: bool,
}

/// Spectrum tolerance used to match the plan endpoints with `rho_i` and `rho_T`.
pub const PLAN_SPECTRUM_TOL: f64 = 1e-6;

/// Three-stage schedule: `h_i / delta` on `[-delta, 0]` rotating `rho_i` onto
/// the plan's start, the reconstructed Hamiltonian on `[0, T]`, and
/// `h_T / delta` on `[T, T + delta]` rotating the plan's end onto `rho_T`.
pub fn bookend_transport(
    sys: &LindbladSystem,
    rho_i: &DensityMatrix,
    rho_t: &DensityMatrix,
    plan: &TransportPlan,
    delta: f64,
    crossing_tol: f64,
) -> Result<BookendReport> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be > 0, got {delta}")));
    }
    let n = sys.dim();
    let duration = plan.duration();
    let ei = linalg::hermitian_eigen(rho_i.matrix(), 0.0)?;
    let et = linalg::hermitian_eigen(rho_t.matrix(), 0.0)?;
    let (lam0, frame0) = plan.sorted_frame(0.0);
    let (lam1, frame1) = plan.sorted_frame(duration);
    let dev_start = (&ei.values - &lam0).amax();
    let dev_end = (&et.values - &lam1).amax();
    if dev_start > PLAN_SPECTRUM_TOL || dev_end > PLAN_SPECTRUM_TOL {
        return Err(Error::PlanSpectrumMismatch(format!(
            "plan spectrum differs from endpoints by {dev_start:e} (start) and {dev_end:e} (end)"
        )));
    }
    let h_i = linalg::unitary_log_hamiltonian(&(&frame0 * ei.vectors.adjoint()))?;
    let h_t = linalg::unitary_log_hamiltonian(&(&et.vectors * frame1.adjoint()))?;
    let rates = sys.rate_scale();
    let bookend_step = |h: &CMatrix| BOOKEND_STEP_BUDGET / (linalg::spectral_norm(h) / delta + rates).max(1e-300);

    let kick = |h: &CMatrix, rho: &DensityMatrix| -> Result<Simulation> {
        let hs = h.unscale(delta);
        let drift_free = match sys.drift() {
            Some(d) => &hs - d,
            None => hs,
        };
        simulate_full(sys, |_| Ok(drift_free.clone()), rho, (0.0, delta), bookend_step(h).min(delta))
    };
    let first = kick(&h_i, rho_i)?;
    let mut violated = first.positivity_violated;
    let mut state = DensityMatrix::unchecked(first.final_state().clone());
    if duration > 0.0 {
        let step = plan.step.min(BOOKEND_STEP_BUDGET / rates.max(1e-300));
        let mid = simulate_full(sys, |t| plan.hamiltonian_at(sys, t, crossing_tol), &state, (0.0, duration), step)?;
        violated |= mid.positivity_violated;
        state = DensityMatrix::unchecked(mid.final_state().clone());
    }
    let last = kick(&h_t, &state)?;
    violated |= last.positivity_violated;
    let final_state = last.final_state().clone();
    let distance = model::trace_distance_raw(&final_state, rho_t.matrix())?;
    let bound = 2.0 * n as f64 * delta * sys.ops().iter().map(|l| linalg::spectral_norm(l).powi(2)).sum::<f64>();
    Ok(BookendReport {
        final_state,
        distance,
        bound,
        ratio: distance / delta,
        holds: distance <= bound + TRACE_TOL,
        positivity_violated: violated,
    })
}

/// `sum_j lambda_j pi_j` phase-free helper for tests and callers holding a raw frame.
pub fn planned_state(lambda: &RVector, frame: &CMatrix) -> CMatrix {
    model::assemble(lambda.as_slice(), frame)
}
