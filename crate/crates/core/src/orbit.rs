//! Inter-orbit dynamics: transfer rates `w`, the rate matrix `Omega`, the
//! eigenvalue ODE `dLambda/dt = Omega Lambda` and its projected affine form,
//! plus the crossing and projector-derivative machinery.
//!
//! Index convention: `w[(j, k)]` is the rate INTO eigenvector `j` FROM
//! eigenvector `k`, so `dlambda_j/dt` gains `w_jk lambda_k` and loses
//! `w_kj lambda_j`.

use crate::error::{Error, Result};
use crate::flag::{Flag, FlagPath};
use crate::integrate::{rk4_step, step_count};
use crate::linalg::{self, c, group_unsorted, CMatrix, RMatrix, RVector};
use crate::model::{assemble, dissipator_unchecked, LindbladSystem, SpectralDecomposition};
use crate::simplex::{ProjectionMap, SpectrumPoint};

pub const DEFAULT_GAP_TOL: f64 = 1e-6;
pub const SIMPLEX_DRIFT_TOL: f64 = 1e-9;
pub const ADMISSIBLE_TOL: f64 = 1e-10;

/// Transfer rates and the rate matrix built from them.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaMatrix {
    pub w: RMatrix,
    pub omega: RMatrix,
}

impl OmegaMatrix {
    pub fn from_w(w: RMatrix) -> Self {
        let n = w.nrows();
        let mut omega = w.clone();
        for j in 0..n {
            omega[(j, j)] = 0.0;
            let out: f64 = (0..n).filter(|&l| l != j).map(|l| w[(l, j)]).sum();
            omega[(j, j)] = -out;
        }
        Self { w, omega }
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn max_column_sum(&self) -> f64 {
        self.omega.column_iter().map(|col| col.sum().abs()).fold(0.0, f64::max)
    }

    /// Largest real part of the spectrum of `Omega` (never positive for a rate matrix).
    pub fn spectral_abscissa(&self) -> f64 {
        self.omega.complex_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `dx/dt = b + A x` on the projected simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineField {
    pub b: RVector,
    pub a: RMatrix,
}

impl AffineField {
    pub fn eval(&self, x: &RVector) -> RVector {
        &self.b + &self.a * x
    }

    /// Fixed point `-A^{-1} b`, if `A` is invertible.
    pub fn fixed_point(&self) -> Option<RVector> {
        self.a.clone().lu().solve(&(-&self.b))
    }
}

fn check_flag(sys: &LindbladSystem, flag: &Flag) -> Result<()> {
    if flag.dim() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: flag.dim() });
    }
    Ok(())
}

/// `w_ij = sum_k |u_i^dagger L_k u_j|^2`.
pub fn compute_w(sys: &LindbladSystem, flag: &Flag) -> Result<OmegaMatrix> {
    check_flag(sys, flag)?;
    let residual = linalg::unitarity_residual(flag.frame());
    if residual > crate::flag::UNITARY_TOL {
        return Err(Error::NonUnitaryFlag { residual });
    }
    Ok(omega_unchecked(sys, flag.frame()))
}

pub(crate) fn omega_unchecked(sys: &LindbladSystem, frame: &CMatrix) -> OmegaMatrix {
    let n = sys.dim();
    let mut w = RMatrix::zeros(n, n);
    let ud = frame.adjoint();
    for l in sys.ops() {
        let m = &ud * l * frame;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    w[(i, j)] += m[(i, j)].norm_sqr();
                }
            }
        }
    }
    OmegaMatrix::from_w(w)
}

pub fn project_field(map: &ProjectionMap, om: &OmegaMatrix) -> Result<AffineField> {
    if map.dim() != om.dim() {
        return Err(Error::DimensionMismatch { expected: map.dim(), found: om.dim() });
    }
    let pi = map.matrix();
    Ok(AffineField { b: pi * (&om.omega * map.iota()), a: pi * &om.omega * pi.transpose() })
}

/// Sampled solution of the eigenvalue ODE with stored derivatives.
///
/// Segment boundaries appear twice (left and right derivative), and
/// [`LambdaTrajectory::at`] interpolates with cubic Hermite polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaTrajectory {
    pub times: Vec<f64>,
    pub lambdas: Vec<RVector>,
    pub rates: Vec<RVector>,
}

impl LambdaTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &RVector {
        self.lambdas.last().expect("non-empty trajectory")
    }

    pub fn at(&self, t: f64) -> RVector {
        let n = self.times.len();
        if n == 1 {
            return self.lambdas[0].clone();
        }
        let i = self.times.partition_point(|&s| s <= t).saturating_sub(1).min(n - 2);
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        if h <= 0.0 {
            return self.lambdas[i + 1].clone();
        }
        let s = (t - t0) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        &self.lambdas[i] * h00
            + &self.rates[i] * (h10 * h)
            + &self.lambdas[i + 1] * h01
            + &self.rates[i + 1] * (h11 * h)
    }

    pub fn points(&self, map: &ProjectionMap) -> Vec<SpectrumPoint> {
        self.lambdas.iter().map(|l| SpectrumPoint { lambda: l.clone(), x: map.apply(l) }).collect()
    }
}

/// RK4 integration of `dLambda/dt = Omega^{pi(t)} Lambda` along `path`.
///
/// The step grid restarts at every segment boundary of the path.
pub fn integrate_lambda(
    sys: &LindbladSystem,
    path: &FlagPath,
    lambda0: &RVector,
    t_span: (f64, f64),
    step: f64,
) -> Result<LambdaTrajectory> {
    if path.dim() != sys.dim() || lambda0.len() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: lambda0.len() });
    }
    if !(step > 0.0) || !(t_span.1 >= t_span.0) {
        return Err(Error::InvalidArgument("need step > 0 and t_end >= t_start".into()));
    }
    let residual = (lambda0.sum() - 1.0).abs();
    if residual > SIMPLEX_DRIFT_TOL {
        return Err(Error::NotOnSimplexHyperplane { residual });
    }
    path.check_continuity()?;

    let omega_at = |seg: usize, local: f64| {
        let s = &path.segments()[seg];
        omega_unchecked(sys, s.frame_at(local).frame()).omega
    };
    let (first_seg, first_local) = path.locate(t_span.0);
    let mut traj = LambdaTrajectory {
        times: vec![t_span.0],
        lambdas: vec![lambda0.clone()],
        rates: vec![omega_at(first_seg, first_local) * lambda0],
    };
    if t_span.1 == t_span.0 {
        return Ok(traj);
    }
    let starts = path.segment_starts();
    let mut lambda = lambda0.clone();
    for (k, seg) in path.segments().iter().enumerate() {
        let seg_start = starts[k];
        let seg_end = seg_start + seg.duration;
        let last = k + 1 == path.segments().len();
        let a = t_span.0.max(seg_start);
        let b = if last { t_span.1 } else { t_span.1.min(seg_end) };
        if b <= a {
            continue;
        }
        if a > t_span.0 {
            // right-sided derivative after a boundary
            traj.times.push(a);
            traj.lambdas.push(lambda.clone());
            traj.rates.push(omega_at(k, a - seg_start) * &lambda);
        }
        let steps = step_count(b - a, step);
        let h = (b - a) / steps as f64;
        let mut f = |t: f64, y: &RVector| omega_at(k, t - seg_start) * y;
        for i in 0..steps {
            let t = a + i as f64 * h;
            lambda = rk4_step(&mut f, t, &lambda, h);
            let t_next = a + (i + 1) as f64 * h;
            let drift = (lambda.sum() - 1.0).abs();
            let min = lambda.min();
            if drift > SIMPLEX_DRIFT_TOL || min < -SIMPLEX_DRIFT_TOL || !lambda.iter().all(|v| v.is_finite()) {
                return Err(Error::StepTooLarge {
                    time: t_next,
                    reason: format!("sum drift {drift:e}, min eigenvalue {min:e}"),
                });
            }
            traj.times.push(t_next);
            traj.rates.push(f(t_next, &lambda));
            traj.lambdas.push(lambda.clone());
        }
    }
    Ok(traj)
}

/// `pi_i L_D(sum_l lambda_l pi_l) pi_j`.
pub fn crossing_block(sys: &LindbladSystem, lambda: &RVector, flag: &Flag, i: usize, j: usize) -> Result<CMatrix> {
    check_flag(sys, flag)?;
    if lambda.len() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: lambda.len() });
    }
    if i == j || i >= sys.dim() || j >= sys.dim() {
        return Err(Error::InvalidArgument(format!("crossing block needs distinct indices, got ({i}, {j})")));
    }
    let rho = assemble(lambda.as_slice(), flag.frame());
    let d = dissipator_unchecked(sys.ops(), &rho);
    Ok(flag.projector(i) * d * flag.projector(j))
}

/// Scalar `u_i^dagger L_D(rho) u_j` for every pair, in the flag frame.
pub(crate) fn dissipator_in_frame(sys: &LindbladSystem, lambda: &RVector, frame: &CMatrix) -> CMatrix {
    let rho = assemble(lambda.as_slice(), frame);
    frame.adjoint() * dissipator_unchecked(sys.ops(), &rho) * frame
}

#[derive(Debug, Clone, PartialEq)]
pub enum Admissibility {
    /// Simple spectrum; the base flag was returned unchanged.
    NoCrossing,
    /// Frame columns were rotated inside these degenerate groups.
    Rotated { groups: Vec<Vec<usize>> },
}

#[derive(Debug, Clone)]
pub struct AdmissibleFlag {
    pub flag: Flag,
    pub status: Admissibility,
}

/// Rotates `base` inside each degenerate eigenvalue group so that the block
/// of `L_D(rho)` on that group becomes diagonal (so `M_ij = 0` within groups).
pub fn admissible_flags_at_crossing(
    sys: &LindbladSystem,
    lambda: &RVector,
    base: &Flag,
    crossing_tol: f64,
) -> Result<AdmissibleFlag> {
    check_flag(sys, base)?;
    if lambda.len() != sys.dim() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: lambda.len() });
    }
    let groups: Vec<Vec<usize>> =
        group_unsorted(lambda.as_slice(), crossing_tol).into_iter().filter(|g| g.len() > 1).collect();
    if groups.is_empty() {
        return Ok(AdmissibleFlag { flag: base.clone(), status: Admissibility::NoCrossing });
    }
    let block_full = dissipator_in_frame(sys, lambda, base.frame());
    let mut frame = base.frame().clone();
    for g in &groups {
        let m = g.len();
        let block = CMatrix::from_fn(m, m, |a, b| block_full[(g[a], g[b])]);
        let eig = linalg::hermitian_eigen(&block, 0.0)?;
        let mut cols = CMatrix::zeros(frame.nrows(), m);
        for (a, &j) in g.iter().enumerate() {
            cols.set_column(a, &base.frame().column(j));
        }
        let rotated = cols * eig.vectors;
        for (a, &j) in g.iter().enumerate() {
            frame.set_column(j, &rotated.column(a));
        }
    }
    Ok(AdmissibleFlag { flag: Flag::new(frame)?, status: Admissibility::Rotated { groups } })
}

/// `dP_alpha/dt = sum_{beta != alpha} (P_a rho' P_b + P_b rho' P_a) / (lambda_a - lambda_b)`.
pub fn projector_derivative(
    rho_dot: &CMatrix,
    decomp: &SpectralDecomposition,
    alpha: usize,
    gap_tol: f64,
) -> Result<CMatrix> {
    let n = decomp.frame.nrows();
    linalg::check_dim(rho_dot, n)?;
    if alpha >= decomp.groups.len() {
        return Err(Error::InvalidArgument(format!("group index {alpha} out of range")));
    }
    let pa = decomp.group_projector(alpha);
    let la = decomp.group_value(alpha);
    let mut out = CMatrix::zeros(n, n);
    for beta in 0..decomp.groups.len() {
        if beta == alpha {
            continue;
        }
        let gap = la - decomp.group_value(beta);
        if gap.abs() < gap_tol {
            return Err(Error::DegenerateGap { gap: gap.abs(), tol: gap_tol });
        }
        let pb = decomp.group_projector(beta);
        out += (&pa * rho_dot * &pb + &pb * rho_dot * &pa) / c(gap);
    }
    Ok(out)
}

/// Directional derivative of every `w_jk` along the frame rotation
/// `U -> exp(eps h) U`, where `h` is anti-Hermitian and off-diagonal in the
/// flag frame:
/// `dw_jk = sum_l Tr(pi_j [L_l, h] pi_k L_l^dagger + pi_j L_l pi_k [L_l^dagger, h])`.
pub fn w_derivative(sys: &LindbladSystem, flag: &Flag, h: &CMatrix) -> Result<RMatrix> {
    check_flag(sys, flag)?;
    linalg::check_dim(h, sys.dim())?;
    let scale = linalg::fro(h).max(1.0);
    let anti = linalg::fro(&(h + h.adjoint()));
    if anti > 1e-10 * scale {
        return Err(Error::TangentNotAntiHermitian { residual: anti });
    }
    let u = flag.frame();
    let ud = u.adjoint();
    let local = &ud * h * u;
    let diag = local.diagonal().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if diag > 1e-10 * scale {
        return Err(Error::TangentNotOffDiagonal { residual: diag });
    }
    let n = sys.dim();
    let mut dw = RMatrix::zeros(n, n);
    for l in sys.ops() {
        let m = &ud * l * u;
        let dm = &ud * linalg::commutator(l, h) * u;
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    dw[(j, k)] += 2.0 * (m[(j, k)].conj() * dm[(j, k)]).re;
                }
            }
        }
    }
    Ok(dw)
}

/// Removes the diagonal of `h` in the frame of `flag`, giving a tangent direction.
pub fn tangent_projection(flag: &Flag, h: &CMatrix) -> CMatrix {
    let u = flag.frame();
    let mut local = u.adjoint() * h * u;
    for j in 0..local.nrows() {
        local[(j, j)] = c(0.0);
    }
    u * local * u.adjoint()
}
