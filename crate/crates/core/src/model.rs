//! Physical model: Lindblad systems, density matrices and the generator
//! `L(rho) = -i[H, rho] + sum_k (L_k rho L_k^dagger - 1/2 {L_k^dagger L_k, rho})`.

use crate::error::{Error, Result};
use crate::linalg::{
    self, anticommutator, check_dim, check_square, hermitian_eigen, hermitian_residual, CMatrix, RVector, I,
};

pub const DEFAULT_HERMITICITY_TOL: f64 = 1e-10;
pub const DEFAULT_CROSSING_TOL: f64 = 1e-9;

/// Dimension, Lindblad operators and an optional drift Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladSystem {
    dim: usize,
    ops: Vec<CMatrix>,
    drift: Option<CMatrix>,
}

impl LindbladSystem {
    pub fn new(dim: usize, ops: Vec<CMatrix>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        for op in &ops {
            check_dim(op, dim)?;
        }
        Ok(Self { dim, ops, drift: None })
    }

    pub fn with_drift(mut self, drift: CMatrix) -> Result<Self> {
        check_dim(&drift, self.dim)?;
        let residual = hermitian_residual(&drift);
        if residual > DEFAULT_HERMITICITY_TOL * linalg::fro(&drift).max(1.0) {
            return Err(Error::NotHermitian { residual });
        }
        self.drift = Some(drift);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn drift(&self) -> Option<&CMatrix> {
        self.drift.as_ref()
    }

    /// `sum_k ||L_k||^2` with the spectral norm.
    pub fn rate_scale(&self) -> f64 {
        self.ops.iter().map(|l| linalg::spectral_norm(l).powi(2)).sum()
    }

    /// The same operators written in a basis relabelled by `perm`:
    /// new basis vector `j` is old basis vector `perm[j]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: perm.len() });
        }
        let map = |m: &CMatrix| CMatrix::from_fn(self.dim, self.dim, |a, b| m[(perm[a], perm[b])]);
        Ok(Self { dim: self.dim, ops: self.ops.iter().map(map).collect(), drift: self.drift.as_ref().map(map) })
    }
}

/// A validated density operator (Hermitian, positive semi-definite, unit trace).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// `sum_j lambda_j u_j u_j^dagger` for the columns `u_j` of `frame`.
    pub fn from_spectrum(lambda: &[f64], frame: &CMatrix, tol: f64) -> Result<Self> {
        validate_density(&assemble(lambda, frame), tol)
    }

    /// Wraps a matrix already known to be a state (e.g. an integrator output).
    pub(crate) fn unchecked(mat: CMatrix) -> Self {
        Self(mat)
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self(linalg::identity(n).unscale(n as f64))
    }
}

/// `sum_j lambda_j u_j u_j^dagger`.
pub fn assemble(lambda: &[f64], frame: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(frame.nrows(), frame.nrows());
    for (j, l) in lambda.iter().enumerate() {
        out += linalg::column_projector(frame, j).scale(*l);
    }
    out
}

pub fn validate_density(mat: &CMatrix, tol: f64) -> Result<DensityMatrix> {
    check_square(mat)?;
    let scale = linalg::fro(mat).max(1.0);
    let residual = hermitian_residual(mat);
    if residual > tol * scale {
        return Err(Error::NotHermitian { residual });
    }
    let sym = linalg::hermitian_part(mat);
    let trace = linalg::trace(&sym).re;
    let eig = hermitian_eigen(&sym, 0.0)?;
    let min = eig.values.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -tol * scale {
        return Err(Error::NegativeEigenvalue { eigenvalue: min });
    }
    if (trace - 1.0).abs() > tol * scale {
        return Err(Error::TraceNotOne { trace, residual: (trace - 1.0).abs() });
    }
    Ok(DensityMatrix(sym))
}

pub fn apply_dissipator(sys: &LindbladSystem, rho: &CMatrix) -> Result<CMatrix> {
    check_dim(rho, sys.dim())?;
    Ok(dissipator_unchecked(sys.ops(), rho))
}

pub(crate) fn dissipator_unchecked(ops: &[CMatrix], rho: &CMatrix) -> CMatrix {
    let n = rho.nrows();
    let mut out = CMatrix::zeros(n, n);
    for l in ops {
        let ld = l.adjoint();
        out += l * rho * &ld;
        out -= anticommutator(&(&ld * l), rho).scale(0.5);
    }
    out
}

/// Full generator value `-i[H, rho] + L_D(rho)`.
pub fn apply_lindblad(sys: &LindbladSystem, h: &CMatrix, rho: &CMatrix) -> Result<CMatrix> {
    check_dim(rho, sys.dim())?;
    check_dim(h, sys.dim())?;
    let residual = hermitian_residual(h);
    if residual > DEFAULT_HERMITICITY_TOL * linalg::fro(h).max(1.0) {
        return Err(Error::NotHermitian { residual });
    }
    Ok(lindblad_unchecked(sys, h, rho))
}

pub(crate) fn lindblad_unchecked(sys: &LindbladSystem, h: &CMatrix, rho: &CMatrix) -> CMatrix {
    let mut out = dissipator_unchecked(sys.ops(), rho);
    let total = match sys.drift() {
        Some(d) => h + d,
        None => h.clone(),
    };
    out += linalg::commutator(&total, rho) * (-I);
    out
}

/// Eigenvalues (non-increasing), eigenframe and distinct-eigenvalue groups.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub lambda: RVector,
    pub frame: CMatrix,
    pub groups: Vec<Vec<usize>>,
}

impl SpectralDecomposition {
    /// Eigenprojector `P_alpha` of group `alpha`.
    pub fn group_projector(&self, alpha: usize) -> CMatrix {
        let n = self.frame.nrows();
        let mut p = CMatrix::zeros(n, n);
        for &j in &self.groups[alpha] {
            p += linalg::column_projector(&self.frame, j);
        }
        p
    }

    /// Mean eigenvalue of group `alpha`.
    pub fn group_value(&self, alpha: usize) -> f64 {
        let g = &self.groups[alpha];
        g.iter().map(|&j| self.lambda[j]).sum::<f64>() / g.len() as f64
    }

    pub fn reassemble(&self) -> CMatrix {
        assemble(self.lambda.as_slice(), &self.frame)
    }
}

pub fn spectral_decompose(rho: &DensityMatrix, crossing_tol: f64) -> Result<SpectralDecomposition> {
    hermitian_decompose(rho.matrix(), crossing_tol)
}

/// Same as [`spectral_decompose`] for any Hermitian matrix.
pub fn hermitian_decompose(a: &CMatrix, crossing_tol: f64) -> Result<SpectralDecomposition> {
    let e = hermitian_eigen(a, crossing_tol)?;
    Ok(SpectralDecomposition { lambda: e.values, frame: e.vectors, groups: e.groups })
}

/// `1/2 sum_k |lambda_k(a - b)|`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    trace_distance_raw(a.matrix(), b.matrix())
}

pub fn trace_distance_raw(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: b.nrows() });
    }
    let e = hermitian_eigen(&(a - b), 0.0)?;
    Ok(0.5 * e.values.iter().map(|v| v.abs()).sum::<f64>())
}
