//! The eigenvalue simplex, its isometric projection to `R^{n-1}` and the
//! Weyl-chamber structure.

use crate::error::{Error, Result};
use crate::linalg::{RMatrix, RVector};

pub const SIMPLEX_TOL: f64 = 1e-9;

/// The isometry `x = Pi Lambda` centred on the maximally mixed spectrum.
///
/// Row `j` (zero-based) is `(1, ..., 1, -(j+1), 0, ...) / sqrt((j+1)(j+2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMap {
    dim: usize,
    pi: RMatrix,
    iota: RVector,
}

pub fn build_projection(n: usize) -> Result<ProjectionMap> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let mut pi = RMatrix::zeros(n - 1, n);
    for j in 0..n - 1 {
        let k = (j + 1) as f64;
        let norm = 1.0 / (k * (k + 1.0)).sqrt();
        for i in 0..=j {
            pi[(j, i)] = norm;
        }
        pi[(j, j + 1)] = -k * norm;
    }
    Ok(ProjectionMap { dim: n, pi, iota: RVector::from_element(n, 1.0 / n as f64) })
}

/// A spectrum together with its projected coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPoint {
    pub lambda: RVector,
    pub x: RVector,
}

impl ProjectionMap {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.pi
    }

    pub fn iota(&self) -> &RVector {
        &self.iota
    }

    pub fn project(&self, lambda: &RVector) -> Result<SpectrumPoint> {
        if lambda.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: lambda.len() });
        }
        let residual = (lambda.sum() - 1.0).abs();
        if residual > SIMPLEX_TOL {
            return Err(Error::NotOnSimplexHyperplane { residual });
        }
        Ok(SpectrumPoint { lambda: lambda.clone(), x: &self.pi * lambda })
    }

    /// `Pi v` without the hyperplane check (used for tangent vectors).
    pub fn apply(&self, v: &RVector) -> RVector {
        &self.pi * v
    }

    /// `iota + Pi^T x`. Not clamped to the simplex.
    pub fn lift(&self, x: &RVector) -> RVector {
        &self.iota + self.pi.transpose() * x
    }

    /// Projected vertices of the simplex (pure states), in basis order.
    pub fn vertices(&self) -> Vec<RVector> {
        (0..self.dim).map(|k| self.pi.column(k).into_owned()).collect()
    }
}

/// A permutation `sigma` stored as its image list: `sigma.v = (v[sigma[0]], v[sigma[1]], ...)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Permutation(pub Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn apply(&self, v: &RVector) -> RVector {
        RVector::from_iterator(v.len(), self.0.iter().map(|&k| v[k]))
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(j, &k)| j == k)
    }
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Permutation> {
    use itertools::Itertools;
    (0..n).permutations(n).map(Permutation).collect()
}

/// The permutation sorting `lambda` into non-increasing order (stable on ties).
pub fn weyl_chamber(lambda: &RVector) -> Permutation {
    let mut idx: Vec<usize> = (0..lambda.len()).collect();
    idx.sort_by(|&a, &b| lambda[b].partial_cmp(&lambda[a]).unwrap_or(std::cmp::Ordering::Equal));
    Permutation(idx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    /// `lambda_n = 0`.
    LowestVanishes,
    /// `lambda_j = lambda_{j+1}` (zero-based `j`).
    Crossing(usize),
}

/// A facet of the ordered chamber with its signed-distance evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChamberFace {
    pub kind: FaceKind,
}

impl ChamberFace {
    /// Signed distance in `R^n`; non-negative inside the ordered chamber.
    pub fn signed_distance(&self, lambda: &RVector) -> f64 {
        match self.kind {
            FaceKind::LowestVanishes => lambda[lambda.len() - 1],
            FaceKind::Crossing(j) => (lambda[j] - lambda[j + 1]) / std::f64::consts::SQRT_2,
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            FaceKind::LowestVanishes => "lambda_n=0".to_string(),
            FaceKind::Crossing(j) => format!("lambda_{}=lambda_{}", j + 1, j + 2),
        }
    }
}

pub fn chamber_faces(n: usize) -> Result<Vec<ChamberFace>> {
    if n < 2 {
        return Err(Error::InvalidDimension(n));
    }
    let mut faces = vec![ChamberFace { kind: FaceKind::LowestVanishes }];
    faces.extend((0..n - 1).map(|j| ChamberFace { kind: FaceKind::Crossing(j) }));
    Ok(faces)
}

/// Number of points of [`simplex_lattice`].
pub fn lattice_size(n: usize, resolution: usize) -> usize {
    let mut num = 1u128;
    let mut den = 1u128;
    for k in 1..n {
        num *= (resolution + k) as u128;
        den *= k as u128;
    }
    (num / den) as usize
}

/// Integer compositions `(i_1..i_n)` with `sum = resolution`, lexicographically
/// descending in `i_1`, then `i_2`, ...
pub fn simplex_lattice(n: usize, resolution: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, left: usize, slots: usize, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for i in (0..=left).rev() {
            prefix.push(i);
            rec(prefix, left - i, slots - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::with_capacity(lattice_size(n, resolution));
    if n > 0 {
        rec(&mut Vec::with_capacity(n), resolution, n, &mut out);
    }
    out
}
