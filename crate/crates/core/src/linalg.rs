//! Dense complex helpers shared by the model, dynamics and controllability
//! layers. Everything here works on `nalgebra::DMatrix<Complex64>`.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Matrix unit `e_{jk}` (zero-based indices).
pub fn unit(n: usize, j: usize, k: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m[(j, k)] = c(1.0);
    m
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    let n = values.len();
    let mut m = CMatrix::zeros(n, n);
    for (j, v) in values.iter().enumerate() {
        m[(j, j)] = c(*v);
    }
    m
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

pub fn fro(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermitian_residual(a: &CMatrix) -> f64 {
    fro(&(a - a.adjoint()))
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

pub fn check_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(a.nrows())
}

pub fn check_dim(a: &CMatrix, n: usize) -> Result<()> {
    let m = check_square(a)?;
    if m != n {
        return Err(Error::DimensionMismatch { expected: n, found: m });
    }
    Ok(())
}

/// Rank-one projector `u u^dagger` onto column `j` of `frame`.
pub fn column_projector(frame: &CMatrix, j: usize) -> CMatrix {
    let u = frame.column(j);
    &u * u.adjoint()
}

/// Largest singular value.
pub fn spectral_norm(a: &CMatrix) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    let gram = a.adjoint() * a;
    let eig = SymmetricEigen::new(hermitian_part(&gram));
    eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max).max(0.0).sqrt()
}

/// Eigendecomposition of a Hermitian matrix with deterministic output.
///
/// Eigenvalues are returned in non-increasing order (stable on the solver's
/// index order for ties). Eigenvalues closer than `group_tol` are treated as
/// one eigenspace whose basis is rebuilt from the standard basis vectors by
/// pivoted Gram-Schmidt, so e.g. a diagonal input always yields identity
/// columns. Every column then has its largest-magnitude component made real
/// and positive.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: RVector,
    pub vectors: CMatrix,
    /// Index groups (into `values`) of numerically equal eigenvalues.
    pub groups: Vec<Vec<usize>>,
}

pub fn hermitian_eigen(a: &CMatrix, group_tol: f64) -> Result<HermitianEigen> {
    let n = check_square(a)?;
    let sym = hermitian_part(a);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::EigensolverFailure("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&p, &q| eig.eigenvalues[q].partial_cmp(&eig.eigenvalues[p]).unwrap_or(std::cmp::Ordering::Equal));
    let values = RVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    let groups = group_sorted(values.as_slice(), group_tol);
    for g in groups.iter().filter(|g| g.len() > 1) {
        canonicalize_block(&mut vectors, g);
    }
    for j in 0..n {
        fix_phase(&mut vectors, j);
    }
    Ok(HermitianEigen { values, vectors, groups })
}

/// Transitive-closure grouping of a sorted (non-increasing) sequence.
pub fn group_sorted(values: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (j, v) in values.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (values[*g.last().unwrap()] - v).abs() < tol => g.push(j),
            _ => groups.push(vec![j]),
        }
    }
    groups
}

/// Transitive-closure grouping of an unsorted vector; groups are listed by
/// first member and members keep their original index order.
pub fn group_unsorted(values: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).abs() < tol {
                let (a, b) = (root(&mut label, i), root(&mut label, j));
                if a != b {
                    label[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = root(&mut label, i);
        match slot[r] {
            Some(g) => groups[g].push(i),
            None => {
                slot[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
}

fn canonicalize_block(vectors: &mut CMatrix, cols: &[usize]) {
    let n = vectors.nrows();
    let mut q = CMatrix::zeros(n, cols.len());
    for (k, &c) in cols.iter().enumerate() {
        q.set_column(k, &vectors.column(c));
    }
    let proj = &q * q.adjoint();
    let mut candidates: Vec<DVector<C64>> = (0..n).map(|k| proj.column(k).into_owned()).collect();
    let mut basis: Vec<DVector<C64>> = Vec::with_capacity(cols.len());
    for _ in 0..cols.len() {
        let mut best = 0;
        let mut best_norm = -1.0;
        for (k, v) in candidates.iter().enumerate() {
            let nv = v.norm();
            if nv > best_norm * (1.0 + 1e-12) {
                best = k;
                best_norm = nv;
            }
        }
        let v = candidates[best].unscale(best_norm);
        for w in candidates.iter_mut() {
            let overlap = v.dotc(w);
            *w -= &v * overlap;
        }
        basis.push(v);
    }
    for (k, &c) in cols.iter().enumerate() {
        vectors.set_column(c, &basis[k]);
    }
}

/// Rotate column `j` so its largest-magnitude entry is real positive.
pub fn fix_phase(vectors: &mut CMatrix, j: usize) {
    let col = vectors.column(j);
    let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = col.iter().position(|z| z.norm() >= max * (1.0 - 1e-12)).unwrap_or(0);
    let phase = col[pivot].conj() / col[pivot].norm();
    let mut col = vectors.column_mut(j);
    col *= phase;
    col[pivot] = c(col[pivot].norm());
}

/// Unitarity residual `||U^dagger U - I||_F`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    fro(&(u.adjoint() * u - identity(u.nrows())))
}

/// Hermitian `h` with `exp(-i h) = w` and spectrum of `h` in `[-pi, pi)`,
/// i.e. the eigenphases of `w` are unwrapped into `(-pi, pi]`.
pub fn unitary_log_hamiltonian(w: &CMatrix) -> Result<CMatrix> {
    let n = check_square(w)?;
    let schur = Schur::try_new(w.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::EigensolverFailure("Schur decomposition did not converge".into()))?;
    let (q, t) = schur.unpack();
    let mut theta = CMatrix::zeros(n, n);
    for k in 0..n {
        let mut a = t[(k, k)].arg();
        if a <= -std::f64::consts::PI {
            a += 2.0 * std::f64::consts::PI;
        }
        theta[(k, k)] = c(-a);
    }
    Ok(hermitian_part(&(&q * theta * q.adjoint())))
}

/// `e^{-i h}` for Hermitian `h`.
pub fn unitary_from_hamiltonian(h: &CMatrix) -> CMatrix {
    (h * (-I)).exp()
}

pub fn real_to_complex(a: &RMatrix) -> CMatrix {
    a.map(c)
}
