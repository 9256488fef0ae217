//! Strong-local-controllability regions for finite flag control sets.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flag::Flag;
use crate::hull::{self, Membership, Points};
use crate::linalg::{self, CMatrix, RMatrix, RVector};
use crate::model::LindbladSystem;
use crate::orbit::{compute_w, project_field, AffineField, OmegaMatrix};
use crate::simplex::{lattice_size, permutations, simplex_lattice, Permutation, ProjectionMap};

pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-7;
pub const DEFAULT_FACET_SAMPLES_N3: usize = 200;
pub const DEFAULT_FACET_SAMPLES_N4: usize = 15;
pub const MIN_RESOLUTION: usize = 16;

/// `A_iota = sum_k [L_k, L_k^dagger]`, its eigenframe and all column permutations.
#[derive(Debug, Clone)]
pub struct IotaFlagSet {
    pub a_iota: CMatrix,
    pub base_flag: Flag,
    /// `flags[i] = base_flag.permuted(&perms[i])`, lexicographic in `perms`.
    pub flags: Vec<Flag>,
    pub perms: Vec<Permutation>,
    /// Eigenvalues of `A_iota`, non-increasing.
    pub gamma: RVector,
}

pub fn compute_a_iota(sys: &LindbladSystem) -> Result<IotaFlagSet> {
    let n = sys.dim();
    let a_iota = sys.ops().iter().fold(CMatrix::zeros(n, n), |acc, l| acc + linalg::commutator(l, &l.adjoint()));
    let a_iota = linalg::hermitian_part(&a_iota);
    let tol = 1e-9 * linalg::fro(&a_iota).max(1.0);
    let eig = linalg::hermitian_eigen(&a_iota, tol)?;
    let base_flag = Flag::new(eig.vectors)?;
    let perms = permutations(n);
    let flags = perms.iter().map(|p| base_flag.permuted(p)).collect();
    Ok(IotaFlagSet { a_iota, base_flag, flags, perms, gamma: eig.values })
}

/// `(1/n) sigma.Gamma` for every permutation, in the order of `set.flags`.
pub fn tangent_set_at_iota(set: &IotaFlagSet) -> Vec<RVector> {
    let n = set.gamma.len() as f64;
    set.perms.iter().map(|p| p.apply(&set.gamma) / n).collect()
}

/// Largest finite-difference derivative of `w` at (up to six of) the iota flags along
/// `directions` random off-diagonal anti-Hermitian tangents.
pub fn criticality_residual(
    sys: &LindbladSystem,
    set: &IotaFlagSet,
    rng: &mut crate::rng::SeededRng,
    directions: usize,
) -> Result<f64> {
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for flag in set.flags.iter().take(6) {
        for _ in 0..directions {
            let h = crate::orbit::tangent_projection(flag, &rng.anti_hermitian(sys.dim(), 1.0));
            let plus = compute_w(sys, &flag.rotated(&h, eps))?.w;
            let minus = compute_w(sys, &flag.rotated(&h, -eps))?.w;
            worst = worst.max(((plus - minus) / (2.0 * eps)).norm());
        }
    }
    Ok(worst)
}

/// Field of one flag of the control set.
#[derive(Debug, Clone)]
pub struct FieldEntry {
    /// Index of the flag in the list given to [`build_field_set`].
    pub source: usize,
    pub flag: Flag,
    pub omega: OmegaMatrix,
    pub field: AffineField,
    pub det: f64,
    pub invertible: bool,
}

impl FieldEntry {
    /// `b + A x`.
    pub fn tangent(&self, x: &RVector) -> RVector {
        self.field.eval(x)
    }
}

#[derive(Debug, Clone)]
pub struct FlagFieldSet {
    pub map: ProjectionMap,
    pub entries: Vec<FieldEntry>,
    /// `(dropped source index, kept entry index)` for fields removed as duplicates.
    pub duplicates: Vec<(usize, usize)>,
    /// `max_J (|b_J| + |A_J|_F)`.
    pub scale: f64,
}

impl FlagFieldSet {
    pub fn dim(&self) -> usize {
        self.map.dim()
    }

    /// Entry indices usable in `B` maps.
    pub fn invertible(&self) -> Vec<usize> {
        (0..self.entries.len()).filter(|&i| self.entries[i].invertible).collect()
    }

    /// Tangent vectors `b_J + A_J x` of all entries, flattened row-major.
    pub fn tangents(&self, x: &RVector) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.entries.len() * x.len());
        for e in &self.entries {
            out.extend(e.tangent(x).iter());
        }
        out
    }
}

fn is_invertible(a: &RMatrix, det: f64) -> bool {
    let d = a.nrows();
    if d == 0 {
        return false;
    }
    det.abs() > 1e-12 * a.norm().powi(d as i32)
}

/// Fields `(b_J, A_J)` of every flag. With `dedup`, flags whose fields agree
/// with an earlier one to `1e-12` (relative) are dropped and reported.
pub fn build_field_set(sys: &LindbladSystem, flags: &[Flag], dedup: bool) -> Result<FlagFieldSet> {
    let map = crate::simplex::build_projection(sys.dim())?;
    let mut entries: Vec<FieldEntry> = Vec::with_capacity(flags.len());
    let mut duplicates = Vec::new();
    for (source, flag) in flags.iter().enumerate() {
        let omega = compute_w(sys, flag)?;
        let field = project_field(&map, &omega)?;
        if dedup {
            let mag = field.b.norm() + field.a.norm();
            let same = entries.iter().position(|e| {
                (&e.field.b - &field.b).norm() + (&e.field.a - &field.a).norm() <= 1e-12 * mag.max(1e-300)
                    || (mag == 0.0 && e.field.b.norm() + e.field.a.norm() == 0.0)
            });
            if let Some(kept) = same {
                duplicates.push((source, kept));
                continue;
            }
        }
        let det = field.a.determinant();
        let invertible = is_invertible(&field.a, det);
        entries.push(FieldEntry { source, flag: flag.clone(), omega, field, det, invertible });
    }
    let scale = entries.iter().map(|e| e.field.b.norm() + e.field.a.norm()).fold(0.0, f64::max);
    Ok(FlagFieldSet { map, entries, duplicates, scale })
}

/// `B(s) = -(sum s_J A_J)^{-1} (sum s_J b_J)` over the entries in `subset`.
pub fn b_map(fields: &FlagFieldSet, subset: &[usize], s: &RVector) -> Result<RVector> {
    if subset.len() != s.len() || subset.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "subset of {} flags needs as many weights, got {}",
            subset.len(),
            s.len()
        )));
    }
    if let Some(&bad) = subset.iter().find(|&&j| j >= fields.entries.len()) {
        return Err(Error::InvalidArgument(format!("flag index {bad} out of range")));
    }
    let d = fields.dim() - 1;
    let mut a = RMatrix::zeros(d, d);
    let mut b = RVector::zeros(d);
    for (&j, &w) in subset.iter().zip(s.iter()) {
        a += &fields.entries[j].field.a * w;
        b += &fields.entries[j].field.b * w;
    }
    let lu = a.clone().lu();
    let det = lu.determinant();
    if !is_invertible(&a, det) {
        return Err(Error::SingularCombination { s: s.iter().copied().collect() });
    }
    lu.solve(&(-b)).ok_or_else(|| Error::SingularCombination { s: s.iter().copied().collect() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySample {
    /// Weights of the generating subset (a point of the facet simplex).
    pub s: Vec<f64>,
    pub x: RVector,
    /// Distance from the origin to the hull of the subset's tangents at `x`.
    pub residual: f64,
}

/// `B` restricted to one facet of the parameter simplex: an arc for `n = 3`,
/// a triangulated surface for `n = 4`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCandidate {
    pub id: usize,
    /// Entry indices of the `n - 1` generating flags.
    pub subset: Vec<usize>,
    pub samples: Vec<BoundarySample>,
    /// Triangles over `samples` (surface candidates only).
    pub triangles: Vec<[usize; 3]>,
    /// Facet points where the weighted matrix was singular.
    pub singular_samples: usize,
}

impl BoundaryCandidate {
    pub fn max_residual(&self) -> f64 {
        self.samples.iter().map(|s| s.residual).fold(0.0, f64::max)
    }
}

/// Triangles of the barycentric lattice of a 2-simplex, indexed into
/// [`simplex_lattice`]`(3, res)` order.
fn lattice_triangles(res: usize) -> Vec<[usize; 3]> {
    let pts = simplex_lattice(3, res);
    let index = |i: usize, j: usize| pts.iter().position(|p| p[0] == i && p[1] == j).expect("lattice point");
    let mut tris = Vec::new();
    for i in 0..res {
        for j in 0..res - i {
            tris.push([index(i, j), index(i + 1, j), index(i, j + 1)]);
            if i + j + 1 < res {
                tris.push([index(i + 1, j), index(i + 1, j + 1), index(i, j + 1)]);
            }
        }
    }
    tris
}

/// Samples `B` over every `(n-1)`-subset of the invertible flags;
/// `samples_per_facet` is the number of points along each facet edge.
pub fn boundary_candidates(fields: &FlagFieldSet, samples_per_facet: usize) -> Result<Vec<BoundaryCandidate>> {
    let n = fields.dim();
    let usable = fields.invertible();
    if usable.len() < n {
        return Err(Error::TooFewFlags { needed: n, have: usable.len() });
    }
    if samples_per_facet < 2 {
        return Err(Error::InvalidArgument("need at least two samples per facet edge".into()));
    }
    let k = n - 1;
    let res = samples_per_facet - 1;
    let lattice = simplex_lattice(k, res);
    let triangles = if k == 3 { lattice_triangles(res) } else { Vec::new() };
    let mut subsets = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        subsets.push(idx.iter().map(|&i| usable[i]).collect::<Vec<_>>());
        if !hull::next_combination(&mut idx, usable.len()) {
            break;
        }
    }
    let out = subsets
        .par_iter()
        .enumerate()
        .map(|(id, subset)| {
            let mut samples = Vec::with_capacity(lattice.len());
            let mut singular = 0;
            for p in &lattice {
                let s = RVector::from_iterator(k, p.iter().map(|&i| i as f64 / res as f64));
                match b_map(fields, subset, &s) {
                    Ok(x) => {
                        let mut tangents = Vec::with_capacity(k * (n - 1));
                        for &j in subset {
                            tangents.extend(fields.entries[j].tangent(&x).iter());
                        }
                        let residual = hull::distance(Points::new(n - 1, &tangents), &vec![0.0; n - 1]);
                        samples.push(BoundarySample { s: s.iter().copied().collect(), x, residual });
                    }
                    Err(_) => singular += 1,
                }
            }
            let tris = if singular == 0 { triangles.clone() } else { Vec::new() };
            BoundaryCandidate { id, subset: subset.clone(), samples, triangles: tris, singular_samples: singular }
        })
        .collect();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipReport {
    pub class: Membership,
    /// Entry indices and barycentric weights certifying an interior point.
    pub witness: Option<(Vec<usize>, Vec<f64>)>,
    pub distance: f64,
    pub note: Option<String>,
}

/// Classifies `x` by whether the origin is interior to the hull of the
/// tangents `b_J + A_J x` of all entries. `tol` is relative to `fields.scale`.
pub fn slc_membership(fields: &FlagFieldSet, x: &RVector, tol: f64) -> MembershipReport {
    let d = fields.dim() - 1;
    if fields.scale == 0.0 || fields.entries.is_empty() {
        return MembershipReport {
            class: Membership::Exterior,
            witness: None,
            distance: 0.0,
            note: Some("all flag fields vanish; the tangent hull is empty".into()),
        };
    }
    let tangents = fields.tangents(x);
    let t = hull::classify_origin(Points::new(d, &tangents), tol, fields.scale);
    MembershipReport { class: t.class, witness: t.witness, distance: t.distance, note: None }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    /// Integer barycentric coordinates summing to the resolution.
    pub lattice: Vec<usize>,
    pub lambda: RVector,
    pub x: RVector,
    pub class: Membership,
}

#[derive(Debug, Clone)]
pub struct SlcRegion {
    pub dim: usize,
    pub resolution: usize,
    pub tol: f64,
    pub grid: Vec<GridPoint>,
    pub candidates: Vec<BoundaryCandidate>,
    /// Why no candidates were produced, if so.
    pub candidate_note: Option<String>,
    pub flag_count: usize,
    pub duplicate_count: usize,
}

impl SlcRegion {
    pub fn count(&self, class: Membership) -> usize {
        self.grid.iter().filter(|g| g.class == class).count()
    }
}

/// Classifies every point of the barycentric lattice of the closed simplex
/// and attaches the boundary candidates. Output order is lattice order.
pub fn rasterize_region(
    fields: &FlagFieldSet,
    map: &ProjectionMap,
    resolution: usize,
    tol: f64,
    samples_per_facet: usize,
) -> Result<SlcRegion> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::InvalidArgument(format!("resolution {resolution} is below {MIN_RESOLUTION}")));
    }
    let n = map.dim();
    if n != fields.dim() {
        return Err(Error::DimensionMismatch { expected: fields.dim(), found: n });
    }
    let lattice = simplex_lattice(n, resolution);
    debug_assert_eq!(lattice.len(), lattice_size(n, resolution));
    let grid = lattice
        .into_par_iter()
        .map(|l| {
            let lambda = RVector::from_iterator(n, l.iter().map(|&i| i as f64 / resolution as f64));
            let x = map.apply(&lambda);
            let class = slc_membership(fields, &x, tol).class;
            GridPoint { lattice: l, lambda, x, class }
        })
        .collect();
    let (candidates, candidate_note) = match boundary_candidates(fields, samples_per_facet) {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    Ok(SlcRegion {
        dim: n,
        resolution,
        tol,
        grid,
        candidates,
        candidate_note,
        flag_count: fields.entries.len(),
        duplicate_count: fields.duplicates.len(),
    })
}
