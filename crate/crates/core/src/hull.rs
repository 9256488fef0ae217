//! Small-dimensional convex-hull queries on point sets stored row-major
//! (`m` points of dimension `d` in one flat slice).
//!
//! Distances use Wolfe's minimum-norm-point method; interior witnesses come
//! from exhaustive `(d+1)`-subset barycentric solves in lexicographic order.

/// Pivot threshold relative to the matrix scale.
const PIVOT_TOL: f64 = 1e-14;

/// Gaussian elimination with partial pivoting on a `k x k` row-major matrix.
/// Returns the determinant, or `None` if a pivot is below `tol`.
fn solve_in_place(a: &mut [f64], b: &mut [f64], k: usize, tol: f64) -> Option<f64> {
    let mut det = 1.0;
    for col in 0..k {
        let mut piv = col;
        for r in col + 1..k {
            if a[r * k + col].abs() > a[piv * k + col].abs() {
                piv = r;
            }
        }
        let p = a[piv * k + col];
        if p.abs() <= tol {
            return None;
        }
        if piv != col {
            for c in 0..k {
                a.swap(col * k + c, piv * k + c);
            }
            b.swap(col, piv);
            det = -det;
        }
        det *= p;
        for r in col + 1..k {
            let f = a[r * k + col] / p;
            if f != 0.0 {
                for c in col..k {
                    a[r * k + c] -= f * a[col * k + c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    for r in (0..k).rev() {
        let mut s = b[r];
        for c in r + 1..k {
            s -= a[r * k + c] * b[c];
        }
        b[r] = s / a[r * k + r];
    }
    Some(det)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Point set view.
#[derive(Debug, Clone, Copy)]
pub struct Points<'a> {
    pub d: usize,
    pub coords: &'a [f64],
}

impl<'a> Points<'a> {
    pub fn new(d: usize, coords: &'a [f64]) -> Self {
        assert!(d > 0 && coords.len() % d == 0, "coordinate slice must hold whole points");
        Self { d, coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, j: usize) -> &'a [f64] {
        &self.coords[j * self.d..(j + 1) * self.d]
    }

    pub fn max_norm(&self) -> f64 {
        (0..self.len()).map(|j| dot(self.point(j), self.point(j)).sqrt()).fold(0.0, f64::max)
    }
}

/// Affine minimiser of `|sum a_i u_i|` with `sum a_i = 1` over the points in `set`.
fn affine_min(u: &[f64], d: usize, set: &[usize], scale2: f64, out: &mut Vec<f64>) -> bool {
    let k = set.len() + 1;
    let mut a = vec![0.0; k * k];
    let mut b = vec![0.0; k];
    for (r, &i) in set.iter().enumerate() {
        for (c, &j) in set.iter().enumerate() {
            a[r * k + c] = dot(&u[i * d..(i + 1) * d], &u[j * d..(j + 1) * d]);
        }
        a[r * k + k - 1] = 1.0;
        a[(k - 1) * k + r] = 1.0;
    }
    b[k - 1] = 1.0;
    let tol = PIVOT_TOL * scale2.max(1e-300);
    if solve_in_place(&mut a, &mut b, k, tol).is_none() {
        return false;
    }
    out.clear();
    out.extend_from_slice(&b[..k - 1]);
    true
}

/// Euclidean distance from `p` to the convex hull of `pts`, and the closest point.
pub fn closest_point(pts: Points, p: &[f64]) -> (f64, Vec<f64>) {
    let (d, m) = (pts.d, pts.len());
    if m == 0 {
        return (f64::INFINITY, vec![f64::NAN; d]);
    }
    let mut u = Vec::with_capacity(m * d);
    for j in 0..m {
        u.extend(pts.point(j).iter().zip(p).map(|(a, b)| a - b));
    }
    let row = |j: usize| &u[j * d..(j + 1) * d];
    let scale2 = (0..m).map(|j| dot(row(j), row(j))).fold(0.0, f64::max);
    let closest = |set: &[usize], lam: &[f64]| {
        let mut x = vec![0.0; d];
        for (&j, &l) in set.iter().zip(lam) {
            for (xi, ui) in x.iter_mut().zip(row(j)) {
                *xi += l * ui;
            }
        }
        x
    };
    let first = (0..m).min_by(|&a, &b| dot(row(a), row(a)).partial_cmp(&dot(row(b), row(b))).unwrap()).unwrap();
    let mut set = vec![first];
    let mut lam = vec![1.0];
    let mut x = row(first).to_vec();
    let mut alpha = Vec::new();
    for _ in 0..(20 * m + 100) {
        let xx = dot(&x, &x);
        if xx <= 1e-30 * scale2 {
            break;
        }
        let (j, best) = (0..m).map(|j| (j, dot(&x, row(j)))).min_by(|a, b| a.1.partial_cmp(&b.1).unwrap()).unwrap();
        if best >= xx - 1e-13 * scale2 || set.contains(&j) {
            break;
        }
        set.push(j);
        lam.push(0.0);
        loop {
            if !affine_min(&u, d, &set, scale2, &mut alpha) {
                // affinely dependent support: drop the newest point and stop
                set.pop();
                lam.pop();
                let y = closest(&set, &lam);
                let p2: Vec<f64> = y.iter().zip(p).map(|(a, b)| a + b).collect();
                return (dot(&y, &y).sqrt(), p2);
            }
            if alpha.iter().all(|&a| a > 1e-15) {
                lam.clone_from(&alpha);
                x = closest(&set, &lam);
                break;
            }
            let mut theta = 1.0f64;
            for (l, a) in lam.iter().zip(&alpha) {
                if *a <= 1e-15 {
                    let t = l / (l - a);
                    if t < theta {
                        theta = t;
                    }
                }
            }
            for (l, a) in lam.iter_mut().zip(&alpha) {
                *l = (1.0 - theta) * *l + theta * a;
            }
            let mut k = 0;
            while k < set.len() {
                if lam[k] <= 1e-15 {
                    set.remove(k);
                    lam.remove(k);
                } else {
                    k += 1;
                }
            }
            if set.is_empty() {
                break;
            }
            let s: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|l| *l /= s);
            x = closest(&set, &lam);
        }
        if set.is_empty() {
            break;
        }
    }
    let closest_pt: Vec<f64> = x.iter().zip(p).map(|(a, b)| a + b).collect();
    (dot(&x, &x).sqrt(), closest_pt)
}

pub fn distance(pts: Points, p: &[f64]) -> f64 {
    closest_point(pts, p).0
}

/// Barycentric coordinates of `p` in the simplex spanned by `idx` (`d + 1` points),
/// plus the simplex volume. `None` for affinely dependent subsets.
pub fn barycentric(pts: Points, idx: &[usize], p: &[f64]) -> Option<(Vec<f64>, f64)> {
    let d = pts.d;
    let k = d + 1;
    debug_assert_eq!(idx.len(), k);
    let mut a = vec![0.0; k * k];
    let mut b = vec![0.0; k];
    let mut scale: f64 = 0.0;
    for (c, &j) in idx.iter().enumerate() {
        let v = pts.point(j);
        for r in 0..d {
            let e = v[r] - p[r];
            a[r * k + c] = e;
            scale = scale.max(e.abs());
        }
        a[d * k + c] = 1.0;
    }
    b[d] = 1.0;
    let det = solve_in_place(&mut a, &mut b, k, PIVOT_TOL * scale.max(1e-300))?;
    let fact: f64 = (1..=d).map(|i| i as f64).product();
    Some((b, det.abs() / fact))
}

/// Advances `idx` to the next `k`-combination of `0..m` in lexicographic order.
pub fn next_combination(idx: &mut [usize], m: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < m - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// First `(d+1)`-subset (lexicographic) whose simplex has volume above
/// `volume_tol` and contains `p` with every barycentric coordinate `> tol`.
pub fn interior_witness(pts: Points, p: &[f64], tol: f64, volume_tol: f64) -> Option<(Vec<usize>, Vec<f64>)> {
    let k = pts.d + 1;
    let m = pts.len();
    if m < k {
        return None;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if let Some((s, vol)) = barycentric(pts, &idx, p) {
            if vol > volume_tol && s.iter().all(|&v| v > tol) {
                return Some((idx, s));
            }
        }
        if !next_combination(&mut idx, m) {
            return None;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Membership {
    Interior,
    Boundary,
    Exterior,
}

impl Membership {
    pub fn label(self) -> &'static str {
        match self {
            Membership::Interior => "interior",
            Membership::Boundary => "boundary",
            Membership::Exterior => "exterior",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OriginTest {
    pub class: Membership,
    /// Subset and barycentric coordinates certifying an interior point.
    pub witness: Option<(Vec<usize>, Vec<f64>)>,
    /// Distance from the origin to the hull.
    pub distance: f64,
}

/// Classifies the origin against the hull of `pts`.
///
/// Exterior when the hull distance exceeds `tol * scale`; Interior when a
/// subset witness exists, or when every point `+-10 tol scale e_i` is inside
/// the hull (an interior origin on a shared face of every simplex); Boundary
/// otherwise.
pub fn classify_origin(pts: Points, tol: f64, scale: f64) -> OriginTest {
    let d = pts.d;
    let zero = vec![0.0; d];
    let dist = distance(pts, &zero);
    if !(dist <= tol * scale) || scale == 0.0 {
        return OriginTest { class: Membership::Exterior, witness: None, distance: dist };
    }
    let volume_tol = 1e-12 * scale.powi(d as i32);
    if let Some(w) = interior_witness(pts, &zero, tol, volume_tol) {
        return OriginTest { class: Membership::Interior, witness: Some(w), distance: dist };
    }
    let delta = 10.0 * tol * scale;
    let mut probe = vec![0.0; d];
    let inside = (0..d).all(|i| {
        [delta, -delta].iter().all(|&s| {
            probe.iter_mut().for_each(|v| *v = 0.0);
            probe[i] = s;
            distance(pts, &probe) <= 1e-3 * delta
        })
    });
    let class = if inside { Membership::Interior } else { Membership::Boundary };
    OriginTest { class, witness: None, distance: dist }
}
