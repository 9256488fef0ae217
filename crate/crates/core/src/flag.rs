//! Complete flags stored as unitary frames, and piecewise-geodesic flag paths.

use crate::error::{Error, Result};
use crate::linalg::{self, column_projector, unitarity_residual, CMatrix};
use crate::simplex::Permutation;

pub const UNITARY_TOL: f64 = 1e-10;
/// Projector jump above which two consecutive segments are considered disconnected.
pub const CONTINUITY_TOL: f64 = 1e-8;

/// A complete flag: column `j` of the unitary frame spans the image of `pi_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Flag {
    frame: CMatrix,
}

impl Flag {
    pub fn new(frame: CMatrix) -> Result<Self> {
        linalg::check_square(&frame)?;
        let residual = unitarity_residual(&frame);
        if residual > UNITARY_TOL {
            return Err(Error::NonUnitaryFlag { residual });
        }
        Ok(Self { frame })
    }

    pub fn identity(n: usize) -> Self {
        Self { frame: linalg::identity(n) }
    }

    pub fn dim(&self) -> usize {
        self.frame.nrows()
    }

    pub fn frame(&self) -> &CMatrix {
        &self.frame
    }

    pub fn projector(&self, j: usize) -> CMatrix {
        column_projector(&self.frame, j)
    }

    pub fn projectors(&self) -> Vec<CMatrix> {
        (0..self.dim()).map(|j| self.projector(j)).collect()
    }

    /// Column `j` of the result is column `sigma[j]` of `self`.
    pub fn permuted(&self, sigma: &Permutation) -> Self {
        let mut frame = self.frame.clone();
        for (j, &k) in sigma.0.iter().enumerate() {
            frame.set_column(j, &self.frame.column(k));
        }
        Self { frame }
    }

    /// `exp(t h) U` for an anti-Hermitian generator `h`.
    pub fn rotated(&self, h: &CMatrix, t: f64) -> Self {
        let g = (h * linalg::c(t)).exp();
        Self { frame: g * &self.frame }
    }

    /// Largest Frobenius distance between corresponding projectors.
    pub fn projector_distance(&self, other: &Flag) -> f64 {
        (0..self.dim()).map(|j| linalg::fro(&(self.projector(j) - other.projector(j)))).fold(0.0, f64::max)
    }
}

/// `frame(t) = exp((t - t_start) h) U_0` on one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagSegment {
    pub start: Flag,
    /// Anti-Hermitian generator.
    pub generator: CMatrix,
    pub duration: f64,
}

impl FlagSegment {
    pub fn frame_at(&self, local_t: f64) -> Flag {
        self.start.rotated(&self.generator, local_t)
    }

    /// Frame derivative `h U(t)`.
    pub fn frame_dot(&self, frame: &Flag) -> CMatrix {
        &self.generator * frame.frame()
    }
}

/// Flag path made of geodesic segments starting at `t = 0`.
///
/// Constant paths are single segments with a zero generator; sampled tables
/// are converted to geodesic interpolation between the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagPath {
    segments: Vec<FlagSegment>,
    /// Times where the frame may jump (fast unitary splices).
    discontinuities: Vec<f64>,
}

impl FlagPath {
    pub fn new(segments: Vec<FlagSegment>, discontinuities: Vec<f64>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidArgument("flag path needs at least one segment".into()));
        }
        let n = segments[0].start.dim();
        for s in &segments {
            if !(s.duration > 0.0) {
                return Err(Error::InvalidArgument(format!("segment duration {} must be > 0", s.duration)));
            }
            linalg::check_dim(&s.generator, n)?;
            if s.start.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: s.start.dim() });
            }
            let residual = linalg::fro(&(&s.generator + s.generator.adjoint()));
            if residual > 1e-10 * linalg::fro(&s.generator).max(1.0) {
                return Err(Error::TangentNotAntiHermitian { residual });
            }
        }
        let mut discontinuities = discontinuities;
        discontinuities.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { segments, discontinuities })
    }

    pub fn constant(flag: Flag, duration: f64) -> Result<Self> {
        let n = flag.dim();
        Self::new(vec![FlagSegment { start: flag, generator: CMatrix::zeros(n, n), duration }], vec![])
    }

    pub fn geodesic(start: Flag, generator: CMatrix, duration: f64) -> Result<Self> {
        Self::new(vec![FlagSegment { start, generator, duration }], vec![])
    }

    /// Geodesic interpolation through `(time, frame)` samples; times must start at 0
    /// and increase strictly.
    pub fn sampled(times: &[f64], frames: &[Flag]) -> Result<Self> {
        if times.len() != frames.len() || times.len() < 2 {
            return Err(Error::InvalidArgument("need at least two matching samples".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidArgument("sampled flag path must start at t = 0".into()));
        }
        let mut segments = Vec::with_capacity(times.len() - 1);
        for k in 0..times.len() - 1 {
            let dt = times[k + 1] - times[k];
            if !(dt > 0.0) {
                return Err(Error::InvalidArgument("sample times must increase".into()));
            }
            let w = frames[k + 1].frame() * frames[k].frame().adjoint();
            let h = linalg::unitary_log_hamiltonian(&w)?;
            segments.push(FlagSegment {
                start: frames[k].clone(),
                generator: h * (-linalg::I / linalg::c(dt)),
                duration: dt,
            });
        }
        Self::new(segments, vec![])
    }

    pub fn dim(&self) -> usize {
        self.segments[0].start.dim()
    }

    pub fn segments(&self) -> &[FlagSegment] {
        &self.segments
    }

    pub fn discontinuities(&self) -> &[f64] {
        &self.discontinuities
    }

    pub fn duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Start times of all segments.
    pub fn segment_starts(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.segments
            .iter()
            .map(|s| {
                let start = t;
                t += s.duration;
                start
            })
            .collect()
    }

    /// Segment index and local time for `t` (right-continuous at boundaries,
    /// clamped to the path's time range).
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let starts = self.segment_starts();
        let mut idx = starts.partition_point(|&s| s <= t).saturating_sub(1);
        if idx >= self.segments.len() {
            idx = self.segments.len() - 1;
        }
        let local = (t - starts[idx]).clamp(0.0, self.segments[idx].duration);
        (idx, local)
    }

    /// Frame and frame derivative at `t`.
    pub fn at(&self, t: f64) -> (Flag, CMatrix) {
        let (idx, local) = self.locate(t);
        let seg = &self.segments[idx];
        let f = seg.frame_at(local);
        let d = seg.frame_dot(&f);
        (f, d)
    }

    pub fn is_marked(&self, t: f64) -> bool {
        self.discontinuities.iter().any(|d| (d - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    /// Fails on any projector jump between segments at an unmarked time.
    pub fn check_continuity(&self) -> Result<()> {
        let starts = self.segment_starts();
        for k in 1..self.segments.len() {
            let prev = &self.segments[k - 1];
            let end = prev.frame_at(prev.duration);
            let jump = end.projector_distance(&self.segments[k].start);
            if jump > CONTINUITY_TOL && !self.is_marked(starts[k]) {
                return Err(Error::FlagPathDiscontinuityUnmarked { time: starts[k], jump });
            }
        }
        Ok(())
    }
}
