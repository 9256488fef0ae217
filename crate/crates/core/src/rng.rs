//! Reproducible random systems, states and unitaries.
//!
//! The generator is ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`). A
//! uniform double is `(next_u64 >> 11) * 2^-53`, Gaussians use Box-Muller on
//! two such draws, so the sequences are fixed across platforms.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{c, hermitian_part, CMatrix, RVector, C64};
use crate::model::LindbladSystem;

pub struct SeededRng(ChaCha8Rng);

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn complex_gaussian(&mut self) -> C64 {
        C64::new(self.gaussian(), self.gaussian()) * std::f64::consts::FRAC_1_SQRT_2
    }

    /// Entries with real and imaginary parts uniform on `[0, magnitude)`,
    /// filled row-major, real part first.
    pub fn uniform_matrix(&mut self, n: usize, magnitude: f64) -> CMatrix {
        let mut m = CMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                let re = self.uniform_in(0.0, magnitude);
                let im = self.uniform_in(0.0, magnitude);
                m[(a, b)] = C64::new(re, im);
            }
        }
        m
    }

    /// Entries with real and imaginary parts uniform on `[-magnitude, magnitude)`.
    pub fn centered_matrix(&mut self, n: usize, magnitude: f64) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| {
            let re = self.uniform_in(-magnitude, magnitude);
            let im = self.uniform_in(-magnitude, magnitude);
            C64::new(re, im)
        })
    }

    /// Haar-distributed unitary (QR of a complex Ginibre matrix with the
    /// diagonal phases of R removed).
    pub fn unitary(&mut self, n: usize) -> CMatrix {
        let g = CMatrix::from_fn(n, n, |_, _| self.complex_gaussian());
        let qr = g.qr();
        let (mut q, r) = (qr.q(), qr.r());
        for j in 0..n {
            let d = r[(j, j)];
            let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0) };
            let mut col = q.column_mut(j);
            col *= phase;
        }
        q
    }

    pub fn hermitian(&mut self, n: usize, scale: f64) -> CMatrix {
        hermitian_part(&CMatrix::from_fn(n, n, |_, _| self.complex_gaussian() * scale))
    }

    /// Anti-Hermitian generator `i * Hermitian`.
    pub fn anti_hermitian(&mut self, n: usize, scale: f64) -> CMatrix {
        self.hermitian(n, scale) * crate::linalg::I
    }

    /// A point of the open simplex (normalised exponentials).
    pub fn simplex_point(&mut self, n: usize) -> RVector {
        let v = RVector::from_fn(n, |_, _| -(1.0 - self.uniform()).ln());
        let s = v.sum();
        v / s
    }

    pub fn density_matrix(&mut self, n: usize) -> CMatrix {
        let lambda = self.simplex_point(n);
        let u = self.unitary(n);
        crate::model::assemble(lambda.as_slice(), &u)
    }

    /// `count` dense operators with uniform `[0, magnitude)` parts.
    pub fn dense_system(&mut self, n: usize, count: usize, magnitude: f64) -> LindbladSystem {
        let ops = (0..count).map(|_| self.uniform_matrix(n, magnitude)).collect();
        LindbladSystem::new(n, ops).expect("square operators")
    }

    /// `count` dense operators with centred Gaussian entries of the given scale.
    pub fn gaussian_system(&mut self, n: usize, count: usize, scale: f64) -> LindbladSystem {
        let ops = (0..count).map(|_| CMatrix::from_fn(n, n, |_, _| self.complex_gaussian() * scale)).collect();
        LindbladSystem::new(n, ops).expect("square operators")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_residual;

    #[test]
    fn deterministic_streams() {
        let a: Vec<f64> = (0..5)
            .map({
                let mut r = SeededRng::new(42);
                move |_| r.uniform()
            })
            .collect();
        let mut r = SeededRng::new(42);
        let b: Vec<f64> = (0..5).map(|_| r.uniform()).collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|u| (0.0..1.0).contains(u)));
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut r = SeededRng::new(7);
        for n in 2..6 {
            assert!(unitarity_residual(&r.unitary(n)) < 1e-13);
        }
    }
}
