//! Classical fixed-step fourth-order Runge-Kutta.

use crate::linalg::{CMatrix, RVector, C64};

pub trait OdeState: Clone {
    /// `self + a * other`
    fn axpy(&self, a: f64, other: &Self) -> Self;
}

impl OdeState for RVector {
    fn axpy(&self, a: f64, other: &Self) -> Self {
        self + other * a
    }
}

impl OdeState for CMatrix {
    fn axpy(&self, a: f64, other: &Self) -> Self {
        self + other * C64::new(a, 0.0)
    }
}

/// One RK4 step of `y' = f(t, y)`.
pub fn rk4_step<S, F>(f: &mut F, t: f64, y: &S, h: f64) -> S
where
    S: OdeState,
    F: FnMut(f64, &S) -> S,
{
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &y.axpy(0.5 * h, &k1));
    let k3 = f(t + 0.5 * h, &y.axpy(0.5 * h, &k2));
    let k4 = f(t + h, &y.axpy(h, &k3));
    y.axpy(h / 6.0, &k1).axpy(h / 3.0, &k2).axpy(h / 3.0, &k3).axpy(h / 6.0, &k4)
}

/// Number of equal steps of size at most `step` covering `len`.
pub fn step_count(len: f64, step: f64) -> usize {
    ((len / step) - 1e-9).ceil().max(1.0) as usize
}
