//! Spectral/flag decomposition of finite-dimensional Lindblad dynamics.
//!
//! A density matrix is split into its eigenvalues (a point of the simplex) and
//! its eigenframe (a complete flag). The flag acts as a control variable for
//! the eigenvalue motion `dLambda/dt = Omega^pi Lambda`; this crate provides that
//! machinery, Hamiltonian reconstruction from planned trajectories, and
//! strong-local-controllability regions for finite flag sets.

pub mod error;
pub mod flag;
pub mod hamiltonian;
pub mod hull;
pub mod integrate;
pub mod linalg;
pub mod model;
pub mod orbit;
pub mod rng;
pub mod simplex;
pub mod slc;

pub use error::{Error, Result};
pub use flag::{Flag, FlagPath, FlagSegment};
pub use hamiltonian::{ControlBasis, FlagTrajectory, TransportPlan};
pub use hull::Membership;
pub use linalg::{CMatrix, RMatrix, RVector, C64};
pub use model::{DensityMatrix, LindbladSystem, SpectralDecomposition};
pub use orbit::{AffineField, LambdaTrajectory, OmegaMatrix};
pub use rng::SeededRng;
pub use simplex::{Permutation, ProjectionMap, SpectrumPoint};
pub use slc::{FlagFieldSet, IotaFlagSet, SlcRegion};
