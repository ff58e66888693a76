//! Minimal dense state-vector core.
//!
//! Qubit ordering convention, used everywhere in this crate: qubit index 0
//! is the *leftmost* ket label, i.e. the most significant bit of an
//! amplitude index. `|+0>` therefore has qubit 0 in `|+>` and qubit 1 in
//! `|0>`, with amplitudes `(1/sqrt(2), 0, 1/sqrt(2), 0)`.
//!
//! All values are immutable after construction; operations return new
//! values and are pure except for consuming a caller-supplied randomness
//! source. Measurement samples by inverse CDF over exactly the branch
//! probabilities that [`StateVector::branch_probabilities`] reports, so
//! the exact enumeration oracle and the Monte Carlo sampler share one
//! probability computation.

mod density;
mod state;
mod unitary;

pub use density::{reduced_density, trace_distance, DensityMatrix};
pub use state::{ket, measurement_branches, Bit, StateVector};
pub use unitary::{controlled_ry, UnitaryMatrix};

use serde::{Deserialize, Serialize};

/// A complex amplitude. Finiteness is enforced by every public
/// constructor that accepts raw amplitudes.
pub type Amplitude = num_complex::Complex64;

/// Norm / hermiticity / unitarity tolerance.
pub const NORM_TOL: f64 = 1e-9;

/// Positive-semidefiniteness tolerance for density matrices.
pub const PSD_TOL: f64 = 1e-7;

/// Measurement basis: computational (sigma_z) or Hadamard (sigma_x).
///
/// Measured bits map as 0 <-> `|0>` or `|+>`, 1 <-> `|1>` or `|->`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisKind {
    Z,
    X,
}
