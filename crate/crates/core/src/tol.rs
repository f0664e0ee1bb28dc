//! Numerical tolerances used throughout the crate.
//!
//! Every threshold that decides a branch (rank, degeneracy, horizontality)
//! lives here so the acceptance suite and the library agree on them.

/// Relative Frobenius deviation from Hermiticity accepted on input.
pub const HERMITIAN: f64 = 1e-10;

/// Most negative eigenvalue clamped to zero before taking roots.
pub const PSD: f64 = 1e-10;

/// Deviation of the trace from one accepted for density matrices.
pub const TRACE: f64 = 1e-10;

/// Eigenvalues at or below this are treated as zero when counting rank.
pub const RANK: f64 = 1e-9;

/// Eigenvalues closer than this form one degenerate cluster.
pub const DEGENERATE: f64 = 1e-8;

/// Vertical component allowed in a horizontal tangent, relative to its norm.
pub const HORIZONTAL: f64 = 1e-8;

/// Real overlap allowed between a base vector and a tangent vector.
pub const TANGENT: f64 = 1e-10;

/// Outcome probabilities below this are dropped from Fisher sums.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Relative step of central finite differences, scaled by `max(1, |x|)`.
pub const FD_STEP: f64 = 1e-5;

/// Iteration cap of the Uhlmann alternating maximization.
pub const UHLMANN_MAX_ITER: usize = 200;

/// Change in overlap below which the Uhlmann iteration stops.
pub const UHLMANN_STOP: f64 = 1e-12;

/// Largest qubit count accepted by the statevector simulator.
pub const MAX_QUBITS: usize = 12;

/// Finite-difference step for `x` under the crate convention.
pub fn fd_step(x: f64) -> f64 {
    FD_STEP * x.abs().max(1.0)
}
