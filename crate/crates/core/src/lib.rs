//! # bures-geo
//!
//! Geodesics of the Bures metric between mixed quantum states, the
//! purification picture that realizes them as great circles, and the
//! metrology built on top of that picture.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense complex matrices, a Jacobi Hermitian eigensolver,
//!   square roots, polar decomposition and partial traces.
//! - [`states`]: validated density matrices, purifications, fidelity, the
//!   Bures metric, the symmetric logarithmic derivative and the
//!   horizontal/vertical split of purification-space tangents.
//! - [`geodesics`]: every geodesic joining two invertible states, evaluation,
//!   boundary intersections, time shift, plus the commuting and pure-target
//!   closed forms.
//! - [`evolution`]: the rank-two geodesic Hamiltonian, its closed-form
//!   propagator, the induced channel family and qubit circuits that realize
//!   it.
//! - [`metrology`]: classical and quantum Fisher information, the optimal
//!   measurement for geodesic families, maximum-likelihood experiments and
//!   the Heisenberg scan.
//! - [`acceptance`]: the end-to-end checks shared by the test suite and the
//!   `selfcheck` subcommand.
//!
//! ```
//! use bures_geo::states::{fidelity, DensityMatrix};
//!
//! let rho = DensityMatrix::from_diagonal(&[0.7, 0.3]).unwrap();
//! let sigma = DensityMatrix::from_diagonal(&[0.4, 0.6]).unwrap();
//! let f = fidelity(&rho, &sigma);
//! assert!((f - (0.28f64.sqrt() + 0.18f64.sqrt()).powi(2)).abs() < 1e-12);
//! ```

pub mod acceptance;
pub mod evolution;
pub mod geodesics;
pub mod linalg;
pub mod metrology;
pub mod random;
pub mod states;
pub mod tol;

pub use num_complex::Complex64 as C64;

/// Failure modes shared by every module.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (relative deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("trace is {0}, expected 1")]
    InvalidTrace(f64),

    #[error("operator is not traceless (trace {0:.3e})")]
    NotTraceless(f64),

    #[error("matrix is rank deficient (smallest pivot or singular value {0:.3e})")]
    RankDeficient(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("state is singular (smallest eigenvalue {0:.3e})")]
    SingularState(f64),

    #[error("ancilla dimension {n_a} is below the state rank {rank}")]
    AncillaTooSmall { n_a: usize, rank: usize },

    #[error("purification has Schmidt rank {rank} < {n}")]
    RankDeficientSchmidt { rank: usize, n: usize },

    #[error("iteration did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("sign vector splits a degenerate eigenvalue cluster of |sqrt(sigma) sqrt(rho)|; clusters: {clusters}")]
    DegenerateLambda { clusters: String },

    #[error("endpoint states coincide")]
    StatesEqual,

    #[error("states do not commute (commutator norm {0:.3e})")]
    NonCommuting(f64),

    #[error("target vector is orthogonal to the support of the state")]
    OrthogonalTarget,

    #[error("parameter lies on a boundary intersection of the geodesic")]
    AtBoundary,

    #[error("tangent is not horizontal (vertical norm {0:.3e})")]
    NotHorizontal(f64),

    #[error("tangent is not orthogonal to the base vector (overlap {0:.3e})")]
    NotOrthogonal(f64),

    #[error("vector is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("base vector is not a product state")]
    NotProductBase,

    #[error("dimension {0} is not a power of two")]
    DimensionNotPowerOfTwo(usize),

    #[error("{qubits} qubits requested, limit is {limit}")]
    TooManyQubits { qubits: usize, limit: usize },

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("invalid measurement: {0}")]
    InvalidPovm(String),

    #[error("extreme eigenvalues of the Hamiltonian are degenerate")]
    DegenerateExtremes,

    #[error("likelihood is flat: every outcome was identical")]
    DegenerateLikelihood,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Coarse classification used to map errors onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed or invalid input data.
    Input,
    /// A numerical routine broke down.
    Numerical,
    /// Valid data that violates a mathematical precondition.
    Precondition,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            DimensionMismatch { .. }
            | NotHermitian(_)
            | NotPsd(_)
            | InvalidTrace(_)
            | NotTraceless(_)
            | NotNormalized(_)
            | InvalidCircuit(_)
            | InvalidPovm(_)
            | InvalidInput(_)
            | DimensionNotPowerOfTwo(_)
            | TooManyQubits { .. } => ErrorClass::Input,
            Numerical(_) | ConvergenceFailure(_) => ErrorClass::Numerical,
            _ => ErrorClass::Precondition,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
