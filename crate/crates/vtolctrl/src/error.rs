//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is singular to working precision (pivot {pivot:.3e} below tolerance)")]
    SingularMatrix { pivot: f64 },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("matrix is not symmetric: |S - S^T| = {error:.3e} exceeds {tolerance:.3e}")]
    NotSymmetric { error: f64, tolerance: f64 },

    #[error("Lyapunov operator is degenerate: eigenvalue pair sums to {sum:.3e}")]
    DegenerateSpectrum { sum: f64 },

    #[error("pair (A, Bu) is not stabilizable")]
    NotStabilizable,

    #[error("feedthrough Du^T Du is singular to working precision")]
    SingularFeedthrough,

    #[error("system matrix is not Hurwitz (spectral abscissa {abscissa:.3e})")]
    UnstableSystem { abscissa: f64 },

    #[error("Riccati solution P is singular; cannot form certificate variable")]
    SingularP,

    #[error("certificate variable X is singular")]
    SingularX,

    #[error("dimension mismatch in {what}: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        what: String,
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("invalid config field `{field}`: {message}")]
    InvalidConfig { field: String, message: String },

    #[error("time step {dt} too large for shortest filter time constant {limit}")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("simulation diverged at t = {t:.3} s (state norm exceeded {limit:.1e})")]
    Diverged { t: f64, limit: f64 },

    #[error("matrix block is rank deficient (rank {rank}, needed {needed})")]
    RankDeficient { rank: usize, needed: usize },

    #[error("trace is empty")]
    EmptyTrace,

    #[error("aerodynamic influence matrix is singular (degenerate geometry)")]
    SingularAic,

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
