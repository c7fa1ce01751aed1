//! Eigenvector-prediction precoding (EGVP) simulation library for massive
//! MIMO with mobility.
//!
//! The library models a TDD multi-user MIMO downlink in which the base
//! station derives per-UE precoders from periodic SVD samples of the wideband
//! channel and fills the SVD gaps by interpolating the channel weights with a
//! complex-exponential model. The building blocks are:
//!
//! - [`channel`]: time-evolving multipath channel synthesis and the
//!   Kronecker-DFT angle-delay transform,
//! - [`expfit`]: Matrix Pencil harmonic retrieval and MDL order detection,
//! - [`eigen`]: periodic SVD sampling, phase calibration and EZF precoding,
//! - [`egvp`]: channel-weight decomposition, fitting and eigenvector
//!   reconstruction across SVD gaps,
//! - [`fmpp`]: fast matrix-pencil channel prediction to compensate CSI delay,
//! - [`baselines`]: full-time SVD, periodic hold, AGMI and Wiener schemes,
//! - [`metrics`]: spectral efficiency, prediction error and FLOP models,
//! - [`scenario`]: seeded Monte-Carlo sweeps and CSV/JSON result emission.
//!
//! All numerics are generic over the real scalar type through the [`Real`]
//! trait (`f32` and `f64`); concrete aliases such as [`C64`] are provided at
//! the crate root.

pub mod baselines;
pub mod channel;
pub mod egvp;
pub mod eigen;
pub mod expfit;
pub mod fmpp;
pub mod linalg;
pub mod metrics;
pub mod real;
pub mod scenario;

pub use real::Real;

/// Complex number over a generic real scalar.
pub type Cx<T> = num_complex::Complex<T>;
/// Dynamically sized complex matrix.
pub type CMat<T> = nalgebra::DMatrix<Cx<T>>;
/// Dynamically sized complex column vector.
pub type CVec<T> = nalgebra::DVector<Cx<T>>;

/// Single-precision complex scalar.
pub type C32 = Cx<f32>;
/// Double-precision complex scalar.
pub type C64 = Cx<f64>;
/// Double-precision complex matrix, the default working type.
pub type CMat64 = CMat<f64>;
/// Double-precision complex vector.
pub type CVec64 = CVec<f64>;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Errors surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Matrix or vector dimensions do not match the operation contract.
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A model-order constraint such as `N >= 2L` is violated.
    #[error("order constraint violated: {0}")]
    Order(String),
    /// A sampling schedule refers to subframes that are not available.
    #[error("schedule error: {0}")]
    Schedule(String),
    /// Numerically degenerate input (zero norm, rank collapse, non-finite).
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// Invalid configuration value or combination.
    #[error("config error: {0}")]
    Config(String),
    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Library result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;
