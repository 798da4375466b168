//! Crate error type.

use thiserror::Error;

/// Errors produced by construction, evaluation, and solver entry points.
///
/// Variants distinguish caller mistakes (bad domains, wrong surface class)
/// from numerical failures (solver did not converge, immersion degenerate),
/// so command-line wrappers can map them to distinct exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// A direction argument was the zero vector (or numerically so).
    #[error("direction argument must be a nonzero vector (|Y| = {norm:.3e})")]
    ZeroDirection { norm: f64 },

    /// An energy density evaluated to a non-positive value.
    #[error("energy density must be positive; gamma({direction:?}) = {value:.6e}")]
    NonPositiveGamma { direction: [f64; 3], value: f64 },

    /// Construction parameters outside the valid domain.
    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    /// An operation that needs a closed surface was given a non-closed one.
    #[error("operation `{operation}` requires a closed surface")]
    NotClosed { operation: &'static str },

    /// The first fundamental form degenerated at a sample point.
    #[error("chart fails to be an immersion at (s, t) = ({s:.6}, {t:.6}) on patch {patch}")]
    ImmersionFailure { patch: usize, s: f64, t: f64 },

    /// A stencil-based operator was evaluated too close to the patch boundary.
    #[error(
        "sample at (s, t) = ({s:.6}, {t:.6}) is within {margin:.3e} of the patch boundary; \
         stencil needs clearance {required:.3e}"
    )]
    BoundaryMargin {
        s: f64,
        t: f64,
        margin: f64,
        required: f64,
    },

    /// A profile or root solver failed; the message carries bracketing data.
    #[error("solver failed: {message}")]
    SolverFailure { message: String },

    /// An operation restricted to equilibrium surfaces was given a
    /// non-equilibrium one.
    #[error("surface is not an equilibrium: {message}")]
    NotEquilibrium { message: String },

    /// Enclosed volume came out non-positive where a positive one is required.
    #[error("enclosed volume must be positive (got {volume:.6e})")]
    NonPositiveVolume { volume: f64 },

    /// A mesh violated a topological requirement (closedness, orientability).
    #[error("mesh topology error: {message}")]
    MeshTopology { message: String },

    /// File parse or format error.
    #[error("format error in {what}: {message}")]
    Format { what: String, message: String },

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Shorthand for an [`Error::InvalidParameter`].
    pub fn param(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }

    /// Shorthand for an [`Error::SolverFailure`].
    pub fn solver(message: impl Into<String>) -> Self {
        Error::SolverFailure {
            message: message.into(),
        }
    }
}
