//! Error type shared by all modules.

use thiserror::Error;

/// Everything that can go wrong across the crate.
///
/// Variants mirror the failure modes of the individual operations; the
/// string codes in the messages are stable and used by the CLI to map
/// errors to exit codes and user-facing diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    /// Nearest-integer rounding found zero or more than one lattice
    /// candidate. This signals a broken boundary convention and must never
    /// fire for a correct strict fundamental domain.
    #[error("UNIQUENESS_VIOLATION: {candidates} lattice candidates for z = {z} (d = {d})")]
    UniquenessViolation {
        d: u8,
        z: String,
        candidates: usize,
    },

    #[error("DIVISION_BY_ZERO: division by zero in O_{d}")]
    DivisionByZero { d: u8 },

    #[error("BOTH_ZERO: gcd(0, 0) is undefined")]
    BothZero,

    #[error("ZERO_INPUT: the continued-fraction step requires z != 0")]
    ZeroInput,

    #[error("OUT_OF_DOMAIN: {z} is not in the fundamental domain I_{d}")]
    OutOfDomain { d: u8, z: String },

    #[error("NO_STABILIZATION: curve family still growing after {iterations} iterations ({curve_count} curves so far)")]
    NoStabilization {
        iterations: usize,
        curve_count: usize,
    },

    #[error("RESOLUTION_TOO_COARSE: 2-cell {cell} has no interior grid point at resolution {resolution}")]
    ResolutionTooCoarse { cell: usize, resolution: usize },

    #[error("TAIL_TOO_LARGE: digit truncation tail {tail:.3e} exceeds 1e-3 of leading mass {leading:.3e}")]
    TailTooLarge { tail: f64, leading: f64 },

    #[error("NO_CONVERGENCE: power iteration residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("BRACKET_FAILURE: lambda(sigma, {w}) - 1 does not change sign on [{lo}, {hi}]")]
    BracketFailure { w: f64, lo: f64, hi: f64 },

    #[error("DEGENERATE_SAMPLE: sample standard deviation is zero")]
    DegenerateSample,

    #[error("MISSING_INPUT: required artifact not found: {0}")]
    MissingInput(String),

    #[error("invalid field discriminant d = {0}; valid: 1, 2, 3, 7, 11")]
    InvalidField(u8),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
