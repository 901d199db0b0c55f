//! Exact arithmetic and statistics for Hurwitz (nearest-integer) continued
//! fractions over the five Euclidean imaginary quadratic fields
//! K_d = Q(sqrt(-d)), d in {1, 2, 3, 7, 11}.
//!
//! The crate is organized bottom-up:
//!
//! - [`ring`]: rings of integers O_d, exact rational points of K_d, the
//!   strict fundamental domain I'_d, nearest-integer rounding, Euclidean
//!   division and gcd.
//! - [`cf`]: the continued-fraction map T(z) = 1/z - [1/z], exact finite
//!   expansions of field rationals, convergents, digit costs, floating-point
//!   orbits, and the scan for empty digit cells.
//! - [`geometry`]: generalized circles as exact Hermitian triples, the
//!   recursively generated curve family W, the induced cell complex on I_d,
//!   and statistical verification that the partition is Markov for T.
//! - [`transfer`]: Ulam/Nystroem discretization of the weighted transfer
//!   operator, dominant spectral data, the pressure curve s_0(w), and the
//!   CLT constants mu(c) = 2 s_0'(0), delta(c) = 2 s_0''(0).
//! - [`stats`]: enumeration of the rational ensembles Sigma_n and Omega_N,
//!   cost moments, Kolmogorov-Smirnov distances, mod-q equidistribution, and
//!   Dirichlet partial sums.
//! - [`report`]: serialization of all artifacts (JSON/CSV/SVG) with atomic
//!   file writes.

pub mod cf;
pub mod error;
pub mod geometry;
pub mod report;
pub mod ring;
pub mod stats;
pub mod transfer;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
