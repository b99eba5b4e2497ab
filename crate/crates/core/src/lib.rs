//! Area-weighted colored Motzkin spin chains.
//!
//! * [`walks`]: colored Motzkin walks, areas, pairings and enumeration.
//! * [`hamiltonian`]: the sparse Hamiltonian, tuned angle sets and a sector-wise
//!   Lanczos solver for the low spectrum.
//! * [`groundstate`]: the exact ground state as a weighted superposition of walks
//!   and its Schmidt spectrum by direct SVD.
//! * [`schmidt`]: the log-domain recurrence for Schmidt coefficients, entropy
//!   curves and the analytic bounds.
//! * [`sweep`]: parameter grids, CSV output and scaling fits.

pub mod error;
pub mod groundstate;
pub mod hamiltonian;
pub mod logweight;
pub mod schmidt;
pub mod sweep;
pub mod walks;

pub use error::{Error, Result};
pub use hamiltonian::{build_hamiltonian, ChainSpec, Deformation, SparseOperator, SpectrumReport};
pub use logweight::LogWeight;
pub use walks::{AreaValue, ColoredWalk, Step};

/// Shortest decimal representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}
