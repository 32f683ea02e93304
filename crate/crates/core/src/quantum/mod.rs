//! States, density operators, Schmidt decompositions, entropies and POVMs.
//!
//! All logarithms are natural; entropies are reported in nats.

mod entropy;
mod povm;
mod sampling;
mod schmidt;
mod state;

pub use entropy::{entanglement_entropy, shannon_entropy, von_neumann_entropy};
pub use povm::{born_probabilities, Povm};
pub use sampling::{mix_to_entropy, random_simplex_point, sample_state_in_domain, sample_state_with_entropy};
pub use schmidt::{schmidt_decompose, SchmidtDecomposition};
pub use state::{partial_trace_a, partial_trace_b, DensityOperator, PureState};

/// Tolerance on `‖ψ‖² = 1`.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance on Hermiticity and unit trace of density operators.
pub const DENSITY_TOL: f64 = 1e-12;
/// Eigenvalues in `[-PSD_TOL, 0)` are clamped to zero.
pub const PSD_TOL: f64 = 1e-10;
