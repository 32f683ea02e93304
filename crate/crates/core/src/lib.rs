//! Entanglement-constrained quantum local differential privacy.
//!
//! For a product mechanism `E = E_A ⊗ E_B` acting on bipartite pure states
//! whose entanglement entropy is at least `s`, the optimal leakage is
//!
//! ```text
//! ε*(s) = log max_{φ_a, φ_b} J_max(K_φ, s) / J_min(K_φ, s)
//! ```
//!
//! where `K_φ = E_A†(|φ_a⟩⟨φ_a|) ⊗ E_B†(|φ_b⟩⟨φ_b|)` and `J_max`, `J_min` are
//! the extremal values of `⟨ψ|K_φ|ψ⟩` over the admissible states. The crate
//! provides closed forms for those extremes ([`privacy_energy`]), a Riemannian
//! optimiser used as an independent numerical check ([`manifold_opt`]), the
//! outer search over measurement directions ([`qldp_analyzer`]) and the sweep,
//! plot and self-test drivers behind the `eqldp` binary ([`experiments`]).

pub mod channels;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod manifold_opt;
pub mod privacy_energy;
pub mod qldp_analyzer;
pub mod quantum;

pub use error::{QldpError, Result};

/// Library version echoed into every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
