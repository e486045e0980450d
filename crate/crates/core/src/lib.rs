//! Spectral numerics for the Baouendi-Grushin operator
//! `Δ_γ = ∂ₓ² + |x|^{2γ}∂_y²` on (-1, 1) × 𝕋.

pub mod acceptance;
pub mod cutoff;
pub mod damped;
pub mod dense;
pub mod error;
pub mod exec;
pub mod geodesic;
pub mod observability;
pub mod packets;
pub mod ground_state;
pub mod normal_form;
pub mod propagators;
pub mod quadrature;
pub mod spectral;
pub mod tridiag;

pub use error::{GrushinError, Result};
pub use exec::Exec;
