//! Matrix φ-functions and their inverses ψ_ℓ(A) = φ_ℓ(A)⁻¹ for matrices with
//! spectrum in the open left half-plane.
//!
//! φ_ℓ(A) is obtained by scaling and squaring from diagonal Padé seeds, and
//! ψ_ℓ(A) by carrying a Newton-Schulz inverse through the same squaring
//! ladder, so the pipeline needs only matrix products after the seed.

pub mod densecore;
mod error;
pub mod mmio;
pub mod oracle;
pub mod pade;
pub mod phipade;
pub mod psieval;
pub mod scalarfun;
pub mod testmats;

#[cfg(feature = "cli")]
pub mod cli;

pub use densecore::Matrix;
pub use error::{Error, Result};
