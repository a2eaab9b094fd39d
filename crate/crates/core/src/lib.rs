//! Gelfond–Leontiev derivatives and the generalized Fock spaces built on them.
//!
//! Modules, bottom up:
//! - [`special_functions`]: Γ, Γ^{(n)}, digamma, Mittag-Leffler, ₁F₁, Hermite functions.
//! - [`gl_core`]: φ descriptors, truncated power series, D_φ and M_z.
//! - [`fock_space`]: ℓ²_φ and Fock inner products, weight kernels, reproducing kernels.
//! - [`bargmann`]: the modified Bargmann transform and ladder operators.
//! - [`weierstrass`]: Weierstrass factors, σ and g lattice products, estimate diagnostics.
//! - [`lattice_frames`]: densities, translations, Gabor-type transforms and frame bounds.

pub mod error;
pub mod quad;
pub mod special_functions;
pub mod gl_core;
pub mod fock_space;
pub mod bargmann;
pub mod weierstrass;
pub mod lattice_frames;

pub use error::{Error, Result};
