//! Spectral Faedo-Galerkin simulator for a nonisothermal Cahn-Hilliard system
//! with a source term and thermal memory, under Neumann boundary conditions:
//!
//! ```text
//! phi' - Delta mu + gamma phi = f
//! mu = -Delta phi + beta(phi) + pi(phi) + a - b w'
//! w'' - Delta(kappa1 w' + kappa2 w) + lambda phi' = g
//! ```
//!
//! `beta` is replaced by its Moreau-Yosida regularization `beta_eps`. The
//! crate also carries the diagnostics used to check the system's structural
//! properties numerically: mean-value law, energy identity, continuous
//! dependence on the sources, and the elliptic `L^6` estimate.

pub mod analysis;
pub mod elliptic;
pub mod error;
pub mod expr;
pub mod galerkin;
pub mod io;
pub mod potentials;
pub mod spectral;

pub use error::{AssumptionTag, AssumptionViolation, Error, Result};
