//! Generalized Wannier bases on a discretized `R^d` and the operator
//! machinery that connects their localization to Roe-algebra triviality.
//!
//! The crate is organised bottom-up:
//!
//! - [`grid`]: box discretization, `L^2` quadrature, restrictions and
//!   multiplication operators.
//! - [`discrete_sets`]: uniformly discrete center sets and deformed lattices.
//! - [`localization`]: Wannier families, localization moments and the
//!   synthetic families (extremely localized, power-law).
//! - [`series_bounds`]: lattice tail sums against the closed-form bound
//!   `C (1+R)^{d-2s}`.
//! - [`roe_ops`]: rank-one-sum operators, the intertwiner `V`, its
//!   truncations `V^R`, propagation probes and the norm-decay experiment.
//! - [`models`]: Kronig-Penney Hamiltonians, Gubanov deformations, spectral
//!   islands and Wannier extraction by projected position operators.
//! - [`config`] and [`experiments`]: the batch driver behind the CLI.

pub mod config;
pub mod discrete_sets;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod linalg;
pub mod localization;
pub mod models;
pub mod report;
pub mod roe_ops;
pub mod series_bounds;

pub use error::{Error, Result};
pub use num_complex::Complex64;
