//! Exact largest-eigenvalue distributions of the integer-beta
//! Wishart-Laguerre ensemble, its fixed-trace variant, and the Landauer
//! conductance density of a chaotic cavity with ideal leads.
//!
//! Coefficients are exact rationals produced by a Selberg-type
//! differential-difference recursion ([`recursion`]); closed forms are
//! evaluated in [`distributions`] and cross-checked by the stochastic
//! samplers in [`montecarlo`].

pub mod distributions;
pub mod error;
pub mod exppoly;
pub mod montecarlo;
pub mod recursion;
pub mod special;

pub use error::{Error, Result};
pub use exppoly::ExpPoly;
pub use recursion::{compute_all_tables, compute_tables, CoefficientTable, EnsembleParams};
