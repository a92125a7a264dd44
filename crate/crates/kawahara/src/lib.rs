//! Solitary waves of the generalized Kawahara equation
//!
//! ```text
//! u_t + u^p u_x + u_xxx - mu u_xxxxx = 0
//! ```
//!
//! The crate constructs the explicit and ground-state solitary-wave families,
//! analyzes the spectrum and coercivity of the linearized operator
//! `L = mu d^4 - d^2 + c - phi^p`, computes the stability index
//! `J_p = <L^{-1} phi, phi>` by two independent methods, and verifies orbital
//! stability empirically by pseudo-spectral time evolution.
//!
//! Start from the `examples/` directory for runnable entry points, or from
//! the `gkw` binary for the command-line interface.

pub mod cli;
pub mod continuation;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod groundstate;
pub mod index;
pub mod linop;
pub mod solitons;

pub use error::{Error, Result};
pub use grid::{Field, GridSpec};
pub use solitons::{SolitonProfile, WaveParams};
