//! Exciton reaction-coordinate model of a 2D semiconductor sheet coupled to a
//! localized resonator.
//!
//! Energies are meV, times ps, lengths nm (see [`units`]).

pub mod blockade;
pub mod config;
pub mod dispatch;
pub mod error;
pub mod field;
pub mod lindblad;
pub mod materials;
pub mod nonmarkovian;
pub mod quad;
pub mod spectral;
pub mod special;
pub mod units;

pub use error::{Error, Result};
