//! Riesz-1 capacitary energies, equilibrium measures and charged-drop shape
//! flows for planar polygonal regions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod equilibrium;
pub mod error;
pub mod geometry;
pub mod minimizer;
pub mod quadrature;
pub mod relaxation;
pub mod rng;
pub mod shape_calculus;
pub mod verify;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use geometry::{Region, Vec2};
