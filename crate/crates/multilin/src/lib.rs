//! Numerical laboratory for multilinear Fourier multipliers.

pub mod cli;
pub mod error;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod lp_frames;
pub mod multiplier_op;
pub mod norms;
pub mod plot;
pub mod region;
pub mod selftest;
pub mod sharpness;

pub use error::{Error, Result};
