pub mod algebra;
pub mod clifford;
pub mod config;
pub mod error;
pub mod functionals;
pub mod geometry;
pub mod operators;
pub mod residue;
pub mod symbol;
pub mod verify;

pub use error::{Error, Result};
