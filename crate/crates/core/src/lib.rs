//! Lattice laboratory for the dimensionally reduced generalized
//! Seiberg-Witten equations on a flat torus with target ℍⁿ.

pub mod cli;
pub mod configuration;
pub mod equations;
pub mod error;
pub mod io;
pub mod lattice;
pub mod linearization;
pub mod quaternion;
pub mod solver;
pub mod symplectic;
pub mod verify;

pub use configuration::Configuration;
pub use error::{Error, Result};
