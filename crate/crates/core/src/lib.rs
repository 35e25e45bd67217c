//! Percolation on periodic plane lattices: lattices and their duals,
//! cluster sweeps, critical-point estimators, arc events on discs, random
//! triangulations and the random-cluster model.

pub mod dual;
pub mod embedding;
pub mod engine;
pub mod error;
pub mod estimators;
pub mod fk;
pub mod geom;
pub mod instance;
pub mod lattice;
pub mod newman_ziff;
pub mod random_tri;
pub mod rng;
pub mod stats;
pub mod unionfind;
pub mod verify;
pub mod zhang;

pub use error::{Error, Result};
