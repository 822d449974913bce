//! Finite-volume simulation of the continuum random cluster model and the
//! Widom-Rowlinson model.

pub mod analysis;
pub mod connectivity;
pub mod crcm;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod gnz;
pub mod index;
pub mod io;
pub mod mcmc;
pub mod model;
pub mod quad;
pub mod rng;
pub mod stats;
pub mod wr;

pub use error::{Error, Result};
