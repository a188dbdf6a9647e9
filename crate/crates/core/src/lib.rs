//! Spatial partial-equilibrium model of a natural-gas market.
//!
//! Producers, their trading arms, infrastructure operators and consumers
//! meet in a network of nodes and arcs. The equilibrium of that market is an
//! affine complementarity system, assembled and solved here, then used for
//! calibration, year-by-year scenario runs and welfare reporting.

pub mod error;
pub mod io;
pub mod lcp;
pub mod analytics;
pub mod calibration;
pub mod market;
pub mod scenario;

pub use error::{Error, Result};
