//! Simulation engine for RIS-assisted cell-free massive MIMO integrated
//! sensing and communication with clutter-aware target detection.

pub mod channel;
pub mod check;
pub mod convexsolver;
pub mod detector;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod optimizer;
pub mod precoding;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
