//! Modeling and optimization of lossy beyond-diagonal reconfigurable
//! intelligent surfaces described by admittance parameters.

pub mod architecture;
pub mod channel;
pub mod circuit;
pub mod error;
pub mod linalg;
pub mod network;

pub use error::{Error, Result};
pub mod harness;
pub mod hardware;
pub mod mumiso;
pub mod siso;
