//! Parent spin-1 chain Hamiltonians built from parameterized two-site density
//! matrices, entanglement measures for 3x3 states, and ground-state fidelity
//! scans for locating quantum phase transitions.

pub mod cli;
pub mod criticality;
pub mod edverify;
pub mod entmeasures;
pub mod error;
pub mod families;
pub mod matcore;
pub mod parenth;

pub use error::{Error, Result};
