//! Desk-scale simulation of mixed-state tomography through the random
//! purification channel, with exact finite-dimensional verification of the
//! moment identities that underpin it.

pub mod error;
pub mod estimators;
pub mod harness;
pub mod moments;
pub mod perm;
pub mod pgm;
pub mod purification;
pub mod schur;
pub mod stats;
pub mod symmetric;
pub mod tensor;

pub use error::{Error, Result};
