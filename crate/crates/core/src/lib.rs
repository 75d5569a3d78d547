//! Closed-form coordinate-wise gate optimizers for simulating imaginary- and
//! real-time evolution with parameterized circuits on a dense statevector.

pub mod ansatz;
pub mod circuit;
pub mod error;
pub mod evolution;
pub mod fqs;
pub mod gates;
pub mod io;
pub mod linalg;
pub mod oracle;
pub mod pauli;
pub mod statevector;
pub mod strategy;

pub use error::{Error, Result};
