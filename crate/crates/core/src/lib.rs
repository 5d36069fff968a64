//! Log-corrected Type I blowup for the radial parabolic-elliptic Keller-Segel
//! system in dimensions 3 and 4: exact spectral constants, the blowup profile,
//! a radial self-similar solver, bootstrap diagnostics and a shooting search.

pub mod diagnostics;
pub mod dimension;
pub mod eigenbasis;
pub mod error;
pub mod profile;
pub mod shooting;
pub mod sim;
pub mod verify;

pub use dimension::Dim;
pub use error::{Error, Result};
