//! Numerical laboratory for matrix-weighted dyadic harmonic analysis on
//! finite trees: maximal operators, Carleson embedding sums, and Bellman
//! function certificates, with seeded extremal search over the explicit
//! constants.

pub mod bellman;
pub mod cli;
pub mod dyadic;
pub mod embedding;
pub mod error;
pub mod linalg;
pub mod maximal;
pub mod search;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{SymMatrix, Vector};
