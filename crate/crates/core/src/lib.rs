//! Parking functions and recurrent sandpile configurations for integer
//! toppling matrices.
//!
//! A toppling matrix `Δ` is an integer `n × n` matrix with nonpositive
//! off-diagonal entries, nonzero determinant and a positive integer row vector
//! `r` with `rΔ ≥ 0`. This crate decides membership in, and enumerates, the
//! set of `Δ`-parking functions and the set of `Δ`-recurrent configurations,
//! both of which have exactly `det Δ` elements and correspond under
//! `u ↦ d − u` with `d = (Δ_11 − 1, …, Δ_nn − 1)`.
//!
//! All arithmetic is exact. Vertex indices are 0-based in the library API and
//! 1-based in every serialized format and in the command-line tool.
//!
//! ```
//! use toppling::{parking, Budgets, ToppleMatrix};
//!
//! let m = ToppleMatrix::from_i64_rows(&[[2, -1], [-3, 4]]).unwrap();
//! let set = parking::enumerate_parking(&m, &Budgets::default()).unwrap();
//! assert_eq!(set.len(), 5);
//! ```

mod budget;
mod error;
mod json;

pub mod cli;
pub mod digraph;
pub mod lattice;
pub mod matrix;
pub mod parking;
pub mod sandpile;

pub use budget::Budgets;
pub use error::{Error, Result};
pub use json::format_vector;
pub use matrix::{validate_toppling, IntMatrix, RateVector, ToppleMatrix, ValidationReport};
pub use sandpile::{Configuration, TopplePolicy, ToppleRecord};
