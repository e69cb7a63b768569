//! L²-Betti numbers of weighted vertex-transitive graphs and cofinite cell
//! complexes by spectral approximation of von Neumann traces, with exact
//! closed forms and a finite tracial-algebra dimension sandbox.

pub mod buildings;
pub mod cli;
pub mod complex_invariants;
pub mod error;
pub mod exact;
pub mod graph_invariants;
pub mod orbit;
pub mod sparse;
pub mod vn_dimension;

pub use error::{Error, Result};
