//! Orbit data for quasi-transitive graphs and cofinite complexes, their
//! finite exhaustions, and alternating chain complexes with boundary maps.

mod complex;
mod graph;
mod truncation;

pub use complex::{CofiniteComplex, ComplexFamily, FiniteCell, FolnerRule, DEFAULT_PRODUCT_CAP};
pub use graph::{
    bfs_spanning_tree, build_ball, star_and_cycle_spaces, with_fundamental_cycles, EdgeOrbit, GraphFamily, OrbitGraph,
    MAX_BALL_VERTICES,
};
pub use truncation::{Cell, CellKey, OrbitSlot, Truncation, TruncationBuilder};
pub(crate) use truncation::UnionFind;

use crate::error::Result;
use crate::exact::Rational;
use crate::sparse::SparseIntMatrix;

/// Either kind of input the library accepts.
#[derive(Clone, Debug, PartialEq)]
pub enum Space {
    Graph(OrbitGraph),
    Complex(CofiniteComplex),
}

impl Space {
    pub fn scaled(&self, c: &Rational) -> Space {
        match self {
            Space::Graph(g) => Space::Graph(g.scaled(c)),
            Space::Complex(x) => Space::Complex(x.scaled(c)),
        }
    }
}

/// The invariant subcomplex Δ^(level) of a cofinite complex.
pub fn build_subcomplex(c: &CofiniteComplex, level: usize) -> Result<Truncation> {
    c.build_subcomplex(level)
}

/// Signed incidence from n-chains to (n−1)-chains.
pub fn boundary_operator(t: &Truncation, n: usize) -> Result<&SparseIntMatrix> {
    t.boundary(n)
}
