//! Von Neumann dimensions: spectral traces on truncations, the double-limit
//! scheme, and a finite tracial-algebra sandbox for the dimension axioms.

pub mod spectral;
pub mod trace;
pub mod tracial;

pub use spectral::{ChainLaplacian, DenseSpectrum, DENSE_LIMIT};
pub use trace::{
    double_limit_estimate, functional_trace, kernel_trace, orbit_functional, rescale_haar, sort_rows, validate_schedule,
    BettiEstimate, EstimateKind, Exhaustion, HaarScalable, Homogeneous, LedgerRow, LimitReport, RowKind, TraceFunctional,
    DEFAULT_EPSILONS,
};
pub use tracial::*;
