//! Optimal universal cloning of pure quantum states on d-level systems.
//!
//! The crate builds the optimal symmetric cloning channel for any number of
//! input and output copies, evaluates its figures of merit both in exact
//! rational arithmetic and numerically, and re-derives its optimality by
//! convex optimization over quantum channels.  All channel computations run
//! in coordinates on the bosonic (permutation-symmetric) subspace, which
//! keeps the matrices at desk scale.

pub mod channel;
pub mod cloner;
pub mod error;
pub mod linalg;
pub mod merit;
pub mod state;
pub mod sym;

pub use channel::{ChoiMatrix, CptpReport, QuantumChannel};
pub use cloner::{ClonerAnalytics, analytics, optimal_cloner};
pub use error::{Error, Result};
pub use linalg::{C64, ComplexMatrix, Seed};
pub use merit::{MeritReport, OptimizeOptions, OptimizeResult, optimize_channel, worst_case_fidelity};
pub use state::DensityMatrix;
pub use sym::{CloneSpec, SymmetricBasis, sym_dimension, tensor_power_coords};

/// Default cap on any full product-space dimension the crate will
/// materialize.  Constructors that need the full tensor-product space take
/// an explicit cap and refuse to allocate beyond it.
pub const DEFAULT_MAX_DIM: usize = 4096;
