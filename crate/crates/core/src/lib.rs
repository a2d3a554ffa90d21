//! Graph-time signal processing and learning.
//!
//! The numerical core ([`sparse`], [`graph`], [`product`], [`spectral`], [`filters`])
//! is generic over [`Scalar`] (`f32` or `f64`) and defaults to `f64`. Learning,
//! perturbation analysis and the experiment drivers run in `f64`.

pub mod dense;
pub mod experiments;
pub mod error;
pub mod filters;
pub mod graph;
pub mod io;
pub mod nn;
pub mod perturbation;
pub mod product;
pub mod scalar;
pub mod sparse;
pub mod spectral;

pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use filters::{FilterBank, JointFilterCoeffs, MonoFilterCoeffs, ShiftCounts, ShiftOperators};
pub use graph::{Graph, GraphKind, Permutation};
pub use nn::{GtcnnConfig, GtcnnModel};
pub use product::{ProductGraph, ProductKind, ProductSignal, ProductSpec};
pub use scalar::Scalar;
pub use sparse::CsrMatrix;
pub use spectral::EigenDecomposition;

/// Double-precision sparse shift operator.
pub type SparseMatrix = CsrMatrix<f64>;
/// Single-precision sparse shift operator.
pub type SparseMatrix32 = CsrMatrix<f32>;
pub type Graph32 = Graph<f32>;
pub type ProductGraph32 = ProductGraph<f32>;
pub type ProductSignal32 = ProductSignal<f32>;
pub type JointFilterCoeffs32 = JointFilterCoeffs<f32>;
pub type DenseMatrix32 = DenseMatrix<f32>;
