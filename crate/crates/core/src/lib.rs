//! Metrized graphs, their weighted-graph models, and the spectral machinery
//! connecting the two: discrete Laplacian eigenproblems generalized by a
//! measure, Green's-kernel integral operators, continuous reference spectra,
//! and a convergence harness for scaled eigenvalues and eigenfunctions.
//!
//! All numerics are generic over the scalar type via [`scalar::Scalar`];
//! the `*64` aliases below fix `f64`, which every shipped tolerance assumes.

pub mod convergence;
pub mod cpa;
pub mod error;
pub mod graph;
pub mod kernel;
pub mod laplacian;
pub mod linalg;
pub mod measure;
pub mod model;
pub mod reference;
pub mod scalar;
pub mod selftest;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use cpa::CpaFunction;
pub use graph::{GraphPoint, MetrizedGraph, Segment};
pub use laplacian::{KirchhoffMatrix, SpectralResult};
pub use measure::{DiscreteMeasure, MeasureSpec};
pub use model::Model;
pub use reference::ContinuousSpectrum;

/// Concrete `f64` aliases for the main entry types.
pub type MetrizedGraph64 = MetrizedGraph<f64>;
pub type Model64 = Model<f64>;
pub type CpaFunction64 = CpaFunction<f64>;
pub type MeasureSpec64 = MeasureSpec<f64>;
pub type DiscreteMeasure64 = DiscreteMeasure<f64>;
pub type KirchhoffMatrix64 = KirchhoffMatrix<f64>;
pub type SpectralResult64 = SpectralResult<f64>;
pub type ContinuousSpectrum64 = ContinuousSpectrum<f64>;


/// `f32` aliases, mainly exercised by the generic test suite.
pub type MetrizedGraph32 = MetrizedGraph<f32>;
pub type Model32 = Model<f32>;
pub type CpaFunction32 = CpaFunction<f32>;
