//! Sparse, positive-definite estimation of large covariance and correlation
//! matrices with hard, soft, SCAD and `ℓq` penalties.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which the benchmark harness and the CLI use.

// `!(x > 0)` is how NaN gets rejected; index loops mirror the matrix algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod admm;
pub mod cli;
pub mod bench;
pub mod error;
pub mod linalg;
pub mod penalty;
pub mod scalar;
pub mod select;
pub mod sketch;
pub mod stats;
pub mod thresholding;

pub use error::{Error, Result};
pub use penalty::Family;
pub use scalar::Scalar;

pub type SymMat = linalg::SymMat<f64>;
pub type Dense = linalg::Dense<f64>;
pub type EigenPair = linalg::EigenPair<f64>;
pub type PenaltySpec = penalty::PenaltySpec<f64>;
pub type SampleSet = stats::SampleSet<f64>;
pub type AdmConfig = admm::AdmConfig<f64>;
pub type AdmState = admm::AdmState<f64>;
pub type EstimationReport = admm::EstimationReport<f64>;
pub type ThresholdReport = thresholding::ThresholdReport<f64>;
pub type SketchModel = sketch::SketchModel<f64>;
pub type BenchConfig = bench::BenchConfig;
pub type CvPlan = select::CvPlan<f64>;
pub type CvResult = select::CvResult<f64>;
pub type Estimator = select::Estimator<f64>;
