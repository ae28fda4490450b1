//! Blackout (continuous-time pure-death) and categorical diffusion over TSP
//! edge-adjacency matrices, with schedule design, pluggable denoisers,
//! heatmap decoding, 2-opt refinement and exact baselines.
//!
//! The numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the CLI and the acceptance
//! suite use.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blackout;
pub mod categorical;
pub mod decode;
pub mod denoiser;
pub mod error;
pub mod instance;
pub mod matrix;
pub mod rng;
pub mod scalar;
pub mod schedule;

pub use error::{Error, Result, ScheduleViolation};
pub use instance::Tour;
pub use matrix::EdgeMatrix;
pub use scalar::Scalar;

pub type Instance = instance::TspInstance<f64>;
pub type Heatmap = matrix::ProbHeatmap<f64>;
pub type Rates = matrix::RateMatrix<f64>;
pub type Config = blackout::BlackoutConfig<f64>;
pub type ObservationSchedule = schedule::Schedule<f64>;
pub type EdgeModel = denoiser::LinearEdgeModel<f64>;
pub type RunConfig = decode::ReverseRunConfig<f64>;
pub type TspSolution = decode::Solution<f64>;

pub type Instance32 = instance::TspInstance<f32>;
pub type Config32 = blackout::BlackoutConfig<f32>;
