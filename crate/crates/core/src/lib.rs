//! Support vector regression with swarm-tuned hyperparameters.
//!
//! The crate covers the whole forecasting pipeline: loading and imputing the
//! hourly air-quality records ([`dataio`]), kernels ([`kernels`]), an SMO
//! based ε-SVR ([`svr`]), regression metrics ([`metrics`]), particle swarm
//! and grey wolf optimizers ([`pso`], [`gwo`]) and the `(C, γ)` tuner that
//! couples them ([`tuner`]).

pub mod dataio;
pub mod gwo;
pub mod kernels;
pub mod metrics;
pub mod pso;
pub mod space;
pub mod svr;
pub mod tuner;

pub use dataio::{Dataset, FeatureMatrix, ScalerParams, TargetVector};
pub use kernels::{KernelFamily, KernelSpec};
pub use metrics::{evaluate, EvalReport};
pub use space::{Objective, OptimizeResult, SearchSpace};
pub use svr::{SvrModel, SvrParams};
pub use tuner::{OptimizerKind, OptimizerTag, TuneResult, TunerConfig};
