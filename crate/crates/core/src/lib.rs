//! Complete and incomplete U-statistics of order ℓ, the three standard
//! sampling designs over ℓ-subsets, Student-t observation models with
//! quadrature oracles, and a Monte-Carlo harness for L1 error curves.

pub mod distributions;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod indexcomb;
pub mod kernels;
pub mod report;
pub mod rng;
pub mod sampling;
pub mod sum;

pub use distributions::{sample_iid, theta_oracle, DistributionSpec};
pub use error::{Error, Result};
pub use estimators::{complete_u, incomplete_u, Estimate, EstimateKind};
pub use harness::{
    fit_log_log_slope, run_cell, run_experiment, ExperimentConfig, NRule, ResultRow, SchemeChoice, Statistic,
};
pub use indexcomb::{binom, IndexSpace, MultiIndex};
pub use kernels::{Kernel, TruncatedKernel};
pub use rng::StreamKey;
pub use sampling::{draw_selection, SamplingScheme, SchemeKind, SelectionDraw};
