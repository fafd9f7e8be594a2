//! Post-processing: transient metrics, critical clearing time, Lyapunov
//! margins and exactness checks of the linearizing laws.

pub mod cct;
pub mod chain;
pub mod lyapunov;
pub mod metrics;
pub mod perturbation;
pub mod residual;

pub use cct::{bisect, cct_search, CctError, CctResult, CctSearch, Probe};
pub use lyapunov::{chain_matrix, robustness_margin, solve_lyapunov, LyapunovError, LyapunovReport};
pub use metrics::{compute_metrics, MetricOptions, Metrics, MetricsError};
pub use perturbation::{perturbation_bounds, PerturbationBounds};
pub use residual::{clean_segment, linearization_residual, ChainResidual, ResidualError};
