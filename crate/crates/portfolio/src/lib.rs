//! Sparse long-only mean-variance portfolios with an lp penalty, solved by
//! iteratively reweighted l1 minimization.
//!
//! The pipeline reads a wide price CSV (or generates a synthetic factor-model
//! panel), estimates return moments, sweeps the penalty weight and writes CSV
//! reports of sparsity, optimality residuals and Sharpe ratios.

pub mod data;
pub mod error;
pub mod experiment;
pub mod moments;
pub mod report;
pub mod synthetic;

pub use data::{load_prices, PricePanel};
pub use error::{PortfolioError, Result};
pub use experiment::{run_experiment, ExperimentConfig, ExperimentResult, Sharpe};
pub use moments::{estimate_moments, MomentEstimates};
pub use report::emit_reports;
pub use synthetic::{generate, SyntheticConfig};
