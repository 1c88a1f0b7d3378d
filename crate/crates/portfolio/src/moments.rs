//! Sample moments of simple daily returns.

use irl1::linalg::{power_iteration, POWER_MAX_ITERS, POWER_RTOL};
use nalgebra::{DMatrix, DVector};

use crate::data::PricePanel;
use crate::error::{PortfolioError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimates {
    /// Sample covariance, normalized by `T − 1`.
    pub r: DMatrix<f64>,
    pub mu: DVector<f64>,
    /// Largest eigenvalue of `r`.
    pub lf: f64,
}

/// Simple returns `p_t / p_{t−1} − 1`, one row per return date.
pub fn simple_returns(panel: &PricePanel) -> Result<DMatrix<f64>> {
    if panel.n_dates() < 2 {
        return Err(PortfolioError::data("need at least 2 dates for returns"));
    }
    if !panel.is_complete() {
        return Err(PortfolioError::data("panel has missing prices"));
    }
    for (t, row) in panel.prices.iter().enumerate() {
        if let Some(j) = row.iter().position(|p| !(p.unwrap_or(0.0) > 0.0)) {
            return Err(PortfolioError::data(format!(
                "non-positive price for {} on {}",
                panel.tickers[j], panel.dates[t]
            )));
        }
    }
    Ok(DMatrix::from_fn(panel.n_dates() - 1, panel.n_assets(), |t, j| {
        panel.price(t + 1, j) / panel.price(t, j) - 1.0
    }))
}

pub fn estimate_moments(panel: &PricePanel) -> Result<MomentEstimates> {
    let returns = simple_returns(panel)?;
    let t = returns.nrows();
    let n = returns.ncols();
    let mu = DVector::from_fn(n, |j, _| returns.column(j).sum() / t as f64);
    let r = if t < 2 {
        DMatrix::zeros(n, n)
    } else {
        let centered = DMatrix::from_fn(t, n, |s, j| returns[(s, j)] - mu[j]);
        let mut r = centered.transpose() * &centered / (t - 1) as f64;
        // Exact symmetry regardless of summation order.
        for i in 0..n {
            for j in 0..i {
                r[(j, i)] = r[(i, j)];
            }
        }
        r
    };
    let lf = power_iteration(&r, POWER_RTOL, POWER_MAX_ITERS)
        .map_err(|e| PortfolioError::data(format!("Lipschitz estimate failed: {e}")))?
        .value
        .abs();
    Ok(MomentEstimates { r, mu, lf })
}
