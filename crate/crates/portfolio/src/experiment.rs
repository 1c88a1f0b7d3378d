//! lp-regularized long-only mean-variance portfolios over a λ grid:
//!
//! `min ½xᵀRx − ημᵀx + λ‖x‖ₚᵖ` subject to `eᵀx = 1`, `x ≥ 0`.

use irl1::optimality::alpha_residual;
use irl1::{FeasibleSet, LpRegularizer, Quadratic, SolveReport, SolverParams, Termination};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::data::PricePanel;
use crate::error::{PortfolioError, Result};
use crate::moments::{estimate_moments, simple_returns, MomentEstimates};

pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Weight of the mean term.
    pub eta: f64,
    pub p: f64,
    /// λ values; the first is the primary one whose residual trace is kept.
    pub lambdas: Vec<f64>,
    pub solver: SolverParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            eta: 1e-3,
            p: 0.5,
            lambdas: vec![1e-3],
            solver: SolverParams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() {
            return Err(PortfolioError::Config("eta must be finite".into()));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(PortfolioError::Config(format!("lambda {l} must be nonnegative")));
        }
        LpRegularizer::penalty(self.p, 0.0).map_err(|e| PortfolioError::Config(e.to_string()))?;
        self.solver
            .validate()
            .map_err(|e| PortfolioError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sharpe {
    pub daily: f64,
    pub annualized: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub tickers: Vec<String>,
    pub lambda_grid: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
    /// Number of nonzero weights (exact zeros excluded).
    pub nnz: Vec<usize>,
    /// `α(xᵏ, νᵏ)` along the run for the primary λ.
    pub residual_trace: Vec<f64>,
    pub sharpe_in: Vec<Sharpe>,
    pub sharpe_out: Option<Vec<Sharpe>>,
    pub reports: Vec<SolveReport>,
}

/// `½xᵀRx − ημᵀx` with `∇ = Rx − ημ` and declared Lipschitz constant `L_f`.
pub fn portfolio_objective(m: &MomentEstimates, eta: f64) -> Quadratic {
    Quadratic::new(m.r.clone(), -&m.mu * eta)
        .expect("moments are finite and square")
        .with_lipschitz(m.lf)
}

/// Solves one λ from the equal-weight start.
pub fn solve_lambda(m: &MomentEstimates, cfg: &ExperimentConfig, lambda: f64) -> Result<SolveReport> {
    let solver_err = |source| PortfolioError::Solver { lambda, source };
    let f = portfolio_objective(m, cfg.eta);
    let reg = LpRegularizer::penalty(cfg.p, lambda).map_err(solver_err)?;
    let set = FeasibleSet::simplex(1.0).map_err(solver_err)?;
    let n = m.mu.len();
    let x0 = vec![1.0 / n as f64; n];
    let report = irl1::solve(&f, &reg, &set, &x0, &cfg.solver).map_err(solver_err)?;
    if report.termination == Termination::MaxIterations {
        log::warn!("lambda = {lambda:e}: iteration limit reached before convergence");
    }
    Ok(report)
}

/// `α(xᵏ⁺¹, νᵏ)` for every recorded step.
pub fn residual_trajectory(
    report: &SolveReport,
    m: &MomentEstimates,
    cfg: &ExperimentConfig,
    lambda: f64,
) -> Result<Vec<f64>> {
    let solver_err = |source| PortfolioError::Solver { lambda, source };
    let reg = LpRegularizer::penalty(cfg.p, lambda).map_err(solver_err)?;
    let c: Vec<f64> = m.mu.iter().map(|v| cfg.eta * v).collect();
    report
        .certified_sequence()
        .iter()
        .map(|(x, mult)| {
            let nu = mult.set_dual.unwrap_or(0.0);
            alpha_residual(x, nu, &m.r, &c, &reg).map_err(solver_err)
        })
        .collect()
}

/// Daily Sharpe ratio `mean / stdev` of the portfolio's simple returns (sample
/// standard deviation), and its `√252` annualization.
pub fn sharpe_ratio(returns: &DMatrix<f64>, weights: &[f64]) -> Sharpe {
    let series = returns * DVector::from_column_slice(weights);
    let t = series.len() as f64;
    let mean = series.sum() / t;
    let var = series.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (t - 1.0);
    let daily = mean / var.sqrt();
    Sharpe {
        daily,
        annualized: daily * TRADING_DAYS_PER_YEAR.sqrt(),
    }
}

/// Reorders the columns of `panel`'s returns to follow `tickers`.
fn aligned_returns(panel: &PricePanel, tickers: &[String]) -> Result<DMatrix<f64>> {
    let returns = simple_returns(panel)?;
    let cols = tickers
        .iter()
        .map(|t| {
            panel
                .tickers
                .iter()
                .position(|u| u == t)
                .ok_or_else(|| PortfolioError::data(format!("ticker {t} missing from evaluation panel")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(returns.select_columns(&cols))
}

pub fn run_experiment(
    panel_in: &PricePanel,
    panel_out: Option<&PricePanel>,
    cfg: &ExperimentConfig,
) -> Result<ExperimentResult> {
    cfg.validate()?;
    let moments = estimate_moments(panel_in)?;
    let returns_in = simple_returns(panel_in)?;
    let returns_out = panel_out
        .map(|p| aligned_returns(p, &panel_in.tickers))
        .transpose()?;

    let reports = cfg
        .lambdas
        .par_iter()
        .map(|&lambda| solve_lambda(&moments, cfg, lambda))
        .collect::<Result<Vec<_>>>()?;

    let weights: Vec<Vec<f64>> = reports.iter().map(|r| r.x().to_vec()).collect();
    let nnz = weights.iter().map(|w| w.iter().filter(|v| **v != 0.0).count()).collect();
    let residual_trace = match (cfg.lambdas.first(), reports.first()) {
        (Some(&lambda), Some(report)) => residual_trajectory(report, &moments, cfg, lambda)?,
        _ => Vec::new(),
    };
    let sharpe_in = weights.iter().map(|w| sharpe_ratio(&returns_in, w)).collect();
    let sharpe_out = returns_out.map(|r| weights.iter().map(|w| sharpe_ratio(&r, w)).collect());
    Ok(ExperimentResult {
        tickers: panel_in.tickers.clone(),
        lambda_grid: cfg.lambdas.clone(),
        weights,
        nnz,
        residual_trace,
        sharpe_in,
        sharpe_out,
        reports,
    })
}
