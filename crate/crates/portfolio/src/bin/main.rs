use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irl1::SolverParams;
use irl1_portfolio::{
    emit_reports, generate, load_prices, run_experiment, ExperimentConfig, PortfolioError, PricePanel,
    SyntheticConfig,
};

/// Sparse long-only mean-variance portfolios with an lp penalty.
#[derive(Parser, Debug)]
#[command(name = "irl1-portfolio", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve for a single penalty weight.
    Solve {
        #[arg(long, default_value_t = 1e-3)]
        lambda: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Solve over a grid of penalty weights.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "1e-5,1e-4,1e-3,1e-2,1e-1")]
        lambda_grid: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Wide price CSV (`date` column plus one column per ticker). A synthetic
    /// panel is generated when omitted.
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Price CSV for out-of-sample Sharpe ratios.
    #[arg(long)]
    oos_prices: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-3)]
    eta: f64,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value_t = 0.998)]
    alpha: f64,
    #[arg(long, default_value_t = 1.1)]
    beta_factor: f64,
    #[arg(long, default_value_t = 1e-3)]
    eps0: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol_step: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol_residual: f64,
    /// Seed of the synthetic panel.
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn panels(common: &Common) -> Result<(PricePanel, Option<PricePanel>), PortfolioError> {
    match &common.prices {
        Some(path) => {
            let oos = common.oos_prices.as_deref().map(load_prices).transpose()?;
            Ok((load_prices(path)?, oos))
        }
        None => {
            let (panel, synthetic_oos) = generate(&SyntheticConfig {
                seed: common.seed,
                ..SyntheticConfig::default()
            });
            let oos = match common.oos_prices.as_deref() {
                Some(path) => Some(load_prices(path)?),
                None => synthetic_oos,
            };
            Ok((panel, oos))
        }
    }
}

fn run(lambdas: Vec<f64>, common: Common) -> Result<(), PortfolioError> {
    let cfg = ExperimentConfig {
        eta: common.eta,
        p: common.p,
        lambdas,
        solver: SolverParams {
            alpha: common.alpha,
            beta_factor: common.beta_factor,
            eps0: common.eps0,
            max_iters: common.max_iters,
            tol_step: common.tol_step,
            tol_residual: common.tol_residual,
            ..SolverParams::default()
        },
    };
    let (panel, oos) = panels(&common)?;
    let result = run_experiment(&panel, oos.as_ref(), &cfg)?;
    for (k, lambda) in result.lambda_grid.iter().enumerate() {
        let rep = &result.reports[k];
        println!(
            "lambda={lambda:e} nnz={} iterations={} termination={:?} sharpe_in_annualized={:.6}",
            result.nnz[k],
            rep.iterations(),
            rep.termination,
            result.sharpe_in[k].annualized
        );
    }
    for path in emit_reports(&result, &common.out)? {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Solve { lambda, common } => run(vec![lambda], common),
        Command::Sweep { lambda_grid, common } => run(lambda_grid, common),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
