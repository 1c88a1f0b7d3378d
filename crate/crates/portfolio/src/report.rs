//! CSV reports. Decimals use 17 significant digits; rows follow the λ grid.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{PortfolioError, Result};
use crate::experiment::ExperimentResult;

pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// File name of the weights report for `lambda`, e.g. `weights_1e-3.csv`.
pub fn weights_file_name(lambda: f64) -> String {
    format!("weights_{lambda:e}.csv")
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| PortfolioError::csv(path, e))?;
    w.write_record(header).map_err(|e| PortfolioError::csv(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| PortfolioError::csv(path, e))?;
    }
    w.flush().map_err(|e| PortfolioError::io(path, e))
}

/// Writes `residual_trajectory.csv`, `sparsity_vs_lambda.csv`, `sharpe.csv`
/// and one `weights_<λ>.csv` per λ into `outdir`, returning the paths written.
pub fn emit_reports(result: &ExperimentResult, outdir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(outdir).map_err(|e| PortfolioError::io(outdir, e))?;
    let mut written = Vec::new();

    let path = outdir.join("residual_trajectory.csv");
    write_csv(
        &path,
        &["iter", "alpha_residual"],
        result
            .residual_trace
            .iter()
            .enumerate()
            .map(|(k, v)| vec![(k + 1).to_string(), fmt17(*v)]),
    )?;
    written.push(path);

    let path = outdir.join("sparsity_vs_lambda.csv");
    write_csv(
        &path,
        &["lambda", "nnz"],
        result
            .lambda_grid
            .iter()
            .zip(&result.nnz)
            .map(|(l, n)| vec![fmt17(*l), n.to_string()]),
    )?;
    written.push(path);

    let path = outdir.join("sharpe.csv");
    let rows = (0..result.lambda_grid.len()).map(|k| {
        let inn = result.sharpe_in[k];
        let (od, oa) = match &result.sharpe_out {
            Some(out) => (fmt17(out[k].daily), fmt17(out[k].annualized)),
            None => (String::new(), String::new()),
        };
        vec![
            fmt17(result.lambda_grid[k]),
            result.nnz[k].to_string(),
            fmt17(inn.daily),
            fmt17(inn.annualized),
            od,
            oa,
        ]
    });
    write_csv(
        &path,
        &[
            "lambda",
            "nnz",
            "sharpe_in_daily",
            "sharpe_in_annualized",
            "sharpe_out_daily",
            "sharpe_out_annualized",
        ],
        rows,
    )?;
    written.push(path);

    for (lambda, w) in result.lambda_grid.iter().zip(&result.weights) {
        let path = outdir.join(weights_file_name(*lambda));
        write_csv(
            &path,
            &["ticker", "weight"],
            result.tickers.iter().zip(w).map(|(t, v)| vec![t.clone(), fmt17(*v)]),
        )?;
        written.push(path);
    }
    Ok(written)
}
