//! Fixed-seed factor-model price panels: `r = drift + B f + noise`.

use chrono::{Datelike, NaiveDate, Weekday};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::PricePanel;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub assets: usize,
    /// Price dates in the estimation window.
    pub days: usize,
    /// Price dates in the following evaluation window (0 for none).
    pub oos_days: usize,
    pub factors: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            assets: 50,
            days: 251,
            oos_days: 63,
            factors: 3,
            seed: 2024,
        }
    }
}

/// In-sample and out-of-sample panels from one simulated path. The evaluation
/// window starts on the trading day after the estimation window ends.
pub fn generate(cfg: &SyntheticConfig) -> (PricePanel, Option<PricePanel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let n = cfg.assets;

    let loadings = DMatrix::from_fn(n, cfg.factors, |_, k| {
        let scale = if k == 0 { 1.0 } else { 0.5 };
        scale * (0.8 + 0.4 * std.sample(&mut rng))
    });
    let factor_vol: Vec<f64> = (0..cfg.factors).map(|k| 0.008 / (1.0 + k as f64)).collect();
    let idio_vol: Vec<f64> = (0..n).map(|_| rng.random_range(0.008..0.025)).collect();
    let drift: Vec<f64> = (0..n).map(|_| 4e-4 + 6e-4 * std.sample(&mut rng)).collect();
    let mut price: Vec<f64> = (0..n).map(|_| rng.random_range(20.0..200.0)).collect();

    let total = cfg.days + cfg.oos_days;
    let dates = trading_days(NaiveDate::from_ymd_opt(2023, 1, 3).expect("valid date"), total);
    let mut rows = Vec::with_capacity(total);
    for t in 0..total {
        if t > 0 {
            let f = DVector::from_fn(cfg.factors, |k, _| factor_vol[k] * std.sample(&mut rng));
            let common = &loadings * f;
            for j in 0..n {
                let r = drift[j] + common[j] + idio_vol[j] * std.sample(&mut rng);
                price[j] *= 1.0 + r.max(-0.5);
            }
        }
        rows.push(price.iter().map(|p| Some(*p)).collect::<Vec<_>>());
    }
    let tickers: Vec<String> = (0..n).map(|j| format!("S{j:03}")).collect();
    let oos = (cfg.oos_days > 0).then(|| PricePanel {
        dates: dates[cfg.days..].to_vec(),
        tickers: tickers.clone(),
        prices: rows[cfg.days..].to_vec(),
    });
    rows.truncate(cfg.days);
    let panel = PricePanel {
        dates: dates[..cfg.days].to_vec(),
        tickers,
        prices: rows,
    };
    (panel, oos)
}

fn trading_days(start: NaiveDate, count: usize) -> Vec<NaiveDate> {
    start
        .iter_days()
        .filter(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
        .take(count)
        .collect()
}
