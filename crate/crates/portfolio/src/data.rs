//! Wide-CSV price panels: one `date` column followed by one column per ticker.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{PortfolioError, Result};

pub const DATE_FORMAT: &str = "%Y-%m-%d";

/// Tickers observed on fewer than this fraction of dates are dropped.
pub const COMPLETENESS_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    pub dates: Vec<NaiveDate>,
    pub tickers: Vec<String>,
    /// `prices[t][j]`: price of ticker `j` on date `t`; `None` if missing.
    pub prices: Vec<Vec<Option<f64>>>,
}

/// What [`PricePanel::clean`] changed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CleaningSummary {
    pub dropped: Vec<String>,
    pub filled: usize,
}

impl PricePanel {
    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_assets(&self) -> usize {
        self.tickers.len()
    }

    /// Price of ticker `j` on date `t`, panicking on a missing cell.
    pub fn price(&self, t: usize, j: usize) -> f64 {
        self.prices[t][j].expect("panel has been cleaned")
    }

    pub fn is_complete(&self) -> bool {
        self.prices.iter().all(|row| row.iter().all(Option::is_some))
    }

    /// Drops tickers below [`COMPLETENESS_THRESHOLD`], then forward-fills gaps;
    /// leading gaps take the first observed price.
    pub fn clean(mut self) -> (Self, CleaningSummary) {
        let t = self.n_dates();
        let keep: Vec<usize> = (0..self.n_assets())
            .filter(|&j| {
                let observed = self.prices.iter().filter(|row| row[j].is_some()).count();
                observed as f64 >= COMPLETENESS_THRESHOLD * t as f64
            })
            .collect();
        let mut summary = CleaningSummary::default();
        for j in 0..self.n_assets() {
            if !keep.contains(&j) {
                summary.dropped.push(self.tickers[j].clone());
            }
        }
        self.tickers = keep.iter().map(|&j| self.tickers[j].clone()).collect();
        for row in &mut self.prices {
            *row = keep.iter().map(|&j| row[j]).collect();
        }
        for j in 0..self.n_assets() {
            let first = self.prices.iter().find_map(|row| row[j]);
            let mut last = first;
            for row in &mut self.prices {
                match row[j] {
                    Some(v) => last = Some(v),
                    None => {
                        row[j] = last;
                        summary.filled += 1;
                    }
                }
            }
        }
        (self, summary)
    }

    /// Writes the panel in the format read by [`load_prices`].
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["date".to_string()];
        header.extend(self.tickers.iter().cloned());
        w.write_record(&header).map_err(|e| PortfolioError::csv("<writer>", e))?;
        for (d, row) in self.dates.iter().zip(&self.prices) {
            let mut rec = vec![d.format(DATE_FORMAT).to_string()];
            rec.extend(row.iter().map(|v| v.map(|p| format!("{p:.16e}")).unwrap_or_default()));
            w.write_record(&rec).map_err(|e| PortfolioError::csv("<writer>", e))?;
        }
        w.flush().map_err(|e| PortfolioError::io("<writer>", e))
    }
}

/// Reads, screens and fills a price panel from `path`.
pub fn load_prices(path: &Path) -> Result<PricePanel> {
    let file = File::open(path).map_err(|e| PortfolioError::io(path, e))?;
    let raw = parse_prices(file, &path.display().to_string())?;
    let (panel, summary) = raw.clean();
    log::info!(
        "{}: {} dates, {} tickers kept, {} dropped, {} cells forward-filled",
        path.display(),
        panel.n_dates(),
        panel.n_assets(),
        summary.dropped.len(),
        summary.filled
    );
    if !summary.dropped.is_empty() {
        log::info!("dropped tickers: {}", summary.dropped.join(","));
    }
    if panel.n_assets() < 2 {
        return Err(PortfolioError::data(format!(
            "{}: fewer than 2 tickers survive the completeness screen",
            path.display()
        )));
    }
    Ok(panel)
}

/// Parses the raw panel without screening or filling.
pub fn parse_prices<R: Read>(input: R, source: &str) -> Result<PricePanel> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers().map_err(|e| PortfolioError::csv(source, e))?.clone();
    if header.get(0).map(str::trim) != Some("date") {
        return Err(PortfolioError::parse(source, 1, "first column must be `date`"));
    }
    let tickers: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut seen = HashSet::new();
    if let Some(dup) = tickers.iter().find(|t| !seen.insert(t.as_str())) {
        return Err(PortfolioError::parse(source, 1, format!("duplicate ticker `{dup}`")));
    }

    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut prices = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| PortfolioError::csv(source, e))?;
        if rec.len() != tickers.len() + 1 {
            return Err(PortfolioError::parse(
                source,
                line,
                format!("expected {} fields, found {}", tickers.len() + 1, rec.len()),
            ));
        }
        let date = NaiveDate::parse_from_str(rec[0].trim(), DATE_FORMAT)
            .map_err(|e| PortfolioError::parse(source, line, format!("bad date `{}`: {e}", &rec[0])))?;
        if let Some(prev) = dates.last() {
            if date == *prev {
                return Err(PortfolioError::parse(source, line, format!("duplicate date {date}")));
            }
            if date < *prev {
                return Err(PortfolioError::parse(source, line, format!("date {date} out of order")));
            }
        }
        let row = rec
            .iter()
            .skip(1)
            .map(|cell| {
                let cell = cell.trim();
                if cell.is_empty() {
                    return Ok(None);
                }
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(Some(v)),
                    _ => Err(PortfolioError::parse(source, line, format!("bad price `{cell}`"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        dates.push(date);
        prices.push(row);
    }
    if dates.len() < 2 {
        return Err(PortfolioError::data(format!("{source}: fewer than 2 dates")));
    }
    if tickers.len() < 2 {
        return Err(PortfolioError::data(format!("{source}: fewer than 2 tickers")));
    }
    Ok(PricePanel { dates, tickers, prices })
}
