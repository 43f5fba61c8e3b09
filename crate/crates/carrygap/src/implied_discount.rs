//! Joint recovery of the option-implied discount factor and forward from the
//! strike cross-section of synthetic forwards.
//!
//! Within a date–maturity cell, parity makes the call–put mid difference
//! linear in strike: `G(K) = B*(F - K)`. A cross-sectional fit of `G` on `K`
//! therefore identifies `-B` as the slope and `B*F` as the intercept, so the
//! discount factor and forward are recovered jointly without a dividend input.
//! The default estimator is plain unweighted OLS; a Theil–Sen variant is
//! available for robustness checks but is not the default.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::{
    csv_error, csv_reader, csv_writer, io_error, MarketDataError, PairedQuote,
};
use crate::types::{year_fraction, CellKey, Market};

#[derive(Debug, Error, PartialEq)]
pub enum CellError {
    #[error("fewer than two pairs in cell")]
    TooFewPairs,
    #[error("degenerate strike cross-section (zero variance in K)")]
    DegenerateStrikes,
    #[error("parity slope sign (non-positive recovered discount factor)")]
    ParitySlopeSign,
    #[error("discount factor {b_hat} outside sanity band ({lo}, {hi})")]
    OutsideSanityBand { b_hat: f64, lo: f64, hi: f64 },
    #[error("non-positive recovered forward {0}")]
    NonPositiveForward(f64),
    #[error("tau must be positive, got {0}")]
    NonPositiveTau(f64),
}

/// Cross-sectional estimator choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellEstimator {
    Ols,
    TheilSen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub method: CellEstimator,
    /// Cells with a recovered discount factor outside this open interval are
    /// excluded as identification failures.
    pub b_hat_band: (f64, f64),
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            method: CellEstimator::Ols,
            b_hat_band: (0.5, 1.5),
        }
    }
}

/// Jointly recovered discount factor and forward for one date–maturity cell,
/// with fit diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEstimate {
    pub market: Market,
    pub quote_date: NaiveDate,
    pub expiry: NaiveDate,
    pub tau_years: f64,
    pub b_hat: f64,
    pub f_hat: f64,
    pub n_strikes: usize,
    /// Cross-sectional residual RMSE in price units.
    pub resid_rmse: f64,
    /// Median of `call_spread + put_spread` across the cell's pairs.
    pub ba_median: f64,
}

/// Estimates one cell. All pairs must share `(market, date, expiry)`.
pub fn estimate_cell(
    pairs: &[PairedQuote],
    tau_years: f64,
    cfg: &EstimatorConfig,
) -> Result<CellEstimate, CellError> {
    if pairs.len() < 2 {
        return Err(CellError::TooFewPairs);
    }
    if !tau_years.is_finite() || tau_years <= 0.0 {
        return Err(CellError::NonPositiveTau(tau_years));
    }

    let strikes: Vec<f64> = pairs.iter().map(|p| p.strike).collect();
    let forwards: Vec<f64> = pairs.iter().map(|p| p.synthetic_forward).collect();

    let (slope, intercept) = match cfg.method {
        CellEstimator::Ols => ols_line(&strikes, &forwards)?,
        CellEstimator::TheilSen => theil_sen_line(&strikes, &forwards)?,
    };

    let b_hat = -slope;
    if b_hat <= 0.0 {
        return Err(CellError::ParitySlopeSign);
    }
    let (lo, hi) = cfg.b_hat_band;
    if b_hat <= lo || b_hat >= hi {
        return Err(CellError::OutsideSanityBand { b_hat, lo, hi });
    }
    let f_hat = intercept / b_hat;
    if f_hat <= 0.0 {
        return Err(CellError::NonPositiveForward(f_hat));
    }

    let n = pairs.len() as f64;
    let sse: f64 = strikes
        .iter()
        .zip(&forwards)
        .map(|(&k, &g)| {
            let r = g - (intercept + slope * k);
            r * r
        })
        .sum();
    let resid_rmse = (sse / n).sqrt();

    let mut spreads: Vec<f64> = pairs.iter().map(|p| p.call_spread + p.put_spread).collect();
    let ba_median = median_in_place(&mut spreads);

    Ok(CellEstimate {
        market: pairs[0].market,
        quote_date: pairs[0].quote_date,
        expiry: pairs[0].expiry,
        tau_years,
        b_hat,
        f_hat,
        n_strikes: pairs.len(),
        resid_rmse,
        ba_median,
    })
}

fn ols_line(x: &[f64], y: &[f64]) -> Result<(f64, f64), CellError> {
    let n = x.len() as f64;
    let x_mean = x.iter().sum::<f64>() / n;
    let y_mean = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - x_mean) * (xi - x_mean);
        sxy += (xi - x_mean) * (yi - y_mean);
    }
    if sxx <= 0.0 {
        return Err(CellError::DegenerateStrikes);
    }
    let slope = sxy / sxx;
    Ok((slope, y_mean - slope * x_mean))
}

fn theil_sen_line(x: &[f64], y: &[f64]) -> Result<(f64, f64), CellError> {
    let mut slopes = Vec::with_capacity(x.len() * (x.len() - 1) / 2);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            if x[j] != x[i] {
                slopes.push((y[j] - y[i]) / (x[j] - x[i]));
            }
        }
    }
    if slopes.is_empty() {
        return Err(CellError::DegenerateStrikes);
    }
    let slope = median_in_place(&mut slopes);
    let mut intercepts: Vec<f64> = x.iter().zip(y).map(|(&xi, &yi)| yi - slope * xi).collect();
    let intercept = median_in_place(&mut intercepts);
    Ok((slope, intercept))
}

pub(crate) fn median_in_place(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// A cell that failed estimation, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellExclusion {
    pub market: Market,
    pub quote_date: NaiveDate,
    pub expiry: NaiveDate,
    pub reason: String,
}

/// Maps [`estimate_cell`] over every cell, collecting per-cell failures into
/// an exclusion audit. Maturity is ACT/365.25 on calendar days.
pub fn estimate_all(
    cells: &BTreeMap<CellKey, Vec<PairedQuote>>,
    cfg: &EstimatorConfig,
) -> (Vec<CellEstimate>, Vec<CellExclusion>) {
    let mut estimates = Vec::new();
    let mut exclusions = Vec::new();
    for (key, pairs) in cells {
        let tau = year_fraction(key.quote_date, key.expiry);
        match estimate_cell(pairs, tau, cfg) {
            Ok(est) => estimates.push(est),
            Err(e) => exclusions.push(CellExclusion {
                market: key.market,
                quote_date: key.quote_date,
                expiry: key.expiry,
                reason: e.to_string(),
            }),
        }
    }
    (estimates, exclusions)
}

/// Writes cell estimates as
/// `market,quote_date,expiry,tau_years,b_hat,f_hat,n_strikes,resid_rmse,ba_median`.
pub fn write_cells(path: &Path, estimates: &[CellEstimate]) -> Result<(), MarketDataError> {
    let mut writer = csv_writer(path)?;
    for est in estimates {
        writer.serialize(est).map_err(|e| csv_error(path, 0, e))?;
    }
    writer.flush().map_err(|e| io_error(path, e))?;
    Ok(())
}

pub fn load_cells(path: &Path) -> Result<Vec<CellEstimate>, MarketDataError> {
    let mut reader = csv_reader(path)?;
    let mut rows = Vec::new();
    for (idx, result) in reader.deserialize::<CellEstimate>().enumerate() {
        rows.push(result.map_err(|e| csv_error(path, idx as u64 + 1, e))?);
    }
    Ok(rows)
}
