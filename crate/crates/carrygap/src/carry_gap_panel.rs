//! The market–date–maturity carry-gap panel and its daily aggregates.
//!
//! The carry gap is the annualized log wedge between the OIS benchmark
//! discount factor and the option-implied one, `(1/tau) * ln(D_ois / b_hat)`,
//! reported in basis points. Daily series use the median across a date's
//! maturity cells; even counts average the two central values.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::implied_discount::{median_in_place, CellEstimate};
use crate::market_data::{
    csv_error, csv_reader, csv_writer, io_error, DailyMarketRow, MarketDataError,
};
use crate::ois_curve::OisCurve;
use crate::types::{Market, MaturityBucket};

#[derive(Debug, Error, PartialEq)]
pub enum PanelError {
    #[error("non-positive input to carry gap: d_ois={d_ois}, b_hat={b_hat}, tau={tau}")]
    NonPositiveInput { d_ois: f64, b_hat: f64, tau: f64 },
}

/// Annualized carry gap in decimal per year: `(1/tau) * ln(d_ois / b_hat)`.
pub fn carry_gap(d_ois: f64, b_hat: f64, tau_years: f64) -> Result<f64, PanelError> {
    if !(d_ois > 0.0 && b_hat > 0.0 && tau_years > 0.0) {
        return Err(PanelError::NonPositiveInput {
            d_ois,
            b_hat,
            tau: tau_years,
        });
    }
    Ok((d_ois / b_hat).ln() / tau_years)
}

/// One `(market, date, maturity)` panel row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarryGapObservation {
    pub market: Market,
    pub quote_date: NaiveDate,
    pub expiry: NaiveDate,
    pub tau_years: f64,
    /// Annualized log wedge in decimal per year.
    pub cg: f64,
    /// Exactly `1e4 * cg`.
    pub cg_bp: f64,
    /// `ba_median / tau_years`, the annualized friction control.
    pub ba_over_tau: f64,
    pub bucket: MaturityBucket,
}

/// A cell estimate that could not be joined to the OIS benchmark.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PanelExclusion {
    pub market: Market,
    pub quote_date: NaiveDate,
    pub expiry: NaiveDate,
    pub reason: String,
}

/// Joins cell estimates with per-date OIS curves into the carry-gap panel.
/// Estimates on dates without a curve, beyond the curve's range, or below the
/// one-month floor of the bucket table are dropped with an audit entry.
pub fn build_panel(
    estimates: &[CellEstimate],
    curves: &BTreeMap<NaiveDate, OisCurve>,
) -> (Vec<CarryGapObservation>, Vec<PanelExclusion>) {
    let mut panel = Vec::new();
    let mut exclusions = Vec::new();
    for est in estimates {
        let exclude = |reason: String| PanelExclusion {
            market: est.market,
            quote_date: est.quote_date,
            expiry: est.expiry,
            reason,
        };
        let Some(curve) = curves.get(&est.quote_date) else {
            exclusions.push(exclude("OIS curve construction fails".into()));
            continue;
        };
        let d_ois = match curve.discount_factor(est.tau_years) {
            Ok(df) => df,
            Err(e) => {
                exclusions.push(exclude(format!("OIS discount factor: {e}")));
                continue;
            }
        };
        let cg = match carry_gap(d_ois, est.b_hat, est.tau_years) {
            Ok(v) => v,
            Err(e) => {
                exclusions.push(exclude(e.to_string()));
                continue;
            }
        };
        let Some(bucket) = MaturityBucket::for_tau(est.tau_years) else {
            exclusions.push(exclude("maturity below 1m bucket floor".into()));
            continue;
        };
        panel.push(CarryGapObservation {
            market: est.market,
            quote_date: est.quote_date,
            expiry: est.expiry,
            tau_years: est.tau_years,
            cg,
            cg_bp: 1e4 * cg,
            ba_over_tau: est.ba_median / est.tau_years,
            bucket,
        });
    }
    (panel, exclusions)
}

/// Per-date median of `cg_bp` across maturity cells for one market.
pub fn daily_median(panel: &[CarryGapObservation], market: Market) -> Vec<(NaiveDate, f64)> {
    let mut by_date: BTreeMap<NaiveDate, Vec<f64>> = BTreeMap::new();
    for obs in panel.iter().filter(|o| o.market == market) {
        by_date.entry(obs.quote_date).or_default().push(obs.cg_bp);
    }
    by_date
        .into_iter()
        .map(|(date, mut values)| (date, median_in_place(&mut values)))
        .collect()
}

/// Paired standardized series for the cumulative-accrual diagnostic: the
/// within-bucket daily median carry gap cumulated over time, and the log
/// total-return index, both as z-scores over the common dates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccrualZscoreSeries {
    pub market: Market,
    pub bucket: MaturityBucket,
    pub dates: Vec<NaiveDate>,
    pub cum_cg_z: Vec<f64>,
    pub log_tr_z: Vec<f64>,
}

impl AccrualZscoreSeries {
    /// Pearson correlation of the two standardized series.
    pub fn correlation(&self) -> f64 {
        let n = self.dates.len() as f64;
        if n < 2.0 {
            return f64::NAN;
        }
        // Both series are z-scored (mean 0, population sd 1).
        self.cum_cg_z
            .iter()
            .zip(&self.log_tr_z)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            / n
    }
}

/// Builds the cumulative-accrual diagnostic for one market and bucket.
/// Dates must appear in both the panel (within the bucket) and the daily
/// market file; the intersection is used.
pub fn cumulative_accrual_zscore(
    panel: &[CarryGapObservation],
    daily: &[DailyMarketRow],
    market: Market,
    bucket: MaturityBucket,
) -> AccrualZscoreSeries {
    let mut by_date: BTreeMap<NaiveDate, Vec<f64>> = BTreeMap::new();
    for obs in panel
        .iter()
        .filter(|o| o.market == market && o.bucket == bucket)
    {
        by_date.entry(obs.quote_date).or_default().push(obs.cg_bp);
    }
    let tr_by_date: BTreeMap<NaiveDate, f64> = daily
        .iter()
        .filter(|r| r.market == market)
        .map(|r| (r.date, r.tr_index))
        .collect();

    let mut dates = Vec::new();
    let mut cum = Vec::new();
    let mut log_tr = Vec::new();
    let mut running = 0.0;
    for (date, mut values) in by_date {
        let Some(&tr) = tr_by_date.get(&date) else {
            continue;
        };
        running += median_in_place(&mut values);
        dates.push(date);
        cum.push(running);
        log_tr.push(tr.ln());
    }

    AccrualZscoreSeries {
        market,
        bucket,
        dates,
        cum_cg_z: zscore(&cum),
        log_tr_z: zscore(&log_tr),
    }
}

/// Z-score with the population standard deviation; a constant series maps
/// to all zeros.
pub fn zscore(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    if values.is_empty() {
        return Vec::new();
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd == 0.0 {
        return vec![0.0; values.len()];
    }
    values.iter().map(|v| (v - mean) / sd).collect()
}

/// Writes the panel as
/// `market,quote_date,expiry,tau_years,cg_bp,ba_over_tau,bucket`.
pub fn write_panel(path: &Path, panel: &[CarryGapObservation]) -> Result<(), MarketDataError> {
    #[derive(Serialize)]
    struct Row<'a> {
        market: Market,
        quote_date: NaiveDate,
        expiry: NaiveDate,
        tau_years: f64,
        cg_bp: f64,
        ba_over_tau: f64,
        bucket: &'a str,
    }
    let mut writer = csv_writer(path)?;
    for obs in panel {
        writer
            .serialize(Row {
                market: obs.market,
                quote_date: obs.quote_date,
                expiry: obs.expiry,
                tau_years: obs.tau_years,
                cg_bp: obs.cg_bp,
                ba_over_tau: obs.ba_over_tau,
                bucket: obs.bucket.label(),
            })
            .map_err(|e| csv_error(path, 0, e))?;
    }
    writer.flush().map_err(|e| io_error(path, e))?;
    Ok(())
}

pub fn load_panel(path: &Path) -> Result<Vec<CarryGapObservation>, MarketDataError> {
    #[derive(Deserialize)]
    struct Row {
        market: Market,
        quote_date: NaiveDate,
        expiry: NaiveDate,
        tau_years: f64,
        cg_bp: f64,
        ba_over_tau: f64,
        bucket: MaturityBucket,
    }
    let mut reader = csv_reader(path)?;
    let mut panel = Vec::new();
    for (idx, result) in reader.deserialize::<Row>().enumerate() {
        let row = result.map_err(|e| csv_error(path, idx as u64 + 1, e))?;
        panel.push(CarryGapObservation {
            market: row.market,
            quote_date: row.quote_date,
            expiry: row.expiry,
            tau_years: row.tau_years,
            cg: row.cg_bp / 1e4,
            cg_bp: row.cg_bp,
            ba_over_tau: row.ba_over_tau,
            bucket: row.bucket,
        });
    }
    Ok(panel)
}

/// Writes the daily median series as `date,market,cg_bp_median`.
pub fn write_daily_series(
    path: &Path,
    series: &BTreeMap<Market, Vec<(NaiveDate, f64)>>,
) -> Result<(), MarketDataError> {
    let mut writer = csv_writer(path)?;
    writer
        .write_record(["date", "market", "cg_bp_median"])
        .map_err(|e| csv_error(path, 0, e))?;
    // Interleave by date across markets for a chronologically ordered file.
    let mut rows: Vec<(NaiveDate, Market, f64)> = Vec::new();
    for (&market, points) in series {
        for &(date, value) in points {
            rows.push((date, market, value));
        }
    }
    rows.sort_by_key(|&(date, market, _)| (date, market));
    for (date, market, value) in rows {
        writer
            .write_record(&[date.to_string(), market.to_string(), value.to_string()])
            .map_err(|e| csv_error(path, 0, e))?;
    }
    writer.flush().map_err(|e| io_error(path, e))?;
    Ok(())
}
