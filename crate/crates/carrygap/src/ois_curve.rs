//! Daily OIS discount-curve bootstrap and evaluation.
//!
//! Input rates are annualized continuously-compounded zero rates in percent,
//! so each pillar discount factor is `exp(-r/100 * tenor)`. Evaluation is
//! log-linear in the discount factor with an implicit `DF(0) = 1` pillar,
//! which keeps the interpolated zero rate between the bracketing pillar zero
//! rates. Mild extrapolation (10% past the last pillar) continues the last
//! segment's forward rate.
//!
//! Changing the rate convention shifts carry-gap levels by basis-point-scale
//! amounts; alternative conventions plug in by replacing
//! [`continuous_zero_to_df`] at the bootstrap call site.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::{csv_error, csv_reader, csv_writer, io_error, MarketDataError};

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("empty quote list for {0}")]
    EmptyQuotes(NaiveDate),
    #[error("duplicate tenor {tenor} on {date}")]
    DuplicateTenor { date: NaiveDate, tenor: f64 },
    #[error("non-positive tenor {tenor} on {date}")]
    NonPositiveTenor { date: NaiveDate, tenor: f64 },
    #[error("non-finite rate at tenor {tenor} on {date}")]
    NonFiniteRate { date: NaiveDate, tenor: f64 },
    #[error("tau {tau} outside curve range (max tenor {max_tenor}, extrapolation bound {bound})")]
    TauOutOfRange {
        tau: f64,
        max_tenor: f64,
        bound: f64,
    },
    #[error("tau must be positive, got {0}")]
    NonPositiveTau(f64),
}

/// Discount factor under the continuously-compounded zero-rate convention.
pub fn continuous_zero_to_df(rate_pct: f64, tenor_years: f64) -> f64 {
    (-rate_pct / 100.0 * tenor_years).exp()
}

/// An immutable bootstrapped discount curve for one date.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OisCurve {
    curve_date: NaiveDate,
    /// `(tenor_years, discount_factor)`, sorted strictly by tenor.
    pillars: Vec<(f64, f64)>,
}

/// Bound on mild extrapolation past the last pillar, as a multiple of the
/// maximum tenor.
pub const EXTRAPOLATION_FACTOR: f64 = 1.1;

/// Bootstraps pillar discount factors from `(tenor_years, rate_pct)` quotes.
///
/// Deterministic: quotes are sorted by tenor, duplicates are an error.
pub fn bootstrap_curve(
    curve_date: NaiveDate,
    quotes: &[(f64, f64)],
) -> Result<OisCurve, CurveError> {
    if quotes.is_empty() {
        return Err(CurveError::EmptyQuotes(curve_date));
    }
    let mut sorted = quotes.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut pillars = Vec::with_capacity(sorted.len());
    let mut prev_tenor = 0.0;
    for &(tenor, rate_pct) in &sorted {
        if !tenor.is_finite() || tenor <= 0.0 {
            return Err(CurveError::NonPositiveTenor {
                date: curve_date,
                tenor,
            });
        }
        if tenor == prev_tenor {
            return Err(CurveError::DuplicateTenor {
                date: curve_date,
                tenor,
            });
        }
        if !rate_pct.is_finite() {
            return Err(CurveError::NonFiniteRate {
                date: curve_date,
                tenor,
            });
        }
        pillars.push((tenor, continuous_zero_to_df(rate_pct, tenor)));
        prev_tenor = tenor;
    }
    Ok(OisCurve {
        curve_date,
        pillars,
    })
}

impl OisCurve {
    pub fn curve_date(&self) -> NaiveDate {
        self.curve_date
    }

    pub fn pillars(&self) -> &[(f64, f64)] {
        &self.pillars
    }

    pub fn max_tenor(&self) -> f64 {
        self.pillars.last().map(|p| p.0).unwrap_or(0.0)
    }

    /// Number of pillar segments on which the discount factor increases with
    /// tenor (negative forward rate). Worth a warning, never an error.
    pub fn non_monotone_segments(&self) -> usize {
        let mut count = 0;
        let mut prev_df = 1.0;
        for &(_, df) in &self.pillars {
            if df > prev_df {
                count += 1;
            }
            prev_df = df;
        }
        count
    }

    /// Discount factor at `tau_years` by log-linear interpolation, exact at
    /// pillars, with `DF(0) = 1` as the implicit left pillar.
    pub fn discount_factor(&self, tau_years: f64) -> Result<f64, CurveError> {
        if !tau_years.is_finite() || tau_years <= 0.0 {
            return Err(CurveError::NonPositiveTau(tau_years));
        }
        let max_tenor = self.max_tenor();
        let bound = max_tenor * EXTRAPOLATION_FACTOR;
        if tau_years > bound {
            return Err(CurveError::TauOutOfRange {
                tau: tau_years,
                max_tenor,
                bound,
            });
        }

        // Bracketing segment in (tenor, ln DF) space; (0, 0) is the origin
        // pillar and the last segment extends to the extrapolation bound.
        let mut lo = (0.0, 0.0);
        let mut hi = None;
        for &(tenor, df) in &self.pillars {
            if tau_years <= tenor {
                hi = Some((tenor, df.ln()));
                break;
            }
            lo = (tenor, df.ln());
        }
        let (hi_tenor, hi_log) = match hi {
            Some(seg) => seg,
            None => {
                // Extrapolate the last segment's slope.
                let n = self.pillars.len();
                let (t_last, df_last) = self.pillars[n - 1];
                let (t_prev, log_prev) = if n >= 2 {
                    (self.pillars[n - 2].0, self.pillars[n - 2].1.ln())
                } else {
                    (0.0, 0.0)
                };
                let slope = (df_last.ln() - log_prev) / (t_last - t_prev);
                return Ok((df_last.ln() + slope * (tau_years - t_last)).exp());
            }
        };
        if tau_years == hi_tenor {
            return Ok(hi_log.exp());
        }
        let w = (tau_years - lo.0) / (hi_tenor - lo.0);
        Ok((lo.1 + w * (hi_log - lo.1)).exp())
    }

    /// Continuously-compounded zero rate in percent implied at `tau_years`.
    pub fn zero_rate_pct(&self, tau_years: f64) -> Result<f64, CurveError> {
        let df = self.discount_factor(tau_years)?;
        Ok(-df.ln() / tau_years * 100.0)
    }
}

/// One row of the OIS input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OisQuoteRow {
    pub date: NaiveDate,
    pub tenor_years: f64,
    pub rate_pct: f64,
}

/// Loads OIS quotes from `date,tenor_years,rate_pct` CSV.
pub fn load_ois(path: &Path) -> Result<Vec<OisQuoteRow>, MarketDataError> {
    let mut reader = csv_reader(path)?;
    let mut rows = Vec::new();
    for (idx, result) in reader.deserialize::<OisQuoteRow>().enumerate() {
        rows.push(result.map_err(|e| csv_error(path, idx as u64 + 1, e))?);
    }
    Ok(rows)
}

pub fn write_ois(path: &Path, rows: &[OisQuoteRow]) -> Result<(), MarketDataError> {
    let mut writer = csv_writer(path)?;
    for row in rows {
        writer.serialize(row).map_err(|e| csv_error(path, 0, e))?;
    }
    writer.flush().map_err(|e| io_error(path, e))?;
    Ok(())
}

/// Bootstraps one curve per date. Dates whose construction fails are
/// collected into the audit instead of aborting the batch.
pub fn curves_by_date(
    rows: &[OisQuoteRow],
) -> (BTreeMap<NaiveDate, OisCurve>, Vec<(NaiveDate, CurveError)>) {
    let mut grouped: BTreeMap<NaiveDate, Vec<(f64, f64)>> = BTreeMap::new();
    for row in rows {
        grouped
            .entry(row.date)
            .or_default()
            .push((row.tenor_years, row.rate_pct));
    }
    let mut curves = BTreeMap::new();
    let mut failures = Vec::new();
    for (date, quotes) in grouped {
        match bootstrap_curve(date, &quotes) {
            Ok(curve) => {
                curves.insert(date, curve);
            }
            Err(e) => failures.push((date, e)),
        }
    }
    (curves, failures)
}
