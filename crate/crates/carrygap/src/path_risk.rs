//! Brownian support-capital mathematics and the empirical GBM regressors.
//!
//! For zero-drift Brownian interim P&L with annualized volatility `sigma`,
//! the expected minimum capital injection that keeps the position solvent
//! through time `u` is `sigma * sqrt(2u/pi)`, and its average over a trade of
//! life `tau` is `(2/3) * sigma * sqrt(2*tau/pi)`. Preserving drift adds a
//! first-order directional term `-q*mu*tau/4`, where `q` is the sign of the
//! futures-leg exposure; the remainder is `O(mu^2 tau^(3/2) / sigma)`.
//!
//! The empirical regressors translate these burdens into basis points:
//! the diffusion term is `1e4 * (OIS/100) * (2/3) * (Vol/100) * sqrt(2tau/pi)`
//! (evaluated at the one-year and ten-year OIS rates), and the drift term is
//! `1e4 * (OIS1Y/100) * mu_ann * tau`, with the drift proxy `mu_ann` the
//! annualized (x252) prior-only rolling-OLS slope of the log total-return
//! index. No ten-year-scaled drift term is constructed.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use chrono::NaiveDate;
use serde::Serialize;
use thiserror::Error;

use crate::carry_gap_panel::CarryGapObservation;
use crate::econometrics::RegressorRow;
use crate::market_data::DailyMarketRow;
use crate::types::{EnforcementDirection, Market};

#[derive(Debug, Error, PartialEq)]
pub enum PathRiskError {
    #[error("negative volatility {0}")]
    NegativeSigma(f64),
    #[error("negative horizon {0}")]
    NegativeHorizon(f64),
    #[error("non-positive tau {0}")]
    NonPositiveTau(f64),
    #[error("drift expansion invalid at sigma=0 with mu={0}")]
    ZeroSigmaWithDrift(f64),
    #[error("rolling lookback must be at least 2, got {0}")]
    LookbackTooShort(usize),
    #[error("series dates must be strictly increasing")]
    UnsortedSeries,
}

/// Inputs to the drift-adjusted support-capital expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportCapitalParams {
    /// Annualized volatility, nonnegative.
    pub sigma: f64,
    /// Annualized drift.
    pub mu: f64,
    /// Enforcement direction (sign of the futures-leg drift exposure).
    pub q: EnforcementDirection,
    /// Trade life in years, positive.
    pub tau: f64,
}

/// `E[l_u] = sigma * sqrt(2u/pi)`: expected running shortfall level of
/// zero-drift Brownian interim P&L at time `u`.
pub fn expected_support_capital(sigma: f64, u: f64) -> Result<f64, PathRiskError> {
    if sigma < 0.0 {
        return Err(PathRiskError::NegativeSigma(sigma));
    }
    if u < 0.0 {
        return Err(PathRiskError::NegativeHorizon(u));
    }
    Ok(sigma * (2.0 * u / PI).sqrt())
}

/// Average capital burden over the trade life:
/// `(2/3) * sigma * sqrt(2*tau/pi)`.
pub fn average_burden(sigma: f64, tau: f64) -> Result<f64, PathRiskError> {
    if sigma < 0.0 {
        return Err(PathRiskError::NegativeSigma(sigma));
    }
    if !tau.is_finite() || tau <= 0.0 {
        return Err(PathRiskError::NonPositiveTau(tau));
    }
    Ok((2.0 / 3.0) * sigma * (2.0 * tau / PI).sqrt())
}

/// First-order drift-adjusted average burden:
/// `(2/3) * sigma * sqrt(2*tau/pi) - q*mu*tau/4`.
pub fn drift_adjusted_burden(p: &SupportCapitalParams) -> Result<f64, PathRiskError> {
    if p.sigma < 0.0 {
        return Err(PathRiskError::NegativeSigma(p.sigma));
    }
    if !p.tau.is_finite() || p.tau <= 0.0 {
        return Err(PathRiskError::NonPositiveTau(p.tau));
    }
    if p.sigma == 0.0 && p.mu != 0.0 {
        return Err(PathRiskError::ZeroSigmaWithDrift(p.mu));
    }
    Ok((2.0 / 3.0) * p.sigma * (2.0 * p.tau / PI).sqrt() - p.q.sign() * p.mu * p.tau / 4.0)
}

/// Diffusion path-risk regressor in basis points per year:
/// `1e4 * (ois_pct/100) * (2/3) * (vol_pct/100) * sqrt(2*tau/pi)`.
pub fn gbm_sigma_term(ois_pct: f64, vol_pct: f64, tau: f64) -> Result<f64, PathRiskError> {
    if !tau.is_finite() || tau <= 0.0 {
        return Err(PathRiskError::NonPositiveTau(tau));
    }
    Ok(1e4 * (ois_pct / 100.0) * (2.0 / 3.0) * (vol_pct / 100.0) * (2.0 * tau / PI).sqrt())
}

/// Drift margin-burden regressor in basis points per year:
/// `1e4 * (ois_1y_pct/100) * mu_ann * tau`.
pub fn gbm_mu_term(ois_1y_pct: f64, mu_ann: f64, tau: f64) -> Result<f64, PathRiskError> {
    if !tau.is_finite() || tau <= 0.0 {
        return Err(PathRiskError::NonPositiveTau(tau));
    }
    Ok(1e4 * (ois_1y_pct / 100.0) * mu_ann * tau)
}

/// The three GBM regressors for one observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GbmTerms {
    pub gbm_sigma_1y: f64,
    pub gbm_sigma_10y: f64,
    /// Absent during the drift-proxy warm-up window.
    pub gbm_mu_1y: Option<f64>,
}

/// Evaluates the GBM regressors for one maturity at one day's market state.
pub fn gbm_terms(
    day: &DailyMarketRow,
    mu_ann: Option<f64>,
    tau_years: f64,
) -> Result<GbmTerms, PathRiskError> {
    let gbm_sigma_1y = gbm_sigma_term(day.ois_1y_pct, day.vol_pct, tau_years)?;
    let gbm_sigma_10y = gbm_sigma_term(day.ois_10y_pct, day.vol_pct, tau_years)?;
    let gbm_mu_1y = match mu_ann {
        Some(mu) => Some(gbm_mu_term(day.ois_1y_pct, mu, tau_years)?),
        None => None,
    };
    Ok(GbmTerms {
        gbm_sigma_1y,
        gbm_sigma_10y,
        gbm_mu_1y,
    })
}

/// Annualized prior-only rolling drift proxy for one market.
///
/// The value at date `t` is the OLS slope of log total return on the
/// observation index over the `n` observations ending at `t-1` (exclusive of
/// `t`), annualized by 252. Dates with fewer than `n` prior observations
/// carry no value.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftProxySeries {
    pub market: Market,
    pub lookback_n: usize,
    values: BTreeMap<NaiveDate, f64>,
}

impl DriftProxySeries {
    pub fn value_at(&self, date: NaiveDate) -> Option<f64> {
        self.values.get(&date).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, f64)> + '_ {
        self.values.iter().map(|(&d, &v)| (d, v))
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.values.keys().next().copied()
    }
}

/// Builds the rolling drift proxy from a dated log total-return series.
///
/// Each window is computed directly from centered sums, so an exactly linear
/// input recovers the slope to machine precision at every date.
pub fn rolling_drift_proxy(
    market: Market,
    log_tr: &[(NaiveDate, f64)],
    n: usize,
) -> Result<DriftProxySeries, PathRiskError> {
    if n < 2 {
        return Err(PathRiskError::LookbackTooShort(n));
    }
    for w in log_tr.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(PathRiskError::UnsortedSeries);
        }
    }
    let mut values = BTreeMap::new();
    // Window for date t: observations t-n .. t-1.
    let x_mean = (n as f64 - 1.0) / 2.0;
    let sxx = (n as f64) * ((n * n - 1) as f64) / 12.0;
    for t in n..log_tr.len() {
        let window = &log_tr[t - n..t];
        let y_mean = window.iter().map(|(_, y)| y).sum::<f64>() / n as f64;
        let mut sxy = 0.0;
        for (idx, (_, y)) in window.iter().enumerate() {
            sxy += (idx as f64 - x_mean) * (y - y_mean);
        }
        let daily_slope = sxy / sxx;
        values.insert(log_tr[t].0, 252.0 * daily_slope);
    }
    Ok(DriftProxySeries {
        market,
        lookback_n: n,
        values,
    })
}

/// Extracts the dated log total-return series for one market from daily
/// rows, sorted by date.
pub fn log_tr_series(daily: &[DailyMarketRow], market: Market) -> Vec<(NaiveDate, f64)> {
    let mut series: Vec<(NaiveDate, f64)> = daily
        .iter()
        .filter(|r| r.market == market)
        .map(|r| (r.date, r.tr_index.ln()))
        .collect();
    series.sort_by_key(|(date, _)| *date);
    series
}

/// A panel observation that could not be joined to its daily inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JoinExclusion {
    pub market: Market,
    pub quote_date: NaiveDate,
    pub expiry: NaiveDate,
    pub reason: String,
}

/// Joins the carry-gap panel with daily market data and the drift proxy into
/// regression rows.
///
/// Rows on dates without daily data are dropped with an audit entry. Rows
/// inside the drift-proxy warm-up keep `gbm_mu_1y = None` (they belong to
/// the baseline sample but not the extended one) and are noted in the audit.
pub fn build_regressors(
    panel: &[CarryGapObservation],
    daily: &[DailyMarketRow],
    proxies: &BTreeMap<Market, DriftProxySeries>,
) -> (Vec<RegressorRow>, Vec<JoinExclusion>) {
    let daily_by_key: BTreeMap<(Market, NaiveDate), &DailyMarketRow> = daily
        .iter()
        .map(|row| ((row.market, row.date), row))
        .collect();

    let mut rows = Vec::new();
    let mut audit = Vec::new();
    for obs in panel {
        let Some(day) = daily_by_key.get(&(obs.market, obs.quote_date)) else {
            audit.push(JoinExclusion {
                market: obs.market,
                quote_date: obs.quote_date,
                expiry: obs.expiry,
                reason: "no daily market row".into(),
            });
            continue;
        };
        let mu_ann = proxies
            .get(&obs.market)
            .and_then(|p| p.value_at(obs.quote_date));
        let terms = match gbm_terms(day, mu_ann, obs.tau_years) {
            Ok(t) => t,
            Err(e) => {
                audit.push(JoinExclusion {
                    market: obs.market,
                    quote_date: obs.quote_date,
                    expiry: obs.expiry,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if terms.gbm_mu_1y.is_none() {
            audit.push(JoinExclusion {
                market: obs.market,
                quote_date: obs.quote_date,
                expiry: obs.expiry,
                reason: "drift proxy warm-up (row kept for baseline only)".into(),
            });
        }
        rows.push(RegressorRow {
            market: obs.market,
            quote_date: obs.quote_date,
            tau_years: obs.tau_years,
            cg_bp: obs.cg_bp,
            gbm_sigma_1y: terms.gbm_sigma_1y,
            gbm_sigma_10y: terms.gbm_sigma_10y,
            gbm_mu_1y: terms.gbm_mu_1y,
            ba_over_tau: obs.ba_over_tau,
            nfci: day.nfci,
        });
    }
    (rows, audit)
}
