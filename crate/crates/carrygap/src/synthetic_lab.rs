//! Synthetic-market generation and Monte Carlo verification.
//!
//! The generator simulates a GBM index path, prices European calls and puts
//! on the forward `F = S / D_ois(tau)` with an imposed discount wedge
//! `B = D_ois * exp(-cg_true * tau)`, and emits files in the exact schemas
//! the ingestion layer consumes, together with a per-cell truth ledger. Runs
//! of the full pipeline against that ledger are the round-trip oracle for
//! every formula downstream.
//!
//! The Monte Carlo estimator simulates the running maximum of drifted
//! Brownian motion in antithetic pairs with deterministic per-pair seeding.
//! Within each Euler step the interval supremum is sampled from its exact
//! Brownian-bridge law, which removes the discrete-supremum bias of a plain
//! grid maximum (at 2000 steps/year that bias is several MC standard errors
//! wide and would swamp closed-form comparisons). The plain grid maximum
//! remains available as a scheme for studying exactly that bias.

use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market_data::{
    csv_error, csv_writer, io_error, write_daily, write_quotes, DailyMarketRow, MarketDataError,
    OptionQuote,
};
use crate::ois_curve::{bootstrap_curve, write_ois, OisCurve, OisQuoteRow};
use crate::path_risk::{gbm_mu_term, gbm_sigma_term, rolling_drift_proxy};
use crate::types::{year_fraction, EnforcementDirection, Market, OptionRight};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),
    #[error("monte carlo needs at least 1000 paths, got {0}")]
    TooFewPaths(usize),
    #[error("monte carlo paths must come in antithetic pairs (even count), got {0}")]
    OddPathCount(usize),
    #[error(
        "monte carlo needs at least 100 steps per unit horizon, got {steps} for horizon {horizon}"
    )]
    TooFewSteps { steps: usize, horizon: f64 },
    #[error("negative volatility {0}")]
    NegativeSigma(f64),
    #[error("non-positive horizon {0}")]
    NonPositiveHorizon(f64),
    #[error(transparent)]
    File(#[from] MarketDataError),
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn stream_rng(seed: u64, role: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ role.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

/// Standard normal CDF.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

// ---------------------------------------------------------------------------
// Monte Carlo running maximum
// ---------------------------------------------------------------------------

/// How the within-step supremum is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupremumScheme {
    /// Maximum over grid points only; biased low by ~ `0.58 * sigma * sqrt(dt)`.
    GridMax,
    /// Exact conditional supremum of the Brownian bridge on each step.
    BridgeExact,
}

/// Monte Carlo estimates of the running-maximum functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McRunningMax {
    /// Estimate of the time-averaged expected support capital
    /// `(1/tau) * integral E[l_u] du`.
    pub time_avg: f64,
    pub time_avg_se: f64,
    /// Estimate of the terminal expected support capital `E[l_tau]`.
    pub terminal: f64,
    pub terminal_se: f64,
    pub n_paths: usize,
    pub n_steps: usize,
}

/// Simulates `sup_{s<=u} (-q*mu*s - sigma*B_s)` per path, averages over `u`
/// by trapezoid on the step grid, then over paths. Antithetic pairs share a
/// deterministic per-pair substream of `seed`, so the result is bit-identical
/// for a given seed regardless of thread count.
#[allow(clippy::too_many_arguments)]
pub fn mc_running_max(
    sigma: f64,
    mu: f64,
    q: EnforcementDirection,
    horizon: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    scheme: SupremumScheme,
) -> Result<McRunningMax, SimError> {
    if sigma < 0.0 {
        return Err(SimError::NegativeSigma(sigma));
    }
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(SimError::NonPositiveHorizon(horizon));
    }
    if n_paths < 1000 {
        return Err(SimError::TooFewPaths(n_paths));
    }
    if !n_paths.is_multiple_of(2) {
        return Err(SimError::OddPathCount(n_paths));
    }
    if (n_steps as f64) < 100.0 * horizon {
        return Err(SimError::TooFewSteps {
            steps: n_steps,
            horizon,
        });
    }

    let dt = horizon / n_steps as f64;
    let drift_step = -q.sign() * mu * dt;
    let vol_step = sigma * dt.sqrt();
    let bridge_var = sigma * sigma * dt;
    let n_pairs = n_paths / 2;

    let pair_values: Vec<(f64, f64)> = (0..n_pairs)
        .into_par_iter()
        .map(|pair| {
            let mut rng = stream_rng(seed, 0x4D43_0000 + pair as u64);
            let mut y_plus = 0.0_f64;
            let mut y_minus = 0.0_f64;
            let mut max_plus = 0.0_f64;
            let mut max_minus = 0.0_f64;
            let mut acc_plus = 0.0_f64;
            let mut acc_minus = 0.0_f64;
            for _ in 0..n_steps {
                let z: f64 = StandardNormal.sample(&mut rng);
                let next_plus = y_plus + drift_step + vol_step * z;
                let next_minus = y_minus + drift_step - vol_step * z;
                let (cand_plus, cand_minus) = match scheme {
                    SupremumScheme::GridMax => (next_plus, next_minus),
                    SupremumScheme::BridgeExact => {
                        // Conditional supremum of a Brownian bridge between the
                        // endpoints; the same uniform serves both antithetic legs.
                        let u: f64 = 1.0 - rng.gen::<f64>();
                        let log_u = u.ln();
                        let dp = next_plus - y_plus;
                        let dm = next_minus - y_minus;
                        let sup_p = 0.5
                            * (y_plus + next_plus + (dp * dp - 2.0 * bridge_var * log_u).sqrt());
                        let sup_m = 0.5
                            * (y_minus + next_minus + (dm * dm - 2.0 * bridge_var * log_u).sqrt());
                        (sup_p, sup_m)
                    }
                };
                let new_max_plus = max_plus.max(cand_plus);
                let new_max_minus = max_minus.max(cand_minus);
                acc_plus += 0.5 * (max_plus + new_max_plus) * dt;
                acc_minus += 0.5 * (max_minus + new_max_minus) * dt;
                max_plus = new_max_plus;
                max_minus = new_max_minus;
                y_plus = next_plus;
                y_minus = next_minus;
            }
            (
                0.5 * (acc_plus + acc_minus) / horizon,
                0.5 * (max_plus + max_minus),
            )
        })
        .collect();

    let summarize = |values: &dyn Fn(&(f64, f64)) -> f64| -> (f64, f64) {
        let n = n_pairs as f64;
        let mean = pair_values.iter().map(values).sum::<f64>() / n;
        let var = pair_values
            .iter()
            .map(|v| {
                let d = values(v) - mean;
                d * d
            })
            .sum::<f64>()
            / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    let (time_avg, time_avg_se) = summarize(&|v: &(f64, f64)| v.0);
    let (terminal, terminal_se) = summarize(&|v: &(f64, f64)| v.1);

    Ok(McRunningMax {
        time_avg,
        time_avg_se,
        terminal,
        terminal_se,
        n_paths,
        n_steps,
    })
}

// ---------------------------------------------------------------------------
// Synthetic market generator
// ---------------------------------------------------------------------------

/// Per-market simulation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub market: Market,
    pub spot0: f64,
    /// Annualized drift of the simulated total-return path.
    pub drift_true: f64,
    /// Annualized volatility of the simulated path.
    pub vol_true: f64,
    /// Amplitude of the quoted volatility index around `vol_true` (pct pts).
    pub vol_wiggle: f64,
}

impl MarketParams {
    pub fn default_for(market: Market) -> Self {
        match market {
            Market::Spx => MarketParams {
                market,
                spot0: 2000.0,
                drift_true: 0.07,
                vol_true: 0.18,
                vol_wiggle: 4.0,
            },
            Market::Rut => MarketParams {
                market,
                spot0: 1100.0,
                drift_true: 0.08,
                vol_true: 0.22,
                vol_wiggle: 5.0,
            },
        }
    }
}

/// The imposed carry-gap truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CgTruth {
    /// A constant wedge in basis points.
    ConstantBp(f64),
    /// A linear function of the GBM regressors plus iid noise.
    Linear {
        alpha: f64,
        phi_1: f64,
        phi_10: f64,
        psi: f64,
        beta: f64,
        gamma: f64,
        noise_sd_bp: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticMarketConfig {
    pub seed: u64,
    /// First quote date (weekends are skipped).
    pub start_date: NaiveDate,
    pub n_years: usize,
    pub markets: Vec<MarketParams>,
    pub ois_1y_base_pct: f64,
    pub ois_10y_base_pct: f64,
    /// Amplitude of the slow rate cycles (pct points); the 1y and 10y legs
    /// move on different periods so the two diffusion terms stay identified.
    pub rate_wiggle_pct: f64,
    pub cg_true: CgTruth,
    /// Lookback of the drift proxy feeding a `Linear` truth.
    pub proxy_lookback: usize,
    /// Trading days of total-return/rate history emitted before the first
    /// quote date, so the drift proxy has no warm-up gap inside the sample.
    pub daily_history_days: usize,
    /// Relative moneyness offsets of the strike ladder.
    pub strike_grid: Vec<f64>,
    /// Half bid–ask spread in index points.
    pub half_spread: f64,
    /// Gaussian noise added to mid prices (index points).
    pub mid_noise_sd: f64,
    /// Quotes round to this tick; 0 disables rounding.
    pub tick: f64,
    /// Trading days between listed expiries.
    pub expiry_every_days: usize,
    /// Calendar-day window of listed maturities per quote date.
    pub min_tau_days: i64,
    pub max_tau_days: i64,
    pub n_expiries: usize,
    pub snapshot_minute: u32,
}

impl Default for SyntheticMarketConfig {
    fn default() -> Self {
        SyntheticMarketConfig {
            seed: 42,
            start_date: NaiveDate::from_ymd_opt(2016, 1, 4).unwrap(),
            n_years: 2,
            markets: vec![MarketParams::default_for(Market::Spx)],
            ois_1y_base_pct: 4.0,
            ois_10y_base_pct: 4.2,
            rate_wiggle_pct: 0.8,
            cg_true: CgTruth::ConstantBp(25.0),
            proxy_lookback: 504,
            daily_history_days: 700,
            strike_grid: (-10..=10).map(|i| f64::from(i) * 0.01).collect(),
            half_spread: 0.10,
            mid_noise_sd: 0.0,
            tick: 0.05,
            expiry_every_days: 63,
            min_tau_days: 32,
            max_tau_days: 760,
            n_expiries: 8,
            snapshot_minute: 15 * 60 + 45,
        }
    }
}

impl SyntheticMarketConfig {
    fn validate(&self) -> Result<(), SimError> {
        if self.markets.is_empty() {
            return Err(SimError::InvalidConfig("no markets configured".into()));
        }
        for m in &self.markets {
            if !m.vol_true.is_finite() || m.vol_true <= 0.0 {
                return Err(SimError::InvalidConfig(format!(
                    "vol_true must be positive for {}",
                    m.market
                )));
            }
            if !m.spot0.is_finite() || m.spot0 <= 0.0 {
                return Err(SimError::InvalidConfig(format!(
                    "spot0 must be positive for {}",
                    m.market
                )));
            }
        }
        if self.n_years == 0 {
            return Err(SimError::InvalidConfig("n_years must be positive".into()));
        }
        if self.strike_grid.len() < 2 {
            return Err(SimError::InvalidConfig(
                "strike_grid needs at least 2 offsets".into(),
            ));
        }
        if self.min_tau_days >= self.max_tau_days {
            return Err(SimError::InvalidConfig(
                "min_tau_days must be below max_tau_days".into(),
            ));
        }
        if self.expiry_every_days == 0 || self.n_expiries == 0 {
            return Err(SimError::InvalidConfig(
                "expiry ladder must be non-empty".into(),
            ));
        }
        if self.half_spread < 0.0 || self.mid_noise_sd < 0.0 || self.tick < 0.0 {
            return Err(SimError::InvalidConfig(
                "spread, noise, and tick must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// One truth-ledger row: the imposed discount factor, forward, and wedge for
/// a generated cell, plus generation bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthRow {
    pub quote_date: NaiveDate,
    pub expiry: NaiveDate,
    pub b_true: f64,
    pub f_true: f64,
    pub cg_true_bp: f64,
    /// Strikes generated for the cell (not serialized to the ledger file).
    #[serde(skip)]
    pub n_strikes: usize,
}

/// A fully generated synthetic market.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMarket {
    pub quotes: Vec<OptionQuote>,
    pub daily: Vec<DailyMarketRow>,
    pub ois: Vec<OisQuoteRow>,
    pub truth: BTreeMap<Market, Vec<TruthRow>>,
}

/// Paths of the files written by [`SyntheticMarket::write_files`].
#[derive(Debug, Clone)]
pub struct SyntheticFiles {
    pub quotes: PathBuf,
    pub daily: PathBuf,
    pub ois: PathBuf,
    pub truth: BTreeMap<Market, PathBuf>,
}

const OIS_PILLAR_TENORS: [f64; 9] = [1.0 / 12.0, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0];

fn next_weekday(mut date: NaiveDate) -> NaiveDate {
    loop {
        date = date + chrono::Days::new(1);
        if !matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
            return date;
        }
    }
}

fn prev_weekday(mut date: NaiveDate) -> NaiveDate {
    loop {
        date = date - chrono::Days::new(1);
        if !matches!(date.weekday(), Weekday::Sat | Weekday::Sun) {
            return date;
        }
    }
}

fn round_to_tick(value: f64, tick: f64) -> f64 {
    if tick <= 0.0 {
        value
    } else {
        (value / tick).round() * tick
    }
}

/// Black pricing on the forward: `C = B*(F*N(d1) - K*N(d2))`.
fn price_pair(forward: f64, strike: f64, df: f64, vol: f64, tau: f64) -> (f64, f64) {
    let sig_sqrt = vol * tau.sqrt();
    let d1 = ((forward / strike).ln() + 0.5 * sig_sqrt * sig_sqrt) / sig_sqrt;
    let d2 = d1 - sig_sqrt;
    let call = df * (forward * norm_cdf(d1) - strike * norm_cdf(d2));
    let put = df * (strike * norm_cdf(-d2) - forward * norm_cdf(-d1));
    (call, put)
}

/// Generates a synthetic market: index paths, daily market data, an OIS
/// surface, option quotes in the documented schema, and the truth ledger.
pub fn generate_market(cfg: &SyntheticMarketConfig) -> Result<SyntheticMarket, SimError> {
    cfg.validate()?;

    // Trading-day timeline: history for the drift proxy, the quote window,
    // and enough extension to host every listed expiry.
    let n_quote_days = cfg.n_years * 252;
    let mut history = Vec::with_capacity(cfg.daily_history_days);
    let mut cursor = cfg.start_date;
    if matches!(cfg.start_date.weekday(), Weekday::Sat | Weekday::Sun) {
        return Err(SimError::InvalidConfig(
            "start_date falls on a weekend".into(),
        ));
    }
    for _ in 0..cfg.daily_history_days {
        cursor = prev_weekday(cursor);
        history.push(cursor);
    }
    history.reverse();
    let mut quote_dates = Vec::with_capacity(n_quote_days);
    cursor = cfg.start_date;
    quote_dates.push(cursor);
    while quote_dates.len() < n_quote_days {
        cursor = next_weekday(cursor);
        quote_dates.push(cursor);
    }
    let last_quote = *quote_dates.last().unwrap();
    let expiry_horizon = last_quote + chrono::Days::new(cfg.max_tau_days as u64 + 7);
    let mut extension = Vec::new();
    while cursor < expiry_horizon {
        cursor = next_weekday(cursor);
        extension.push(cursor);
    }

    // Expiry ladder anchored at the first quote date.
    let ladder_dates: Vec<NaiveDate> = quote_dates
        .iter()
        .chain(extension.iter())
        .copied()
        .collect();
    let expiries: Vec<NaiveDate> = ladder_dates
        .iter()
        .step_by(cfg.expiry_every_days)
        .copied()
        .collect();

    // Market-independent series over history + quote window.
    let all_daily_dates: Vec<NaiveDate> =
        history.iter().chain(quote_dates.iter()).copied().collect();
    let t_total = all_daily_dates.len();
    let mut rng_rates = stream_rng(cfg.seed, 1);
    let mut rng_nfci = stream_rng(cfg.seed, 2);
    let mut ois_1y = Vec::with_capacity(t_total);
    let mut ois_10y = Vec::with_capacity(t_total);
    let mut nfci = Vec::with_capacity(t_total);
    let mut ar_1y = 0.0_f64;
    let mut ar_10y = 0.0_f64;
    let mut ar_nfci = 0.0_f64;
    for t in 0..t_total {
        let ty = t as f64 / 252.0;
        ar_1y = 0.995 * ar_1y + 0.02 * rng_rates.sample::<f64, _>(StandardNormal);
        ar_10y = 0.995 * ar_10y + 0.015 * rng_rates.sample::<f64, _>(StandardNormal);
        ar_nfci = 0.98 * ar_nfci + 0.06 * rng_nfci.sample::<f64, _>(StandardNormal);
        ois_1y.push(
            cfg.ois_1y_base_pct
                + cfg.rate_wiggle_pct * (2.0 * std::f64::consts::PI * ty / 3.0).sin()
                + ar_1y,
        );
        ois_10y.push(
            cfg.ois_10y_base_pct
                + 0.8 * cfg.rate_wiggle_pct * (2.0 * std::f64::consts::PI * ty / 7.0 + 1.0).sin()
                + ar_10y,
        );
        nfci.push(ar_nfci);
    }

    // Per-market paths.
    struct MarketSeries {
        params: MarketParams,
        tr: Vec<f64>,
        vol_pct: Vec<f64>,
    }
    let mut series = Vec::new();
    for (mi, params) in cfg.markets.iter().enumerate() {
        let mut rng_path = stream_rng(cfg.seed, 16 + 4 * mi as u64);
        let mut rng_vol = stream_rng(cfg.seed, 17 + 4 * mi as u64);
        let dt = 1.0 / 252.0;
        let mut tr = Vec::with_capacity(t_total);
        let mut level = params.spot0;
        let mut vol_ar = 0.0_f64;
        let mut vol_pct = Vec::with_capacity(t_total);
        for t in 0..t_total {
            tr.push(level);
            let z: f64 = rng_path.sample(StandardNormal);
            level *= ((params.drift_true - 0.5 * params.vol_true * params.vol_true) * dt
                + params.vol_true * dt.sqrt() * z)
                .exp();
            let ty = t as f64 / 252.0;
            vol_ar = 0.97 * vol_ar + 0.4 * rng_vol.sample::<f64, _>(StandardNormal);
            let v = params.vol_true * 100.0
                + params.vol_wiggle * (2.0 * std::f64::consts::PI * ty / 2.5 + mi as f64).sin()
                + vol_ar;
            vol_pct.push(v.max(5.0));
        }
        series.push(MarketSeries {
            params: params.clone(),
            tr,
            vol_pct,
        });
    }

    // Daily rows (history + quote window) for every market.
    let mut daily = Vec::new();
    for (t, &date) in all_daily_dates.iter().enumerate() {
        for s in &series {
            daily.push(DailyMarketRow {
                date,
                market: s.params.market,
                tr_index: s.tr[t],
                vol_pct: s.vol_pct[t],
                ois_1y_pct: ois_1y[t],
                ois_10y_pct: ois_10y[t],
                nfci: nfci[t],
            });
        }
    }

    // OIS pillar rows and bootstrapped curves for quote dates.
    let mut ois_rows = Vec::new();
    let mut curves: BTreeMap<NaiveDate, OisCurve> = BTreeMap::new();
    let offset = history.len();
    for (qi, &date) in quote_dates.iter().enumerate() {
        let r1 = ois_1y[offset + qi];
        let r10 = ois_10y[offset + qi];
        let mut pillar_quotes = Vec::with_capacity(OIS_PILLAR_TENORS.len());
        for &tenor in &OIS_PILLAR_TENORS {
            let rate = r1 + (r10 - r1) * tenor.ln() / 10.0_f64.ln();
            ois_rows.push(OisQuoteRow {
                date,
                tenor_years: tenor,
                rate_pct: rate,
            });
            pillar_quotes.push((tenor, rate));
        }
        let curve = bootstrap_curve(date, &pillar_quotes)
            .expect("generated pillar set is valid by construction");
        curves.insert(date, curve);
    }

    // Drift proxies per market over the full daily history, matching what
    // the pipeline will compute from the emitted daily file.
    let mut proxies = BTreeMap::new();
    if matches!(cfg.cg_true, CgTruth::Linear { .. }) {
        for s in &series {
            let log_tr: Vec<(NaiveDate, f64)> = all_daily_dates
                .iter()
                .zip(&s.tr)
                .map(|(&d, &v)| (d, v.ln()))
                .collect();
            let proxy = rolling_drift_proxy(s.params.market, &log_tr, cfg.proxy_lookback)
                .map_err(|e| SimError::InvalidConfig(format!("proxy lookback: {e}")))?;
            proxies.insert(s.params.market, proxy);
        }
    }

    // Cells: price the ladder, impose the wedge, record the truth.
    let mut rng_cg = stream_rng(cfg.seed, 3);
    let mut rng_noise = stream_rng(cfg.seed, 4);
    let mut quotes = Vec::new();
    let mut truth: BTreeMap<Market, Vec<TruthRow>> = BTreeMap::new();
    let ba_true = 4.0 * cfg.half_spread;
    for s in &series {
        let market = s.params.market;
        let truth_rows = truth.entry(market).or_default();
        for (qi, &date) in quote_dates.iter().enumerate() {
            let t = offset + qi;
            let spot = s.tr[t];
            let vol = s.vol_pct[t] / 100.0;
            let curve = &curves[&date];
            let listed: Vec<NaiveDate> = expiries
                .iter()
                .copied()
                .filter(|&e| {
                    let days = (e - date).num_days();
                    days >= cfg.min_tau_days && days <= cfg.max_tau_days
                })
                .take(cfg.n_expiries)
                .collect();
            for expiry in listed {
                let tau = year_fraction(date, expiry);
                let d_ois = curve
                    .discount_factor(tau)
                    .expect("listed maturities sit inside the pillar range");
                let cg_true_bp = match &cfg.cg_true {
                    CgTruth::ConstantBp(c) => *c,
                    CgTruth::Linear {
                        alpha,
                        phi_1,
                        phi_10,
                        psi,
                        beta,
                        gamma,
                        noise_sd_bp,
                    } => {
                        let gs1 =
                            gbm_sigma_term(ois_1y[t], s.vol_pct[t], tau).expect("tau positive");
                        let gs10 =
                            gbm_sigma_term(ois_10y[t], s.vol_pct[t], tau).expect("tau positive");
                        let mu_ann = proxies[&market]
                            .value_at(date)
                            .expect("history covers the proxy lookback");
                        let gmu = gbm_mu_term(ois_1y[t], mu_ann, tau).expect("tau positive");
                        let eps: f64 = rng_cg.sample(StandardNormal);
                        alpha
                            + phi_1 * gs1
                            + phi_10 * gs10
                            + psi * gmu
                            + beta * (ba_true / tau)
                            + gamma * nfci[t]
                            + noise_sd_bp * eps
                    }
                };
                let b_true = d_ois * (-cg_true_bp / 1e4 * tau).exp();
                let f_true = spot / d_ois;
                truth_rows.push(TruthRow {
                    quote_date: date,
                    expiry,
                    b_true,
                    f_true,
                    cg_true_bp,
                    n_strikes: cfg.strike_grid.len(),
                });
                for &moneyness in &cfg.strike_grid {
                    let strike = (spot * (1.0 + moneyness)).round().max(1.0);
                    let (mut call_mid, mut put_mid) = price_pair(f_true, strike, b_true, vol, tau);
                    if cfg.mid_noise_sd > 0.0 {
                        call_mid += cfg.mid_noise_sd * rng_noise.sample::<f64, _>(StandardNormal);
                        put_mid += cfg.mid_noise_sd * rng_noise.sample::<f64, _>(StandardNormal);
                    }
                    for (right, mid) in [(OptionRight::Call, call_mid), (OptionRight::Put, put_mid)]
                    {
                        let bid = round_to_tick((mid - cfg.half_spread).max(0.0), cfg.tick);
                        let ask = round_to_tick(mid + cfg.half_spread, cfg.tick).max(bid);
                        quotes.push(OptionQuote {
                            market,
                            quote_date: date,
                            expiry,
                            strike,
                            right,
                            bid,
                            ask,
                            quote_time: cfg.snapshot_minute,
                        });
                    }
                }
            }
        }
    }

    Ok(SyntheticMarket {
        quotes,
        daily,
        ois: ois_rows,
        truth,
    })
}

impl SyntheticMarket {
    /// Writes `quotes.csv`, `daily.csv`, `ois.csv`, and one
    /// `truth_<MARKET>.csv` ledger per market
    /// (`quote_date,expiry,b_true,f_true,cg_true_bp`).
    pub fn write_files(&self, dir: &Path) -> Result<SyntheticFiles, MarketDataError> {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        let quotes = dir.join("quotes.csv");
        write_quotes(&quotes, &self.quotes)?;
        let daily = dir.join("daily.csv");
        write_daily(&daily, &self.daily)?;
        let ois = dir.join("ois.csv");
        write_ois(&ois, &self.ois)?;
        let mut truth_paths = BTreeMap::new();
        for (market, rows) in &self.truth {
            let path = dir.join(format!("truth_{market}.csv"));
            let mut writer = csv_writer(&path)?;
            writer
                .write_record(["quote_date", "expiry", "b_true", "f_true", "cg_true_bp"])
                .map_err(|e| csv_error(&path, 0, e))?;
            for row in rows {
                writer
                    .write_record(&[
                        row.quote_date.to_string(),
                        row.expiry.to_string(),
                        row.b_true.to_string(),
                        row.f_true.to_string(),
                        row.cg_true_bp.to_string(),
                    ])
                    .map_err(|e| csv_error(&path, 0, e))?;
            }
            writer.flush().map_err(|e| io_error(&path, e))?;
            truth_paths.insert(*market, path);
        }
        Ok(SyntheticFiles {
            quotes,
            daily,
            ois,
            truth: truth_paths,
        })
    }
}
