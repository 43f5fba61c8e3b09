//! Baseline and drift-extended carry-gap regressions with date-based
//! Newey–West inference.
//!
//! The baseline design regresses `cg_bp` on the two OIS-scaled diffusion
//! path-risk terms, the annualized bid–ask friction, and the
//! financial-conditions index; the extended design adds exactly one
//! regressor, the OIS-1Y-scaled drift term. Inference is date-clustered
//! HAC: per-row score vectors `x * e` are summed within each date, the
//! date-level score series is ordered by observed trading date, and
//! Bartlett-weighted autocovariances up to the maximum lag are accumulated
//! into the sandwich `(X'X)^-1 Ω (X'X)^-1`. With one observation per date
//! and lag zero this collapses to textbook heteroskedasticity-robust OLS;
//! with multiple observations per date and lag zero it is the
//! cluster-by-date sandwich (no small-sample correction). Lags count
//! observed trading dates, not calendar gaps.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, LinalgError};
use crate::market_data::{csv_error, csv_reader, csv_writer, io_error, MarketDataError};
use crate::types::Market;

#[derive(Debug, Error, PartialEq)]
pub enum RegressionError {
    #[error("no rows in regression sample")]
    EmptySample,
    #[error("sample has {n} rows, need more than {k} regressors")]
    NotEnoughRows { n: usize, k: usize },
    #[error("design matrix is rank deficient at column `{column}`")]
    RankDeficient { column: String },
    #[error("HAC inference needs at least two distinct dates, got {0}")]
    TooFewDates(usize),
    #[error("linear algebra failure: {0}")]
    Linalg(String),
}

/// One fully joined regression row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressorRow {
    pub market: Market,
    pub quote_date: NaiveDate,
    pub tau_years: f64,
    pub cg_bp: f64,
    pub gbm_sigma_1y: f64,
    pub gbm_sigma_10y: f64,
    /// Absent during the drift-proxy warm-up window.
    pub gbm_mu_1y: Option<f64>,
    pub ba_over_tau: f64,
    pub nfci: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecKind {
    Baseline,
    Extended,
}

impl fmt::Display for SpecKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpecKind::Baseline => "baseline",
            SpecKind::Extended => "extended",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarketScope {
    /// Rows are used as given; no market dummy.
    Separate,
    /// Common slopes across markets plus an SPX intercept dummy.
    PooledCommonWithSpxDummy,
}

impl fmt::Display for MarketScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MarketScope::Separate => "separate",
            MarketScope::PooledCommonWithSpxDummy => "pooled_common_spx_dummy",
        })
    }
}

/// How per-row scores are aggregated within a date before the Newey–West
/// recursion. Summation is the default; the mean variant is a robustness
/// alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreAggregation {
    Sum,
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HacOptions {
    /// Maximum lag in trading days. The default of 21 is a deliberately
    /// conservative month-long window: at a couple of thousand trading
    /// dates, common automatic Newey–West bandwidth rules would pick lags
    /// below 10. There is no automatic selection here; the lag is taken as
    /// given.
    pub max_lag: usize,
    pub score_aggregation: ScoreAggregation,
}

impl Default for HacOptions {
    fn default() -> Self {
        HacOptions {
            max_lag: 21,
            score_aggregation: ScoreAggregation::Sum,
        }
    }
}

/// An assembled design: row-major `n x k` matrix, response, and row dates.
#[derive(Debug, Clone)]
pub struct Design {
    pub names: Vec<String>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub dates: Vec<NaiveDate>,
    pub n: usize,
    pub k: usize,
}

/// Assembles the design row for one observation under a spec/scope, or
/// `None` when the row lacks a required input (extended spec during the
/// drift warm-up).
pub fn design_row(row: &RegressorRow, spec: SpecKind, scope: MarketScope) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(7);
    out.push(1.0);
    if scope == MarketScope::PooledCommonWithSpxDummy {
        out.push(if row.market == Market::Spx { 1.0 } else { 0.0 });
    }
    out.push(row.gbm_sigma_1y);
    out.push(row.gbm_sigma_10y);
    if spec == SpecKind::Extended {
        out.push(row.gbm_mu_1y?);
    }
    out.push(row.ba_over_tau);
    out.push(row.nfci);
    Some(out)
}

/// Column names in design order for a spec/scope.
pub fn design_names(spec: SpecKind, scope: MarketScope) -> Vec<String> {
    let mut names = vec!["intercept".to_string()];
    if scope == MarketScope::PooledCommonWithSpxDummy {
        names.push("spx_dummy".to_string());
    }
    names.push("gbm_sigma_1y".to_string());
    names.push("gbm_sigma_10y".to_string());
    if spec == SpecKind::Extended {
        names.push("gbm_mu_1y".to_string());
    }
    names.push("ba_over_tau".to_string());
    names.push("nfci".to_string());
    names
}

/// Builds the design from rows. Rows missing a required input are skipped
/// (for the extended spec this is exactly the warm-up sample).
pub fn build_design(rows: &[RegressorRow], spec: SpecKind, scope: MarketScope) -> Design {
    let names = design_names(spec, scope);
    let k = names.len();
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut dates = Vec::new();
    for row in rows {
        if let Some(xr) = design_row(row, spec, scope) {
            x.extend_from_slice(&xr);
            y.push(row.cg_bp);
            dates.push(row.quote_date);
        }
    }
    let n = y.len();
    Design {
        names,
        x,
        y,
        dates,
        n,
        k,
    }
}

/// Plain least-squares output with in-sample fit metrics.
#[derive(Debug, Clone)]
pub struct OlsOutput {
    pub beta: Vec<f64>,
    /// `(X'X)^-1`, row-major `k x k`.
    pub xtx_inv: Vec<f64>,
    pub residuals: Vec<f64>,
    pub r2: f64,
    pub adj_r2: f64,
    pub rmse: f64,
    pub mae: f64,
}

/// Least-squares fit of an assembled design. `r2` is about the sample mean
/// (zero when the response is degenerate), `rmse = sqrt(SSE/n)`.
pub fn ols_fit(design: &Design) -> Result<OlsOutput, RegressionError> {
    let (n, k) = (design.n, design.k);
    if n == 0 {
        return Err(RegressionError::EmptySample);
    }
    if n <= k {
        return Err(RegressionError::NotEnoughRows { n, k });
    }
    let sol = linalg::lstsq(&design.x, &design.y, n, k).map_err(|e| match e {
        LinalgError::RankDeficient { column } => RegressionError::RankDeficient {
            column: design.names[column].clone(),
        },
        other => RegressionError::Linalg(other.to_string()),
    })?;

    let mut residuals = Vec::with_capacity(n);
    let mut sse = 0.0;
    let mut abs_sum = 0.0;
    for i in 0..n {
        let mut fitted = 0.0;
        for j in 0..k {
            fitted += design.x[i * k + j] * sol.beta[j];
        }
        let e = design.y[i] - fitted;
        residuals.push(e);
        sse += e * e;
        abs_sum += e.abs();
    }
    let y_mean = design.y.iter().sum::<f64>() / n as f64;
    let sst: f64 = design.y.iter().map(|v| (v - y_mean) * (v - y_mean)).sum();
    let r2 = if sst > 0.0 { 1.0 - sse / sst } else { 0.0 };
    let adj_r2 = 1.0 - (1.0 - r2) * (n as f64 - 1.0) / (n - k) as f64;

    Ok(OlsOutput {
        beta: sol.beta,
        xtx_inv: sol.xtx_inv,
        residuals,
        r2,
        adj_r2,
        rmse: (sse / n as f64).sqrt(),
        mae: abs_sum / n as f64,
    })
}

/// Date-clustered Newey–West covariance.
#[derive(Debug, Clone)]
pub struct HacCovariance {
    /// Bartlett-weighted score covariance Ω, row-major `k x k`.
    pub omega: Vec<f64>,
    /// Sandwich `(X'X)^-1 Ω (X'X)^-1`, row-major `k x k`.
    pub covariance: Vec<f64>,
    pub hac_se: Vec<f64>,
    pub n_dates: usize,
}

/// Computes the date-clustered Newey–West sandwich for a fitted design.
///
/// `max_lag = 0` reduces to date-clustered heteroskedasticity-robust
/// standard errors.
pub fn hac_covariance(
    design: &Design,
    fit: &OlsOutput,
    opts: &HacOptions,
) -> Result<HacCovariance, RegressionError> {
    let k = design.k;

    // Score vectors summed (or averaged) within each date, ordered by date.
    let mut by_date: BTreeMap<NaiveDate, (Vec<f64>, usize)> = BTreeMap::new();
    for i in 0..design.n {
        let entry = by_date
            .entry(design.dates[i])
            .or_insert_with(|| (vec![0.0; k], 0));
        for j in 0..k {
            entry.0[j] += design.x[i * k + j] * fit.residuals[i];
        }
        entry.1 += 1;
    }
    let n_dates = by_date.len();
    if n_dates < 2 {
        return Err(RegressionError::TooFewDates(n_dates));
    }
    let scores: Vec<Vec<f64>> = by_date
        .into_values()
        .map(|(mut g, count)| {
            if opts.score_aggregation == ScoreAggregation::Mean {
                for v in &mut g {
                    *v /= count as f64;
                }
            }
            g
        })
        .collect();

    // Ω = Σ_t g_t g_t' + Σ_l w_l Σ_t (g_t g_{t-l}' + g_{t-l} g_t'),
    // with Bartlett weights w_l = 1 - l/(L+1).
    let max_lag = opts.max_lag.min(n_dates - 1);
    let mut omega = vec![0.0; k * k];
    for g in &scores {
        for a in 0..k {
            for b in 0..k {
                omega[a * k + b] += g[a] * g[b];
            }
        }
    }
    for lag in 1..=max_lag {
        let weight = 1.0 - lag as f64 / (max_lag as f64 + 1.0);
        for t in lag..n_dates {
            let g_t = &scores[t];
            let g_prev = &scores[t - lag];
            for a in 0..k {
                for b in 0..k {
                    omega[a * k + b] += weight * (g_t[a] * g_prev[b] + g_prev[a] * g_t[b]);
                }
            }
        }
    }

    // Sandwich and standard errors.
    let bread = &fit.xtx_inv;
    let mut tmp = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            let mut s = 0.0;
            for m in 0..k {
                s += bread[a * k + m] * omega[m * k + b];
            }
            tmp[a * k + b] = s;
        }
    }
    let mut covariance = vec![0.0; k * k];
    for a in 0..k {
        for b in 0..k {
            let mut s = 0.0;
            for m in 0..k {
                s += tmp[a * k + m] * bread[m * k + b];
            }
            covariance[a * k + b] = s;
        }
    }
    let hac_se: Vec<f64> = (0..k)
        .map(|j| covariance[j * k + j].max(0.0).sqrt())
        .collect();

    Ok(HacCovariance {
        omega,
        covariance,
        hac_se,
        n_dates,
    })
}

/// A fitted specification with HAC inference and fit metrics.
#[derive(Debug, Clone, Serialize)]
pub struct RegressionFit {
    pub spec: SpecKind,
    pub scope: MarketScope,
    pub coef_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub hac_se: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub r2: f64,
    pub adj_r2: f64,
    pub rmse_bp: f64,
    pub mae_bp: f64,
    pub n_obs: usize,
    pub n_dates: usize,
    pub hac_max_lag: usize,
}

impl RegressionFit {
    /// Predicted `cg_bp` for a row, or `None` when the row lacks a required
    /// input for this fit's spec.
    pub fn predict(&self, row: &RegressorRow) -> Option<f64> {
        let xr = design_row(row, self.spec, self.scope)?;
        Some(xr.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum())
    }

    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.coef_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.coefficients[i])
    }

    pub fn se(&self, name: &str) -> Option<f64> {
        self.coef_names
            .iter()
            .position(|n| n == name)
            .map(|i| self.hac_se[i])
    }
}

/// Two-sided normal critical values at the 1/5/10% levels.
pub const Z_CRIT_1PCT: f64 = 2.575829303548901;
pub const Z_CRIT_5PCT: f64 = 1.959963984540054;
pub const Z_CRIT_10PCT: f64 = 1.644853626951472;

/// Significance stars from a t statistic under normal critical values.
pub fn stars(t: f64) -> &'static str {
    let a = t.abs();
    if a >= Z_CRIT_1PCT {
        "***"
    } else if a >= Z_CRIT_5PCT {
        "**"
    } else if a >= Z_CRIT_10PCT {
        "*"
    } else {
        ""
    }
}

/// Assembles the design for a spec/scope, fits it, and attaches HAC
/// inference.
pub fn run_spec(
    rows: &[RegressorRow],
    spec: SpecKind,
    scope: MarketScope,
    opts: &HacOptions,
) -> Result<RegressionFit, RegressionError> {
    let design = build_design(rows, spec, scope);
    let fit = ols_fit(&design)?;
    let hac = hac_covariance(&design, &fit, opts)?;
    let t_stats: Vec<f64> = fit
        .beta
        .iter()
        .zip(&hac.hac_se)
        .map(|(b, se)| if *se > 0.0 { b / se } else { 0.0 })
        .collect();
    Ok(RegressionFit {
        spec,
        scope,
        coef_names: design.names.clone(),
        coefficients: fit.beta,
        hac_se: hac.hac_se,
        t_stats,
        r2: fit.r2,
        adj_r2: fit.adj_r2,
        rmse_bp: fit.rmse,
        mae_bp: fit.mae,
        n_obs: design.n,
        n_dates: hac.n_dates,
        hac_max_lag: opts.max_lag,
    })
}

/// Writes regressor rows as
/// `market,quote_date,tau_years,cg_bp,gbm_sigma_1y,gbm_sigma_10y,gbm_mu_1y,ba_over_tau,nfci`
/// with an empty drift field during the warm-up window.
pub fn write_regressors(path: &Path, rows: &[RegressorRow]) -> Result<(), MarketDataError> {
    let mut writer = csv_writer(path)?;
    for row in rows {
        writer.serialize(row).map_err(|e| csv_error(path, 0, e))?;
    }
    writer.flush().map_err(|e| io_error(path, e))?;
    Ok(())
}

pub fn load_regressors(path: &Path) -> Result<Vec<RegressorRow>, MarketDataError> {
    let mut reader = csv_reader(path)?;
    let mut rows = Vec::new();
    for (idx, result) in reader.deserialize::<RegressorRow>().enumerate() {
        rows.push(result.map_err(|e| csv_error(path, idx as u64 + 1, e))?);
    }
    Ok(rows)
}

/// Coefficient line of the fit-report JSON.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientReport {
    pub name: String,
    pub estimate: f64,
    pub hac_se: f64,
    pub t: f64,
    pub stars: String,
}

/// The fit-report JSON payload.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub spec: SpecKind,
    pub scope: MarketScope,
    pub coefficients: Vec<CoefficientReport>,
    pub r2: f64,
    pub adj_r2: f64,
    pub rmse_bp: f64,
    pub mae_bp: f64,
    pub n_obs: usize,
    pub n_dates: usize,
    pub hac_max_lag: usize,
}

impl RegressionFit {
    pub fn report(&self) -> FitReport {
        FitReport {
            spec: self.spec,
            scope: self.scope,
            coefficients: self
                .coef_names
                .iter()
                .zip(&self.coefficients)
                .zip(&self.hac_se)
                .zip(&self.t_stats)
                .map(|(((name, b), se), t)| CoefficientReport {
                    name: name.clone(),
                    estimate: *b,
                    hac_se: *se,
                    t: *t,
                    stars: stars(*t).to_string(),
                })
                .collect(),
            r2: self.r2,
            adj_r2: self.adj_r2,
            rmse_bp: self.rmse_bp,
            mae_bp: self.mae_bp,
            n_obs: self.n_obs,
            n_dates: self.n_dates,
            hac_max_lag: self.hac_max_lag,
        }
    }
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn date_seq(n: usize) -> Vec<NaiveDate> {
        (0..n)
            .map(|i| d("2020-01-01") + chrono::Days::new(i as u64))
            .collect()
    }

    fn row(market: Market, date: NaiveDate, values: [f64; 6]) -> RegressorRow {
        RegressorRow {
            market,
            quote_date: date,
            tau_years: 0.5,
            cg_bp: values[0],
            gbm_sigma_1y: values[1],
            gbm_sigma_10y: values[2],
            gbm_mu_1y: Some(values[3]),
            ba_over_tau: values[4],
            nfci: values[5],
        }
    }

    /// Rows whose response is an exact linear function of the regressors.
    fn exact_rows(n: usize, coef: &[f64; 6], seed: u64) -> Vec<RegressorRow> {
        let mut rng = StdRng::seed_from_u64(seed);
        let dates = date_seq(n);
        (0..n)
            .map(|i| {
                let s1: f64 = rng.gen_range(5.0..60.0);
                let s10: f64 = rng.gen_range(5.0..60.0);
                let mu: f64 = rng.gen_range(-30.0..30.0);
                let ba: f64 = rng.gen_range(0.5..8.0);
                let nf: f64 = rng.gen_range(-0.8..0.4);
                let y = coef[0]
                    + coef[1] * s1
                    + coef[2] * s10
                    + coef[3] * mu
                    + coef[4] * ba
                    + coef[5] * nf;
                row(Market::Spx, dates[i], [y, s1, s10, mu, ba, nf])
            })
            .collect()
    }

    #[test]
    fn exact_linear_fit_has_unit_r2() {
        let coef = [25.0, -0.5, 0.4, 0.119, 0.2, -20.0];
        let rows = exact_rows(60, &coef, 7);
        let design = build_design(&rows, SpecKind::Extended, MarketScope::Separate);
        let fit = ols_fit(&design).unwrap();
        assert_relative_eq!(fit.r2, 1.0, epsilon = 1e-12);
        for e in &fit.residuals {
            assert!(e.abs() < 1e-8);
        }
        for (b, expect) in fit.beta.iter().zip(&coef) {
            assert_relative_eq!(b, expect, max_relative = 1e-8);
        }
    }

    #[test]
    fn constant_response_gives_zero_slopes_and_zero_r2() {
        let mut rows = exact_rows(40, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 8);
        for r in &mut rows {
            r.cg_bp = 12.5;
        }
        let design = build_design(&rows, SpecKind::Baseline, MarketScope::Separate);
        let fit = ols_fit(&design).unwrap();
        assert_relative_eq!(fit.beta[0], 12.5, epsilon = 1e-9);
        for b in &fit.beta[1..] {
            assert!(b.abs() < 1e-9);
        }
        assert_eq!(fit.r2, 0.0);
    }

    #[test]
    fn random_instances_match_normal_equations_oracle() {
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..5 {
            let n = rng.gen_range(50..200);
            let k = rng.gen_range(2..6);
            let mut x = vec![0.0; n * k];
            let mut y = vec![0.0; n];
            for i in 0..n {
                x[i * k] = 1.0;
                for j in 1..k {
                    x[i * k + j] = rng.sample::<f64, _>(StandardNormal) * 3.0;
                }
                y[i] = rng.sample::<f64, _>(StandardNormal);
            }
            let design = Design {
                names: (0..k).map(|j| format!("x{j}")).collect(),
                x: x.clone(),
                y: y.clone(),
                dates: date_seq(n),
                n,
                k,
            };
            let fit = ols_fit(&design).unwrap();
            let oracle = normal_equations_beta(&x, &y, n, k);
            for (a, b) in fit.beta.iter().zip(&oracle) {
                assert_relative_eq!(a, b, max_relative = 1e-8, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn hac_lag0_multiple_obs_per_date_equals_clustered_oracle() {
        let mut rng = StdRng::seed_from_u64(9);
        let n = 240;
        let k = 4;
        let dates: Vec<NaiveDate> = (0..n)
            .map(|i| d("2021-01-01") + chrono::Days::new((i / 3) as u64))
            .collect();
        let mut x = vec![0.0; n * k];
        let mut y = vec![0.0; n];
        for i in 0..n {
            x[i * k] = 1.0;
            for j in 1..k {
                x[i * k + j] = rng.sample::<f64, _>(StandardNormal);
            }
            y[i] = 1.0 + rng.sample::<f64, _>(StandardNormal);
        }
        let design = Design {
            names: (0..k).map(|j| format!("x{j}")).collect(),
            x: x.clone(),
            y,
            dates: dates.clone(),
            n,
            k,
        };
        let fit = ols_fit(&design).unwrap();
        let hac = hac_covariance(
            &design,
            &fit,
            &HacOptions {
                max_lag: 0,
                score_aggregation: ScoreAggregation::Sum,
            },
        )
        .unwrap();
        let oracle = clustered_se(&x, &fit.residuals, &dates, n, k);
        for (a, b) in hac.hac_se.iter().zip(&oracle) {
            assert_relative_eq!(a, b, max_relative = 1e-8);
        }
    }

    #[test]
    fn hac_lag0_one_obs_per_date_close_to_classical() {
        let mut rng = StdRng::seed_from_u64(11);
        let n = 2000;
        let k = 3;
        let mut x = vec![0.0; n * k];
        let mut y = vec![0.0; n];
        for i in 0..n {
            x[i * k] = 1.0;
            x[i * k + 1] = rng.sample::<f64, _>(StandardNormal);
            x[i * k + 2] = rng.sample::<f64, _>(StandardNormal);
            y[i] = 2.0 + 0.5 * x[i * k + 1] - 0.3 * x[i * k + 2]
                + rng.sample::<f64, _>(StandardNormal);
        }
        let design = Design {
            names: vec!["intercept".into(), "a".into(), "b".into()],
            x,
            y,
            dates: date_seq(n),
            n,
            k,
        };
        let fit = ols_fit(&design).unwrap();
        let hac = hac_covariance(
            &design,
            &fit,
            &HacOptions {
                max_lag: 0,
                score_aggregation: ScoreAggregation::Sum,
            },
        )
        .unwrap();
        let sse: f64 = fit.residuals.iter().map(|e| e * e).sum();
        let sigma2 = sse / (n - k) as f64;
        for j in 0..k {
            let classical = (sigma2 * fit.xtx_inv[j * k + j]).sqrt();
            let ratio = hac.hac_se[j] / classical;
            assert!(
                (ratio - 1.0).abs() < 0.10,
                "column {j}: hac {} vs classical {classical}",
                hac.hac_se[j]
            );
        }
    }

    #[test]
    fn zero_residuals_give_zero_ses() {
        let rows = exact_rows(50, &[25.0, -0.5, 0.4, 0.119, 0.2, -20.0], 3);
        let fit = run_spec(
            &rows,
            SpecKind::Extended,
            MarketScope::Separate,
            &HacOptions::default(),
        )
        .unwrap();
        for se in &fit.hac_se {
            assert!(se.abs() < 1e-6, "se {se} not ~0");
        }
    }

    #[test]
    fn column_rescaling_rescales_coefficient_and_se() {
        let mut rng = StdRng::seed_from_u64(21);
        let mut rows = exact_rows(120, &[25.0, -0.5, 0.4, 0.119, 0.2, -20.0], 13);
        for r in &mut rows {
            r.cg_bp += rng.sample::<f64, _>(StandardNormal) * 3.0;
        }
        let fit0 = run_spec(
            &rows,
            SpecKind::Extended,
            MarketScope::Separate,
            &HacOptions::default(),
        )
        .unwrap();

        let scale = 4.0;
        let mut scaled = rows.clone();
        for r in &mut scaled {
            r.gbm_sigma_1y *= scale;
        }
        let fit1 = run_spec(
            &scaled,
            SpecKind::Extended,
            MarketScope::Separate,
            &HacOptions::default(),
        )
        .unwrap();
        let j = fit0
            .coef_names
            .iter()
            .position(|n| n == "gbm_sigma_1y")
            .unwrap();
        assert_relative_eq!(
            fit1.coefficients[j],
            fit0.coefficients[j] / scale,
            max_relative = 1e-8
        );
        assert_relative_eq!(fit1.hac_se[j], fit0.hac_se[j] / scale, max_relative = 1e-8);
        assert_relative_eq!(fit1.t_stats[j], fit0.t_stats[j], max_relative = 1e-8);
        assert_relative_eq!(fit1.r2, fit0.r2, max_relative = 1e-10);
        assert_relative_eq!(fit1.rmse_bp, fit0.rmse_bp, max_relative = 1e-10);
    }

    #[test]
    fn hac_invariant_to_within_date_row_order() {
        let mut rng = StdRng::seed_from_u64(31);
        let mut rows = Vec::new();
        for i in 0..60 {
            let date = d("2022-01-03") + chrono::Days::new((i / 4) as u64);
            for _ in 0..4 {
                let s1: f64 = rng.gen_range(5.0..60.0);
                let s10: f64 = rng.gen_range(5.0..60.0);
                let mu: f64 = rng.gen_range(-30.0..30.0);
                let ba: f64 = rng.gen_range(0.5..8.0);
                let nf: f64 = rng.gen_range(-0.8..0.4);
                let y = 25.0 - 0.5 * s1 + 0.4 * s10 + rng.sample::<f64, _>(StandardNormal) * 4.0;
                rows.push(row(Market::Spx, date, [y, s1, s10, mu, ba, nf]));
            }
        }
        let fit0 = run_spec(
            &rows,
            SpecKind::Baseline,
            MarketScope::Separate,
            &HacOptions::default(),
        )
        .unwrap();
        // Reverse rows within each date (dates stay grouped but reordered too;
        // assembly orders scores by date key, so only within-date order matters).
        rows.reverse();
        let fit1 = run_spec(
            &rows,
            SpecKind::Baseline,
            MarketScope::Separate,
            &HacOptions::default(),
        )
        .unwrap();
        for (a, b) in fit0.hac_se.iter().zip(&fit1.hac_se) {
            assert_relative_eq!(a, b, max_relative = 1e-10);
        }
    }

    #[test]
    fn bartlett_omega_is_positive_semidefinite() {
        let mut rng = StdRng::seed_from_u64(77);
        let mut rows = Vec::new();
        let dates = date_seq(150);
        // Strongly autocorrelated residual process.
        let mut carry = 0.0;
        for date in dates {
            carry = 0.9 * carry + rng.sample::<f64, _>(StandardNormal);
            let s1: f64 = rng.gen_range(5.0..60.0);
            let s10: f64 = rng.gen_range(5.0..60.0);
            let ba: f64 = rng.gen_range(0.5..8.0);
            let nf: f64 = rng.gen_range(-0.8..0.4);
            let y = 10.0 - 0.3 * s1 + 5.0 * carry;
            rows.push(row(Market::Spx, date, [y, s1, s10, 0.0, ba, nf]));
        }
        let design = build_design(&rows, SpecKind::Baseline, MarketScope::Separate);
        let fit = ols_fit(&design).unwrap();
        let hac = hac_covariance(&design, &fit, &HacOptions::default()).unwrap();
        let eig = crate::linalg::symmetric_eigenvalues(&hac.omega, design.k);
        let trace: f64 = (0..design.k).map(|i| hac.omega[i * design.k + i]).sum();
        assert!(
            eig[0] >= -1e-10 * trace,
            "min eigenvalue {} below PSD tolerance (trace {trace})",
            eig[0]
        );
    }

    #[test]
    fn zero_drift_column_is_rank_error_and_baseline_unaffected() {
        let mut rng = StdRng::seed_from_u64(5);
        let mut rows = exact_rows(80, &[25.0, -0.5, 0.4, 0.0, 0.2, -20.0], 19);
        for r in &mut rows {
            r.gbm_mu_1y = Some(0.0);
            r.cg_bp += rng.sample::<f64, _>(StandardNormal);
        }
        let baseline = run_spec(
            &rows,
            SpecKind::Baseline,
            MarketScope::Separate,
            &HacOptions::default(),
        )
        .unwrap();
        let extended = run_spec(
            &rows,
            SpecKind::Extended,
            MarketScope::Separate,
            &HacOptions::default(),
        );
        match extended {
            Err(RegressionError::RankDeficient { column }) => assert_eq!(column, "gbm_mu_1y"),
            other => panic!("expected rank error, got {other:?}"),
        }
        assert_eq!(baseline.coef_names.len(), 5);
    }

    #[test]
    fn pooled_on_identical_markets_has_zero_dummy() {
        let mut rng = StdRng::seed_from_u64(55);
        let mut rows = Vec::new();
        for i in 0..80 {
            let date = d("2022-01-03") + chrono::Days::new(i as u64);
            let s1: f64 = rng.gen_range(5.0..60.0);
            let s10: f64 = rng.gen_range(5.0..60.0);
            let ba: f64 = rng.gen_range(0.5..8.0);
            let nf: f64 = rng.gen_range(-0.8..0.4);
            let y = 25.0 - 0.5 * s1 + 0.4 * s10 + 0.2 * ba - 20.0 * nf;
            // Identical rows under both market labels.
            rows.push(row(Market::Spx, date, [y, s1, s10, 0.0, ba, nf]));
            rows.push(row(Market::Rut, date, [y, s1, s10, 0.0, ba, nf]));
        }
        let fit = run_spec(
            &rows,
            SpecKind::Baseline,
            MarketScope::PooledCommonWithSpxDummy,
            &HacOptions::default(),
        )
        .unwrap();
        let dummy = fit.coefficient("spx_dummy").unwrap();
        assert!(dummy.abs() < 1e-8, "spx_dummy {dummy} not ~0");
    }

    #[test]
    fn extended_spec_skips_warmup_rows() {
        let mut rows = exact_rows(50, &[25.0, -0.5, 0.4, 0.119, 0.2, -20.0], 23);
        for r in rows.iter_mut().take(10) {
            r.gbm_mu_1y = None;
        }
        let baseline = build_design(&rows, SpecKind::Baseline, MarketScope::Separate);
        let extended = build_design(&rows, SpecKind::Extended, MarketScope::Separate);
        assert_eq!(baseline.n, 50);
        assert_eq!(extended.n, 40);
    }

    #[test]
    fn score_mean_equals_sum_with_singleton_dates() {
        // With one observation per date the two aggregation conventions
        // coincide exactly.
        let mut rng = StdRng::seed_from_u64(63);
        let mut rows = exact_rows(60, &[25.0, -0.5, 0.4, 0.1, 0.2, -20.0], 63);
        for r in &mut rows {
            r.cg_bp += rng.sample::<f64, _>(StandardNormal) * 2.0;
        }
        let fit = |agg| {
            run_spec(
                &rows,
                SpecKind::Extended,
                MarketScope::Separate,
                &HacOptions {
                    max_lag: 5,
                    score_aggregation: agg,
                },
            )
            .unwrap()
        };
        let sum = fit(ScoreAggregation::Sum);
        let mean = fit(ScoreAggregation::Mean);
        for (a, b) in sum.hac_se.iter().zip(&mean.hac_se) {
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn stars_thresholds() {
        assert_eq!(stars(2.6), "***");
        assert_eq!(stars(-2.0), "**");
        assert_eq!(stars(1.7), "*");
        assert_eq!(stars(1.2), "");
    }

    #[test]
    fn generator_recovery_within_three_ses() {
        // Noisy data generated from the extended specification.
        let truth = [25.0, -0.5, 0.4, 0.119, 0.2, -20.0];
        let mut rng = StdRng::seed_from_u64(101);
        let mut rows = exact_rows(1500, &truth, 29);
        for r in &mut rows {
            r.cg_bp += rng.sample::<f64, _>(StandardNormal) * 5.0;
        }
        let fit = run_spec(
            &rows,
            SpecKind::Extended,
            MarketScope::Separate,
            &HacOptions::default(),
        )
        .unwrap();
        for (j, expect) in truth.iter().enumerate() {
            let err = (fit.coefficients[j] - expect).abs();
            assert!(
                err <= 3.0 * fit.hac_se[j],
                "{}: estimate {} truth {} se {}",
                fit.coef_names[j],
                fit.coefficients[j],
                expect,
                fit.hac_se[j]
            );
        }
    }
}
