//! Leave-one-year-out validation, the drift-horizon scan, coefficient-sign
//! stability, maturity-bucket diagnostics, and the price-space hurdle.
//!
//! LOYO holds each calendar year out in turn, fits on the remaining years,
//! and evaluates on the holdout. Fold-level out-of-sample R² centers the SST
//! on the holdout year's own mean (so badly mis-calibrated years can go
//! negative); the pooled R² concatenates holdout residuals and centers on
//! the pooled holdout mean. Both conventions can be switched for robustness
//! checks.

use std::collections::{BTreeMap, BTreeSet};

use chrono::Datelike;
use serde::Serialize;
use thiserror::Error;

use crate::econometrics::{
    build_design, design_row, ols_fit, run_spec, HacOptions, MarketScope, RegressionError,
    RegressionFit, RegressorRow, SpecKind, Z_CRIT_10PCT, Z_CRIT_1PCT, Z_CRIT_5PCT,
};
use crate::implied_discount::median_in_place;
use crate::types::{Market, MaturityBucket};

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("need at least 3 distinct years, found {0}")]
    TooFewYears(usize),
    #[error("fold for holdout year {year}: {source}")]
    Fold {
        year: i32,
        #[source]
        source: RegressionError,
    },
    #[error("regression failure: {0}")]
    Regression(#[from] RegressionError),
    #[error("horizon scan at n={n}: {message}")]
    ScanPoint { n: usize, message: String },
    #[error("empty scan grid")]
    EmptyGrid,
    #[error("hurdle requires positive forward and tau, got F={forward}, tau={tau}")]
    BadHurdleInput { forward: f64, tau: f64 },
}

/// Centering of the fold-level SST.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SstConvention {
    /// About the holdout year's own mean.
    HoldoutMean,
    /// About the training sample's mean.
    TrainingMean,
}

/// Centering of the pooled out-of-sample R².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PooledCentering {
    /// `1 - sum SSE_y / SST`, SST about the pooled holdout mean.
    PooledMean,
    /// `1 - sum SSE_y / sum SST_y` with per-year centering.
    PerYearMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoyoOptions {
    pub hac: HacOptions,
    pub sst: SstConvention,
    pub pooled: PooledCentering,
}

impl Default for LoyoOptions {
    fn default() -> Self {
        LoyoOptions {
            hac: HacOptions::default(),
            sst: SstConvention::HoldoutMean,
            pooled: PooledCentering::PooledMean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoyoFold {
    pub holdout_year: i32,
    pub n_obs: usize,
    pub oos_r2: f64,
    pub rmse_bp: f64,
    pub mae_bp: f64,
    pub fitted_actual_corr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LoyoReport {
    pub spec: SpecKind,
    pub scope: MarketScope,
    pub sst_convention: SstConvention,
    pub pooled_centering: PooledCentering,
    pub folds: Vec<LoyoFold>,
    pub mean_r2: f64,
    pub median_r2: f64,
    pub pooled_r2: f64,
    pub years_positive: usize,
    pub mean_rmse_bp: f64,
    pub mean_corr: f64,
}

/// Rows usable by a spec/scope (the extended spec excludes the drift
/// warm-up window).
fn spec_sample(rows: &[RegressorRow], spec: SpecKind, scope: MarketScope) -> Vec<&RegressorRow> {
    rows.iter()
        .filter(|r| design_row(r, spec, scope).is_some())
        .collect()
}

/// Leave-one-year-out validation: each calendar year of the specification's
/// sample is held out in turn and predicted from a fit on the remaining
/// years.
pub fn loyo(
    rows: &[RegressorRow],
    spec: SpecKind,
    scope: MarketScope,
    opts: &LoyoOptions,
) -> Result<LoyoReport, ValidationError> {
    let sample = spec_sample(rows, spec, scope);
    let years: BTreeSet<i32> = sample.iter().map(|r| r.quote_date.year()).collect();
    if years.len() < 3 {
        return Err(ValidationError::TooFewYears(years.len()));
    }

    let pooled_mean = sample.iter().map(|r| r.cg_bp).sum::<f64>() / sample.len() as f64;

    let mut folds = Vec::with_capacity(years.len());
    let mut sse_total = 0.0;
    let mut sst_per_year_total = 0.0;
    let mut sst_pooled_total = 0.0;
    for &year in &years {
        let train: Vec<RegressorRow> = sample
            .iter()
            .filter(|r| r.quote_date.year() != year)
            .map(|r| (*r).clone())
            .collect();
        let test: Vec<&RegressorRow> = sample
            .iter()
            .filter(|r| r.quote_date.year() == year)
            .copied()
            .collect();

        let design = build_design(&train, spec, scope);
        let fit = ols_fit(&design).map_err(|source| ValidationError::Fold { year, source })?;
        let train_mean = design.y.iter().sum::<f64>() / design.n as f64;

        let mut actual = Vec::with_capacity(test.len());
        let mut predicted = Vec::with_capacity(test.len());
        for row in &test {
            let xr = design_row(row, spec, scope).expect("sample pre-filtered");
            let yhat: f64 = xr.iter().zip(&fit.beta).map(|(x, b)| x * b).sum();
            actual.push(row.cg_bp);
            predicted.push(yhat);
        }
        let n_y = actual.len() as f64;
        let sse: f64 = actual
            .iter()
            .zip(&predicted)
            .map(|(a, p)| (a - p) * (a - p))
            .sum();
        let holdout_mean = actual.iter().sum::<f64>() / n_y;
        let sst_holdout: f64 = actual
            .iter()
            .map(|a| (a - holdout_mean) * (a - holdout_mean))
            .sum();
        let sst_fold = match opts.sst {
            SstConvention::HoldoutMean => sst_holdout,
            SstConvention::TrainingMean => actual
                .iter()
                .map(|a| (a - train_mean) * (a - train_mean))
                .sum(),
        };
        let oos_r2 = if sst_fold > 0.0 {
            1.0 - sse / sst_fold
        } else {
            0.0
        };
        let mae = actual
            .iter()
            .zip(&predicted)
            .map(|(a, p)| (a - p).abs())
            .sum::<f64>()
            / n_y;

        folds.push(LoyoFold {
            holdout_year: year,
            n_obs: actual.len(),
            oos_r2,
            rmse_bp: (sse / n_y).sqrt(),
            mae_bp: mae,
            fitted_actual_corr: pearson(&predicted, &actual),
        });

        sse_total += sse;
        sst_per_year_total += sst_holdout;
        sst_pooled_total += actual
            .iter()
            .map(|a| (a - pooled_mean) * (a - pooled_mean))
            .sum::<f64>();
    }

    let sst_pooled = match opts.pooled {
        PooledCentering::PooledMean => sst_pooled_total,
        PooledCentering::PerYearMean => sst_per_year_total,
    };
    let pooled_r2 = if sst_pooled > 0.0 {
        1.0 - sse_total / sst_pooled
    } else {
        0.0
    };

    let mut fold_r2s: Vec<f64> = folds.iter().map(|f| f.oos_r2).collect();
    let n_folds = folds.len() as f64;
    Ok(LoyoReport {
        spec,
        scope,
        sst_convention: opts.sst,
        pooled_centering: opts.pooled,
        mean_r2: fold_r2s.iter().sum::<f64>() / n_folds,
        median_r2: median_in_place(&mut fold_r2s),
        pooled_r2,
        years_positive: folds.iter().filter(|f| f.oos_r2 > 0.0).count(),
        mean_rmse_bp: folds.iter().map(|f| f.rmse_bp).sum::<f64>() / n_folds,
        mean_corr: folds.iter().map(|f| f.fitted_actual_corr).sum::<f64>() / n_folds,
        folds,
    })
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    if a.len() < 2 {
        return f64::NAN;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va <= 0.0 || vb <= 0.0 {
        return f64::NAN;
    }
    cov / (va.sqrt() * vb.sqrt())
}

/// One grid point of the drift-horizon scan for one market.
///
/// The baseline is refit on the same (warm-up-trimmed) sample so the nested
/// in-sample comparison is exact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub n: usize,
    pub n_obs: usize,
    pub in_sample_r2_baseline: f64,
    pub in_sample_r2_extended: f64,
    pub loyo_pooled_r2_baseline: f64,
    pub loyo_pooled_r2_extended: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MarketScan {
    pub market: Market,
    pub points: Vec<ScanPoint>,
    /// Grid value maximizing the extended LOYO pooled R².
    pub argmax_loyo_n: usize,
    /// Grid value maximizing the extended in-sample R².
    pub argmax_in_sample_n: usize,
}

impl MarketScan {
    pub fn point_at(&self, n: usize) -> Option<&ScanPoint> {
        self.points.iter().find(|p| p.n == n)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HorizonScanReport {
    pub grid: Vec<usize>,
    pub markets: BTreeMap<Market, MarketScan>,
}

/// Default lookback grid: brackets two trading years without replicating any
/// particular optimum.
pub const DEFAULT_SCAN_GRID: [usize; 9] = [126, 189, 252, 315, 378, 441, 504, 567, 630];

/// Scans the drift-proxy lookback over a grid. `rows_builder(n)` must
/// rebuild the full regressor panel with the proxy computed at lookback `n`;
/// the scan then records, separately per market, in-sample fits and LOYO
/// pooled R² for both specifications.
pub fn horizon_scan<F>(
    rows_builder: F,
    grid: &[usize],
    opts: &LoyoOptions,
) -> Result<HorizonScanReport, ValidationError>
where
    F: Fn(usize) -> Result<Vec<RegressorRow>, String>,
{
    if grid.is_empty() {
        return Err(ValidationError::EmptyGrid);
    }
    let mut sorted_grid: Vec<usize> = grid.to_vec();
    sorted_grid.sort_unstable();
    sorted_grid.dedup();

    let mut per_market: BTreeMap<Market, Vec<ScanPoint>> = BTreeMap::new();
    for &n in &sorted_grid {
        let rows = rows_builder(n).map_err(|message| ValidationError::ScanPoint { n, message })?;
        let markets: BTreeSet<Market> = rows.iter().map(|r| r.market).collect();
        for market in markets {
            // Trim to the extended sample so baseline and extended are nested
            // on identical rows.
            let sample: Vec<RegressorRow> = rows
                .iter()
                .filter(|r| r.market == market && r.gbm_mu_1y.is_some())
                .cloned()
                .collect();
            let scan_err = |e: String| ValidationError::ScanPoint { n, message: e };
            let base_fit = ols_fit(&build_design(
                &sample,
                SpecKind::Baseline,
                MarketScope::Separate,
            ))
            .map_err(|e| scan_err(e.to_string()))?;
            let ext_fit = ols_fit(&build_design(
                &sample,
                SpecKind::Extended,
                MarketScope::Separate,
            ))
            .map_err(|e| scan_err(e.to_string()))?;
            let base_loyo = loyo(&sample, SpecKind::Baseline, MarketScope::Separate, opts)
                .map_err(|e| scan_err(e.to_string()))?;
            let ext_loyo = loyo(&sample, SpecKind::Extended, MarketScope::Separate, opts)
                .map_err(|e| scan_err(e.to_string()))?;
            per_market.entry(market).or_default().push(ScanPoint {
                n,
                n_obs: sample.len(),
                in_sample_r2_baseline: base_fit.r2,
                in_sample_r2_extended: ext_fit.r2,
                loyo_pooled_r2_baseline: base_loyo.pooled_r2,
                loyo_pooled_r2_extended: ext_loyo.pooled_r2,
            });
        }
    }

    let markets = per_market
        .into_iter()
        .map(|(market, points)| {
            let argmax_loyo_n = points
                .iter()
                .max_by(|a, b| {
                    a.loyo_pooled_r2_extended
                        .partial_cmp(&b.loyo_pooled_r2_extended)
                        .unwrap()
                })
                .map(|p| p.n)
                .unwrap();
            let argmax_in_sample_n = points
                .iter()
                .max_by(|a, b| {
                    a.in_sample_r2_extended
                        .partial_cmp(&b.in_sample_r2_extended)
                        .unwrap()
                })
                .map(|p| p.n)
                .unwrap();
            (
                market,
                MarketScan {
                    market,
                    points,
                    argmax_loyo_n,
                    argmax_in_sample_n,
                },
            )
        })
        .collect();

    Ok(HorizonScanReport {
        grid: sorted_grid,
        markets,
    })
}

/// Per-coefficient sign and HAC-significance counts across LOYO training
/// fits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignStabilityCoefficient {
    pub name: String,
    pub positive: usize,
    pub negative: usize,
    pub significant_1pct: usize,
    pub significant_5pct: usize,
    pub significant_10pct: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SignStabilityReport {
    pub spec: SpecKind,
    pub scope: MarketScope,
    pub n_folds: usize,
    pub coefficients: Vec<SignStabilityCoefficient>,
}

/// Refits the specification on every LOYO training sample and tabulates each
/// coefficient's sign and significance under HAC inference.
pub fn sign_stability(
    rows: &[RegressorRow],
    spec: SpecKind,
    scope: MarketScope,
    opts: &LoyoOptions,
) -> Result<SignStabilityReport, ValidationError> {
    let sample = spec_sample(rows, spec, scope);
    let years: BTreeSet<i32> = sample.iter().map(|r| r.quote_date.year()).collect();
    if years.len() < 3 {
        return Err(ValidationError::TooFewYears(years.len()));
    }

    let mut coefficients: Vec<SignStabilityCoefficient> = Vec::new();
    let mut n_folds = 0;
    for &year in &years {
        let train: Vec<RegressorRow> = sample
            .iter()
            .filter(|r| r.quote_date.year() != year)
            .map(|r| (*r).clone())
            .collect();
        let fit = run_spec(&train, spec, scope, &opts.hac)
            .map_err(|source| ValidationError::Fold { year, source })?;
        if coefficients.is_empty() {
            coefficients = fit
                .coef_names
                .iter()
                .map(|name| SignStabilityCoefficient {
                    name: name.clone(),
                    positive: 0,
                    negative: 0,
                    significant_1pct: 0,
                    significant_5pct: 0,
                    significant_10pct: 0,
                })
                .collect();
        }
        for (j, cell) in coefficients.iter_mut().enumerate() {
            if fit.coefficients[j] > 0.0 {
                cell.positive += 1;
            } else if fit.coefficients[j] < 0.0 {
                cell.negative += 1;
            }
            let t = fit.t_stats[j].abs();
            if t >= Z_CRIT_1PCT {
                cell.significant_1pct += 1;
            }
            if t >= Z_CRIT_5PCT {
                cell.significant_5pct += 1;
            }
            if t >= Z_CRIT_10PCT {
                cell.significant_10pct += 1;
            }
        }
        n_folds += 1;
    }

    Ok(SignStabilityReport {
        spec,
        scope,
        n_folds,
        coefficients,
    })
}

/// Within-bucket fit of full-sample baseline and extended predictions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BucketDiagnosticsRow {
    pub bucket: MaturityBucket,
    pub n_obs: usize,
    pub r2_baseline: f64,
    pub r2_extended: f64,
    pub delta_r2: f64,
    pub rmse_baseline_bp: f64,
    pub rmse_extended_bp: f64,
    pub delta_rmse_bp: f64,
}

/// Evaluates full-sample baseline and extended fits within each maturity
/// bucket, on the rows both fits can predict. Bucket SST is about the bucket
/// mean; empty buckets are omitted.
pub fn bucket_diagnostics(
    rows: &[RegressorRow],
    baseline: &RegressionFit,
    extended: &RegressionFit,
) -> Vec<BucketDiagnosticsRow> {
    let mut grouped: BTreeMap<MaturityBucket, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for row in rows {
        let Some(bucket) = MaturityBucket::for_tau(row.tau_years) else {
            continue;
        };
        let (Some(pb), Some(pe)) = (baseline.predict(row), extended.predict(row)) else {
            continue;
        };
        grouped.entry(bucket).or_default().push((row.cg_bp, pb, pe));
    }

    let mut out = Vec::new();
    for (bucket, triples) in grouped {
        let n = triples.len() as f64;
        let mean = triples.iter().map(|t| t.0).sum::<f64>() / n;
        let sst: f64 = triples.iter().map(|t| (t.0 - mean) * (t.0 - mean)).sum();
        let sse_base: f64 = triples.iter().map(|t| (t.0 - t.1) * (t.0 - t.1)).sum();
        let sse_ext: f64 = triples.iter().map(|t| (t.0 - t.2) * (t.0 - t.2)).sum();
        let r2 = |sse: f64| if sst > 0.0 { 1.0 - sse / sst } else { 0.0 };
        let rmse_base = (sse_base / n).sqrt();
        let rmse_ext = (sse_ext / n).sqrt();
        out.push(BucketDiagnosticsRow {
            bucket,
            n_obs: triples.len(),
            r2_baseline: r2(sse_base),
            r2_extended: r2(sse_ext),
            delta_r2: r2(sse_ext) - r2(sse_base),
            rmse_baseline_bp: rmse_base,
            rmse_extended_bp: rmse_ext,
            delta_rmse_bp: rmse_ext - rmse_base,
        });
    }
    out
}

/// Price-space implementation hurdle for a fitted carry gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HurdleResult {
    /// `F * (exp(tau * cg) - 1)` in index points.
    pub exact: f64,
    /// `F * tau * cg_bp / 1e4`.
    pub linear_approx: f64,
    /// `exact - linear_approx` (nonnegative for positive carry gaps).
    pub convexity_gap: f64,
}

/// Converts a fitted carry gap (bp/year) into an index-point hurdle at the
/// given forward level and maturity.
pub fn hurdle(
    f_forward: f64,
    tau_years: f64,
    cg_bp_fitted: f64,
) -> Result<HurdleResult, ValidationError> {
    if !(f_forward > 0.0 && tau_years > 0.0) {
        return Err(ValidationError::BadHurdleInput {
            forward: f_forward,
            tau: tau_years,
        });
    }
    let cg = cg_bp_fitted / 1e4;
    let exact = f_forward * ((tau_years * cg).exp() - 1.0);
    let linear_approx = f_forward * tau_years * cg;
    Ok(HurdleResult {
        exact,
        linear_approx,
        convexity_gap: exact - linear_approx,
    })
}

/// Carry-gap sensitivity, in bp, to a one-percentage-point move in the drift
/// proxy: `psi * ois_1y_pct * tau`.
pub fn drift_sensitivity(psi: f64, ois_1y_pct: f64, tau_years: f64) -> f64 {
    psi * ois_1y_pct * tau_years
}
