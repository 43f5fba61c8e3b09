//! Shared helpers for the integration suites: run the full pipeline over a
//! generated market, in memory or through the documented files.

// Each test binary uses a different subset of these helpers.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;

use carrygap::carry_gap_panel::{build_panel, CarryGapObservation, PanelExclusion};
use carrygap::econometrics::RegressorRow;
use carrygap::implied_discount::{estimate_all, CellEstimate, CellExclusion, EstimatorConfig};
use carrygap::market_data::{load_daily, load_quotes, pair_and_filter, FilterAudit, FilterConfig};
use carrygap::ois_curve::{curves_by_date, load_ois};
use carrygap::path_risk::{build_regressors, log_tr_series, rolling_drift_proxy, JoinExclusion};
use carrygap::synthetic_lab::SyntheticMarket;
use carrygap::types::Market;

pub struct PipelineRun {
    pub filter_audit: FilterAudit,
    pub estimates: Vec<CellEstimate>,
    pub cell_exclusions: Vec<CellExclusion>,
    pub panel: Vec<CarryGapObservation>,
    pub panel_exclusions: Vec<PanelExclusion>,
    pub rows: Vec<RegressorRow>,
    pub join_exclusions: Vec<JoinExclusion>,
}

/// Runs pairing, cell estimation, the panel join, and the regressor join on
/// an in-memory synthetic market.
pub fn run_in_memory(market: &SyntheticMarket, lookback: usize) -> PipelineRun {
    let filter = FilterConfig::default();
    let (cells, filter_audit) = pair_and_filter(&market.quotes, &filter);
    let (estimates, cell_exclusions) = estimate_all(&cells, &EstimatorConfig::default());
    let (curves, curve_failures) = curves_by_date(&market.ois);
    assert!(curve_failures.is_empty(), "generated curves must bootstrap");
    let (panel, panel_exclusions) = build_panel(&estimates, &curves);

    let mut proxies = BTreeMap::new();
    for params in market.truth.keys() {
        let series = log_tr_series(&market.daily, *params);
        if series.len() > lookback {
            proxies.insert(
                *params,
                rolling_drift_proxy(*params, &series, lookback).expect("valid proxy input"),
            );
        }
    }
    let (rows, join_exclusions) = build_regressors(&panel, &market.daily, &proxies);

    PipelineRun {
        filter_audit,
        estimates,
        cell_exclusions,
        panel,
        panel_exclusions,
        rows,
        join_exclusions,
    }
}

/// Runs the same pipeline through the documented CSV files in `dir`
/// (quotes.csv, daily.csv, ois.csv), for the given markets.
pub fn run_from_files(dir: &Path, markets: &[Market], lookback: usize) -> PipelineRun {
    let mut quotes = Vec::new();
    for &market in markets {
        let load = load_quotes(&dir.join("quotes.csv"), market).expect("quotes load");
        assert!(
            load.rejects.is_empty(),
            "generated quotes should parse cleanly: {:?}",
            load.rejects.first()
        );
        quotes.extend(load.quotes);
    }
    let daily = load_daily(&dir.join("daily.csv")).expect("daily load");
    let ois = load_ois(&dir.join("ois.csv")).expect("ois load");

    let filter = FilterConfig::default();
    let (cells, filter_audit) = pair_and_filter(&quotes, &filter);
    let (estimates, cell_exclusions) = estimate_all(&cells, &EstimatorConfig::default());
    let (curves, curve_failures) = curves_by_date(&ois);
    assert!(curve_failures.is_empty());
    let (panel, panel_exclusions) = build_panel(&estimates, &curves);

    let mut proxies = BTreeMap::new();
    for &market in markets {
        let series = log_tr_series(&daily, market);
        if series.len() > lookback {
            proxies.insert(
                market,
                rolling_drift_proxy(market, &series, lookback).expect("valid proxy input"),
            );
        }
    }
    let (rows, join_exclusions) = build_regressors(&panel, &daily, &proxies);

    PipelineRun {
        filter_audit,
        estimates,
        cell_exclusions,
        panel,
        panel_exclusions,
        rows,
        join_exclusions,
    }
}

/// Truth ledger lookup keyed by `(quote_date, expiry)`.
pub fn truth_by_cell(
    market: &SyntheticMarket,
    key: Market,
) -> BTreeMap<(chrono::NaiveDate, chrono::NaiveDate), &carrygap::synthetic_lab::TruthRow> {
    market.truth[&key]
        .iter()
        .map(|row| ((row.quote_date, row.expiry), row))
        .collect()
}
