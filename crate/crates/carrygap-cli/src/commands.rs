//! Subcommand implementations. Stages communicate through the documented
//! files in the output directory, so each one can be rerun in isolation.

use std::collections::BTreeMap;
use std::path::Path;

use carrygap::carry_gap_panel::{
    build_panel, daily_median, load_panel, write_daily_series, write_panel, CarryGapObservation,
};
use carrygap::econometrics::{
    load_regressors, run_spec, stars, write_regressors, MarketScope, RegressorRow, SpecKind,
};
use carrygap::implied_discount::{estimate_all, load_cells, write_cells};
use carrygap::market_data::{
    load_daily, load_pairs, load_quotes, pair_and_filter, write_pairs, write_rejects,
    DailyMarketRow,
};
use carrygap::ois_curve::{curves_by_date, load_ois};
use carrygap::path_risk::{build_regressors, log_tr_series, rolling_drift_proxy};
use carrygap::synthetic_lab::{generate_market, mc_running_max, SupremumScheme, SyntheticMarket};
use carrygap::types::{EnforcementDirection, Market};
use carrygap::validation::{
    bucket_diagnostics, horizon_scan, hurdle, loyo, sign_stability, HorizonScanReport, LoyoReport,
};
use serde::Serialize;

use crate::config::{write_report, RunConfig};
use crate::svg;
use crate::CliError;

fn ensure_out_dir(cfg: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::Data(format!("creating {}: {e}", cfg.output_dir.display())))
}

fn require_file(path: &Path, produced_by: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Data(format!(
            "missing {}; run `carrygap {produced_by}` first (or point the config at an existing file)",
            path.display()
        )))
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

pub fn cmd_simulate(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let sim_cfg = cfg.synthetic_config();
    let market: SyntheticMarket = generate_market(&sim_cfg)?;
    let files = market.write_files(&cfg.output_dir)?;
    let n_cells: usize = market.truth.values().map(Vec::len).sum();
    println!(
        "simulate: {} quotes, {} daily rows, {} cells -> {}",
        market.quotes.len(),
        market.daily.len(),
        n_cells,
        cfg.output_dir.display()
    );
    #[derive(Serialize)]
    struct SimSummary {
        quotes: usize,
        daily_rows: usize,
        ois_rows: usize,
        cells: usize,
        files: Vec<String>,
    }
    let file_name = |p: &std::path::PathBuf| {
        p.file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default()
    };
    let mut listed: Vec<String> = vec![
        file_name(&files.quotes),
        file_name(&files.daily),
        file_name(&files.ois),
    ];
    listed.extend(files.truth.values().map(file_name));
    write_report(
        &cfg.output_dir.join("simulate.json"),
        &cfg.hash(),
        SimSummary {
            quotes: market.quotes.len(),
            daily_rows: market.daily.len(),
            ois_rows: market.ois.len(),
            cells: n_cells,
            files: listed,
        },
    )
}

// ---------------------------------------------------------------------------
// ingest
// ---------------------------------------------------------------------------

pub fn cmd_ingest(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let quotes_path = cfg.quotes_path();
    require_file(&quotes_path, "simulate")?;

    let filter = cfg.filter_config();
    let mut all_quotes = Vec::new();
    let mut all_rejects = Vec::new();
    for market in cfg.markets() {
        let load = load_quotes(&quotes_path, market)?;
        println!(
            "ingest: {market}: {} quotes, {} rejects",
            load.quotes.len(),
            load.rejects.len()
        );
        all_quotes.extend(load.quotes);
        all_rejects.extend(load.rejects);
    }
    all_rejects.sort_by_key(|r| r.row);
    all_rejects.dedup();
    let (cells, audit) = pair_and_filter(&all_quotes, &filter);

    write_pairs(&cfg.output_dir.join("pairs.csv"), &cells)?;
    write_rejects(&cfg.output_dir.join("rejects.csv"), &all_rejects)?;
    write_report(
        &cfg.output_dir.join("ingest_audit.json"),
        &cfg.hash(),
        audit,
    )?;
    println!(
        "ingest: {} cells, {} pairs kept ({} quotes in)",
        cells.len(),
        audit.kept_pairs,
        audit.input_quotes
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

pub fn cmd_estimate(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let pairs_path = cfg.output_dir.join("pairs.csv");
    require_file(&pairs_path, "ingest")?;
    let cells = load_pairs(&pairs_path)?;
    let (estimates, exclusions) = estimate_all(&cells, &cfg.estimator_config());
    write_cells(&cfg.output_dir.join("cells.csv"), &estimates)?;
    write_report(
        &cfg.output_dir.join("cell_exclusions.json"),
        &cfg.hash(),
        serde_json::json!({ "excluded": exclusions }),
    )?;
    println!(
        "estimate: {} cells estimated, {} excluded",
        estimates.len(),
        exclusions.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// panel
// ---------------------------------------------------------------------------

pub fn cmd_panel(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let cells_path = cfg.output_dir.join("cells.csv");
    require_file(&cells_path, "estimate")?;
    let ois_path = cfg.ois_path();
    require_file(&ois_path, "simulate")?;

    let estimates = load_cells(&cells_path)?;
    let ois = load_ois(&ois_path)?;
    let (curves, curve_failures) = curves_by_date(&ois);
    for (date, err) in &curve_failures {
        eprintln!("warning: OIS curve on {date}: {err}");
    }
    let non_monotone: usize = curves.values().map(|c| c.non_monotone_segments()).sum();
    if non_monotone > 0 {
        eprintln!("warning: {non_monotone} non-monotone discount segments (negative forwards)");
    }

    let (panel, exclusions) = build_panel(&estimates, &curves);
    write_panel(&cfg.output_dir.join("panel.csv"), &panel)?;
    let mut medians = BTreeMap::new();
    for market in cfg.markets() {
        let series = daily_median(&panel, market);
        if !series.is_empty() {
            medians.insert(market, series);
        }
    }
    write_daily_series(&cfg.output_dir.join("daily_median.csv"), &medians)?;
    write_report(
        &cfg.output_dir.join("panel_exclusions.json"),
        &cfg.hash(),
        serde_json::json!({
            "curve_failures": curve_failures.iter().map(|(d, e)| (d.to_string(), e.to_string())).collect::<Vec<_>>(),
            "excluded": exclusions,
        }),
    )?;
    println!(
        "panel: {} observations, {} excluded, {} curve failures",
        panel.len(),
        exclusions.len(),
        curve_failures.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// regress
// ---------------------------------------------------------------------------

/// Rebuilds regression rows from the panel, daily data, and the drift proxy
/// at the given lookback.
fn assemble_rows(
    cfg: &RunConfig,
    panel: &[CarryGapObservation],
    daily: &[DailyMarketRow],
    lookback: usize,
) -> (Vec<RegressorRow>, usize) {
    let mut proxies = BTreeMap::new();
    for market in cfg.markets() {
        let series = log_tr_series(daily, market);
        if series.len() > lookback {
            if let Ok(proxy) = rolling_drift_proxy(market, &series, lookback) {
                proxies.insert(market, proxy);
            }
        }
    }
    let (rows, audit) = build_regressors(panel, daily, &proxies);
    (rows, audit.len())
}

fn print_fit(fit: &carrygap::econometrics::RegressionFit, label: &str) {
    println!(
        "{label}: R2 {:.4}, adj {:.4}, RMSE {:.3} bp, n={} obs / {} dates",
        fit.r2, fit.adj_r2, fit.rmse_bp, fit.n_obs, fit.n_dates
    );
    for (((name, b), se), t) in fit
        .coef_names
        .iter()
        .zip(&fit.coefficients)
        .zip(&fit.hac_se)
        .zip(&fit.t_stats)
    {
        println!(
            "  {name:<14} {b:>10.4}  ({se:.4})  t={t:>7.2} {}",
            stars(*t)
        );
    }
}

pub fn cmd_regress(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let panel_path = cfg.output_dir.join("panel.csv");
    require_file(&panel_path, "panel")?;
    let daily_path = cfg.daily_path();
    require_file(&daily_path, "simulate")?;

    let panel = load_panel(&panel_path)?;
    let daily = load_daily(&daily_path)?;
    let (rows, warmup) = assemble_rows(cfg, &panel, &daily, cfg.validation.drift_lookback);
    write_regressors(&cfg.output_dir.join("regressors.csv"), &rows)?;
    println!(
        "regress: {} rows ({} with drift warm-up notes)",
        rows.len(),
        warmup
    );

    let hac = cfg.hac_options();
    let markets = cfg.markets();
    for &market in &markets {
        let market_rows: Vec<RegressorRow> = rows
            .iter()
            .filter(|r| r.market == market)
            .cloned()
            .collect();
        if market_rows.is_empty() {
            continue;
        }
        for spec in [SpecKind::Baseline, SpecKind::Extended] {
            let fit = run_spec(&market_rows, spec, MarketScope::Separate, &hac)?;
            print_fit(&fit, &format!("{market} {spec}"));
            write_report(
                &cfg.output_dir.join(format!("fit_{spec}_{market}.json")),
                &cfg.hash(),
                fit.report(),
            )?;
        }
    }
    if markets.len() > 1 {
        for spec in [SpecKind::Baseline, SpecKind::Extended] {
            let fit = run_spec(&rows, spec, MarketScope::PooledCommonWithSpxDummy, &hac)?;
            print_fit(&fit, &format!("pooled {spec}"));
            write_report(
                &cfg.output_dir.join(format!("fit_{spec}_pooled.json")),
                &cfg.hash(),
                fit.report(),
            )?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// loyo
// ---------------------------------------------------------------------------

pub fn cmd_loyo(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let path = cfg.output_dir.join("regressors.csv");
    require_file(&path, "regress")?;
    let rows = load_regressors(&path)?;
    let opts = cfg.loyo_options();

    let mut fold_lines = Vec::new();
    for market in cfg.markets() {
        let market_rows: Vec<RegressorRow> = rows
            .iter()
            .filter(|r| r.market == market)
            .cloned()
            .collect();
        if market_rows.is_empty() {
            continue;
        }
        for spec in [SpecKind::Baseline, SpecKind::Extended] {
            let report: LoyoReport = loyo(&market_rows, spec, MarketScope::Separate, &opts)?;
            println!(
                "loyo {market} {spec}: pooled R2 {:.4}, mean {:.4}, median {:.4}, {}/{} years positive",
                report.pooled_r2,
                report.mean_r2,
                report.median_r2,
                report.years_positive,
                report.folds.len()
            );
            for fold in &report.folds {
                fold_lines.push(format!(
                    "{market},{spec},{},{},{},{},{},{}",
                    fold.holdout_year,
                    fold.n_obs,
                    fold.oos_r2,
                    fold.rmse_bp,
                    fold.mae_bp,
                    fold.fitted_actual_corr
                ));
            }
            write_report(
                &cfg.output_dir.join(format!("loyo_{spec}_{market}.json")),
                &cfg.hash(),
                report,
            )?;
        }
    }
    let mut csv = String::from("market,spec,holdout_year,n_obs,oos_r2,rmse_bp,mae_bp,corr\n");
    for line in fold_lines {
        csv.push_str(&line);
        csv.push('\n');
    }
    std::fs::write(cfg.output_dir.join("loyo_folds.csv"), csv)
        .map_err(|e| CliError::Data(format!("writing loyo_folds.csv: {e}")))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// scan
// ---------------------------------------------------------------------------

pub fn cmd_scan(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let panel_path = cfg.output_dir.join("panel.csv");
    require_file(&panel_path, "panel")?;
    let daily_path = cfg.daily_path();
    require_file(&daily_path, "simulate")?;

    let panel = load_panel(&panel_path)?;
    let daily = load_daily(&daily_path)?;
    let opts = cfg.loyo_options();
    let builder = |n: usize| -> Result<Vec<RegressorRow>, String> {
        let (rows, _) = assemble_rows(cfg, &panel, &daily, n);
        if rows.iter().all(|r| r.gbm_mu_1y.is_none()) {
            return Err(format!("no drift proxy coverage at lookback {n}"));
        }
        Ok(rows)
    };
    let report: HorizonScanReport = horizon_scan(builder, &cfg.validation.scan_grid, &opts)?;

    for (market, scan) in &report.markets {
        println!(
            "scan {market}: LOYO argmax n={}, in-sample argmax n={}",
            scan.argmax_loyo_n, scan.argmax_in_sample_n
        );
        if let Some(point) = scan.point_at(cfg.validation.drift_lookback) {
            println!(
                "scan {market}: at n={}: in-sample R2 {:.4}, LOYO pooled R2 {:.4}",
                point.n, point.in_sample_r2_extended, point.loyo_pooled_r2_extended
            );
        }
        let mut csv = String::from(
            "n,n_obs,in_sample_r2_baseline,in_sample_r2_extended,loyo_pooled_r2_baseline,loyo_pooled_r2_extended\n",
        );
        for p in &scan.points {
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                p.n,
                p.n_obs,
                p.in_sample_r2_baseline,
                p.in_sample_r2_extended,
                p.loyo_pooled_r2_baseline,
                p.loyo_pooled_r2_extended
            ));
        }
        std::fs::write(cfg.output_dir.join(format!("scan_{market}.csv")), csv)
            .map_err(|e| CliError::Data(format!("writing scan csv: {e}")))?;
    }
    write_scan_svg(&cfg.output_dir.join("fig_scan.svg"), &report)?;
    write_report(&cfg.output_dir.join("scan.json"), &cfg.hash(), report)?;
    Ok(())
}

fn write_scan_svg(path: &Path, report: &HorizonScanReport) -> Result<(), CliError> {
    let mut series = Vec::new();
    for (market, scan) in &report.markets {
        series.push(svg::Series {
            label: format!("{market} in-sample R2"),
            points: scan
                .points
                .iter()
                .map(|p| (p.n as f64, p.in_sample_r2_extended))
                .collect(),
            dashed: false,
        });
        series.push(svg::Series {
            label: format!("{market} LOYO pooled R2"),
            points: scan
                .points
                .iter()
                .map(|p| (p.n as f64, p.loyo_pooled_r2_extended))
                .collect(),
            dashed: true,
        });
    }
    let chart = svg::line_chart(
        "Drift-horizon scan: R2 against proxy lookback",
        "lookback n (trading days)",
        "R2",
        &series,
    );
    std::fs::write(path, chart)
        .map_err(|e| CliError::Data(format!("writing {}: {e}", path.display())))
}

// ---------------------------------------------------------------------------
// buckets
// ---------------------------------------------------------------------------

pub fn cmd_buckets(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let path = cfg.output_dir.join("regressors.csv");
    require_file(&path, "regress")?;
    let rows = load_regressors(&path)?;
    let hac = cfg.hac_options();

    let mut csv = String::from(
        "market,bucket,n_obs,r2_baseline,r2_extended,delta_r2,rmse_baseline_bp,rmse_extended_bp,delta_rmse_bp\n",
    );
    let mut all = BTreeMap::new();
    for market in cfg.markets() {
        let market_rows: Vec<RegressorRow> = rows
            .iter()
            .filter(|r| r.market == market)
            .cloned()
            .collect();
        if market_rows.is_empty() {
            continue;
        }
        let base = run_spec(
            &market_rows,
            SpecKind::Baseline,
            MarketScope::Separate,
            &hac,
        )?;
        let ext = run_spec(
            &market_rows,
            SpecKind::Extended,
            MarketScope::Separate,
            &hac,
        )?;
        let table = bucket_diagnostics(&market_rows, &base, &ext);
        println!("buckets {market}:");
        for row in &table {
            println!(
                "  {:<7} n={:<6} R2 {:.3} -> {:.3} (d={:+.3}), RMSE d={:+.3} bp",
                row.bucket.label(),
                row.n_obs,
                row.r2_baseline,
                row.r2_extended,
                row.delta_r2,
                row.delta_rmse_bp
            );
            csv.push_str(&format!(
                "{market},{},{},{},{},{},{},{},{}\n",
                row.bucket.label(),
                row.n_obs,
                row.r2_baseline,
                row.r2_extended,
                row.delta_r2,
                row.rmse_baseline_bp,
                row.rmse_extended_bp,
                row.delta_rmse_bp
            ));
        }
        all.insert(market, table);
    }
    std::fs::write(cfg.output_dir.join("buckets.csv"), csv)
        .map_err(|e| CliError::Data(format!("writing buckets.csv: {e}")))?;
    write_report(&cfg.output_dir.join("buckets.json"), &cfg.hash(), all)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// hurdle
// ---------------------------------------------------------------------------

pub fn cmd_hurdle(cfg: &RunConfig, forward: f64, tau: f64, cg_bp: f64) -> Result<(), CliError> {
    let result = hurdle(forward, tau, cg_bp).map_err(|e| CliError::Usage(e.to_string()))?;
    println!(
        "hurdle: F={forward}, tau={tau}, cg={cg_bp} bp -> exact {:.6} pts, linear {:.6} pts, convexity gap {:.3e}",
        result.exact, result.linear_approx, result.convexity_gap
    );
    ensure_out_dir(cfg)?;
    write_report(
        &cfg.output_dir.join("hurdle.json"),
        &cfg.hash(),
        serde_json::json!({
            "forward": forward,
            "tau_years": tau,
            "cg_bp": cg_bp,
            "hurdle": result,
        }),
    )
}

// ---------------------------------------------------------------------------
// mc-verify
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct McVerifyRow {
    case: String,
    sigma: f64,
    mu: f64,
    tau: f64,
    closed_form: f64,
    mc_estimate: f64,
    mc_se: f64,
    tolerance: f64,
    pass: bool,
}

pub fn cmd_mc_verify(cfg: &RunConfig, n_paths: usize) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let mut rows: Vec<McVerifyRow> = Vec::new();
    let q = EnforcementDirection::LongFutures;

    // Degenerate case is exact.
    let est = mc_running_max(
        0.0,
        0.0,
        q,
        1.0,
        n_paths.max(1000),
        200,
        cfg.seed,
        SupremumScheme::BridgeExact,
    )?;
    rows.push(McVerifyRow {
        case: "degenerate".into(),
        sigma: 0.0,
        mu: 0.0,
        tau: 1.0,
        closed_form: 0.0,
        mc_estimate: est.time_avg,
        mc_se: est.time_avg_se,
        tolerance: 0.0,
        pass: est.time_avg == 0.0,
    });

    // Zero-drift grid against the closed-form average burden.
    for sigma in [0.1, 0.2, 0.4] {
        for tau in [0.25, 1.0] {
            let n_steps = (2000.0 * tau) as usize;
            let est = mc_running_max(
                sigma,
                0.0,
                q,
                tau,
                n_paths,
                n_steps,
                cfg.seed,
                SupremumScheme::BridgeExact,
            )?;
            let closed_form =
                carrygap::path_risk::average_burden(sigma, tau).expect("validated inputs");
            let tolerance = 3.0 * est.time_avg_se;
            rows.push(McVerifyRow {
                case: "zero-drift".into(),
                sigma,
                mu: 0.0,
                tau,
                closed_form,
                mc_estimate: est.time_avg,
                mc_se: est.time_avg_se,
                tolerance,
                pass: (est.time_avg - closed_form).abs() <= tolerance,
            });
        }
    }

    // Drifted cases against the first-order expansion, allowing the
    // quadratic remainder.
    for mu in [0.05, 0.1] {
        let sigma = 0.2;
        let tau = 1.0;
        let est = mc_running_max(
            sigma,
            mu,
            q,
            tau,
            n_paths,
            2000,
            cfg.seed,
            SupremumScheme::BridgeExact,
        )?;
        let first_order = carrygap::path_risk::drift_adjusted_burden(
            &carrygap::path_risk::SupportCapitalParams { sigma, mu, q, tau },
        )
        .expect("validated inputs");
        let remainder = mu * mu * tau.powf(1.5) / sigma;
        let tolerance = remainder.max(3.0 * est.time_avg_se);
        rows.push(McVerifyRow {
            case: "first-order drift".into(),
            sigma,
            mu,
            tau,
            closed_form: first_order,
            mc_estimate: est.time_avg,
            mc_se: est.time_avg_se,
            tolerance,
            pass: (est.time_avg - first_order).abs() <= tolerance,
        });
    }

    println!(
        "{:<18} {:>5} {:>5} {:>5} {:>12} {:>12} {:>10} {:>6}",
        "case", "sigma", "mu", "tau", "closed form", "mc", "se", "pass"
    );
    let mut all_pass = true;
    for r in &rows {
        all_pass &= r.pass;
        println!(
            "{:<18} {:>5.2} {:>5.2} {:>5.2} {:>12.6} {:>12.6} {:>10.2e} {:>6}",
            r.case,
            r.sigma,
            r.mu,
            r.tau,
            r.closed_form,
            r.mc_estimate,
            r.mc_se,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    write_report(
        &cfg.output_dir.join("mc_verify.json"),
        &cfg.hash(),
        serde_json::json!({ "n_paths": n_paths, "rows": rows, "all_pass": all_pass }),
    )?;
    if all_pass {
        println!("mc-verify: all {} rows pass", rows.len());
        Ok(())
    } else {
        Err(CliError::Validation(
            "mc-verify: at least one row failed".into(),
        ))
    }
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

pub fn cmd_report(cfg: &RunConfig) -> Result<(), CliError> {
    ensure_out_dir(cfg)?;
    let path = cfg.output_dir.join("regressors.csv");
    require_file(&path, "regress")?;
    let rows = load_regressors(&path)?;
    let hac = cfg.hac_options();
    let opts = cfg.loyo_options();
    let report_dir = cfg.output_dir.join("report");
    std::fs::create_dir_all(&report_dir)
        .map_err(|e| CliError::Data(format!("creating {}: {e}", report_dir.display())))?;

    let markets: Vec<Market> = cfg
        .markets()
        .into_iter()
        .filter(|m| rows.iter().any(|r| r.market == *m))
        .collect();

    // In-sample summary and coefficient tables.
    let mut insample = String::from("scope,market,spec,n_obs,n_dates,r2,adj_r2,rmse_bp,mae_bp\n");
    let mut coeffs = String::from("scope,market,spec,regressor,estimate,hac_se,t,stars\n");
    let mut fits = BTreeMap::new();
    for &market in &markets {
        let market_rows: Vec<RegressorRow> = rows
            .iter()
            .filter(|r| r.market == market)
            .cloned()
            .collect();
        for spec in [SpecKind::Baseline, SpecKind::Extended] {
            let fit = run_spec(&market_rows, spec, MarketScope::Separate, &hac)?;
            insample.push_str(&format!(
                "separate,{market},{spec},{},{},{},{},{},{}\n",
                fit.n_obs, fit.n_dates, fit.r2, fit.adj_r2, fit.rmse_bp, fit.mae_bp
            ));
            for (((name, b), se), t) in fit
                .coef_names
                .iter()
                .zip(&fit.coefficients)
                .zip(&fit.hac_se)
                .zip(&fit.t_stats)
            {
                coeffs.push_str(&format!(
                    "separate,{market},{spec},{name},{b},{se},{t},{}\n",
                    stars(*t)
                ));
            }
            fits.insert((market, spec), fit);
        }
    }
    if markets.len() > 1 {
        for spec in [SpecKind::Baseline, SpecKind::Extended] {
            let fit = run_spec(&rows, spec, MarketScope::PooledCommonWithSpxDummy, &hac)?;
            insample.push_str(&format!(
                "pooled,ALL,{spec},{},{},{},{},{},{}\n",
                fit.n_obs, fit.n_dates, fit.r2, fit.adj_r2, fit.rmse_bp, fit.mae_bp
            ));
            for (((name, b), se), t) in fit
                .coef_names
                .iter()
                .zip(&fit.coefficients)
                .zip(&fit.hac_se)
                .zip(&fit.t_stats)
            {
                coeffs.push_str(&format!(
                    "pooled,ALL,{spec},{name},{b},{se},{t},{}\n",
                    stars(*t)
                ));
            }
        }
    }
    write_text(&report_dir.join("table_insample.csv"), &insample)?;
    write_text(&report_dir.join("table_coefficients.csv"), &coeffs)?;

    // LOYO summary, year-by-year comparison, and the bar figure.
    let mut summary = String::from(
        "market,spec,mean_r2,median_r2,pooled_r2,years_positive,n_years,mean_corr,mean_rmse_bp\n",
    );
    let mut yearly = String::from("market,holdout_year,baseline_r2,extended_r2,delta_r2\n");
    for &market in &markets {
        let market_rows: Vec<RegressorRow> = rows
            .iter()
            .filter(|r| r.market == market)
            .cloned()
            .collect();
        let mut per_spec: BTreeMap<&str, LoyoReport> = BTreeMap::new();
        for spec in [SpecKind::Baseline, SpecKind::Extended] {
            let rep = loyo(&market_rows, spec, MarketScope::Separate, &opts)?;
            summary.push_str(&format!(
                "{market},{spec},{},{},{},{},{},{},{}\n",
                rep.mean_r2,
                rep.median_r2,
                rep.pooled_r2,
                rep.years_positive,
                rep.folds.len(),
                rep.mean_corr,
                rep.mean_rmse_bp
            ));
            per_spec.insert(
                match spec {
                    SpecKind::Baseline => "baseline",
                    SpecKind::Extended => "extended",
                },
                rep,
            );
        }
        let base = &per_spec["baseline"];
        let ext = &per_spec["extended"];
        let years: Vec<i32> = base.folds.iter().map(|f| f.holdout_year).collect();
        let mut base_bars = Vec::new();
        let mut ext_bars = Vec::new();
        for (i, year) in years.iter().enumerate() {
            let b = base.folds[i].oos_r2;
            let e = ext
                .folds
                .iter()
                .find(|f| f.holdout_year == *year)
                .map(|f| f.oos_r2)
                .unwrap_or(f64::NAN);
            yearly.push_str(&format!("{market},{year},{b},{e},{}\n", e - b));
            base_bars.push(b);
            ext_bars.push(e);
        }
        let chart = svg::grouped_bar_chart(
            &format!("{market}: holdout-year out-of-sample R2"),
            "OOS R2",
            &years.iter().map(|y| y.to_string()).collect::<Vec<_>>(),
            &[
                ("baseline".to_string(), base_bars),
                ("extended".to_string(), ext_bars),
            ],
        );
        write_text(&report_dir.join(format!("fig_loyo_{market}.svg")), &chart)?;
    }
    write_text(&report_dir.join("table_loyo_summary.csv"), &summary)?;
    write_text(&report_dir.join("table_loyo_yearly.csv"), &yearly)?;

    // Coefficient-sign stability across LOYO training folds.
    let mut stability = String::from(
        "market,spec,regressor,positive,negative,n_folds,sig_1pct,sig_5pct,sig_10pct\n",
    );
    for &market in &markets {
        let market_rows: Vec<RegressorRow> = rows
            .iter()
            .filter(|r| r.market == market)
            .cloned()
            .collect();
        for spec in [SpecKind::Baseline, SpecKind::Extended] {
            let rep = sign_stability(&market_rows, spec, MarketScope::Separate, &opts)?;
            for c in &rep.coefficients {
                stability.push_str(&format!(
                    "{market},{spec},{},{},{},{},{},{},{}\n",
                    c.name,
                    c.positive,
                    c.negative,
                    rep.n_folds,
                    c.significant_1pct,
                    c.significant_5pct,
                    c.significant_10pct
                ));
            }
        }
    }
    write_text(&report_dir.join("table_sign_stability.csv"), &stability)?;

    // Maturity-bucket diagnostics.
    let mut buckets =
        String::from("market,bucket,n_obs,r2_baseline,r2_extended,delta_r2,delta_rmse_bp\n");
    for &market in &markets {
        let market_rows: Vec<RegressorRow> = rows
            .iter()
            .filter(|r| r.market == market)
            .cloned()
            .collect();
        let base = &fits[&(market, SpecKind::Baseline)];
        let ext = &fits[&(market, SpecKind::Extended)];
        for row in bucket_diagnostics(&market_rows, base, ext) {
            buckets.push_str(&format!(
                "{market},{},{},{},{},{},{}\n",
                row.bucket.label(),
                row.n_obs,
                row.r2_baseline,
                row.r2_extended,
                row.delta_r2,
                row.delta_rmse_bp
            ));
        }
    }
    write_text(&report_dir.join("table_buckets.csv"), &buckets)?;

    // Cumulative-accrual diagnostic (5-7m bucket) when the panel and daily
    // files are available.
    let panel_path = cfg.output_dir.join("panel.csv");
    let daily_path = cfg.daily_path();
    if panel_path.exists() && daily_path.exists() {
        let panel = load_panel(&panel_path)?;
        let daily = load_daily(&daily_path)?;
        for &market in &markets {
            let series = carrygap::carry_gap_panel::cumulative_accrual_zscore(
                &panel,
                &daily,
                market,
                carrygap::types::MaturityBucket::M5to7,
            );
            if series.dates.is_empty() {
                continue;
            }
            let mut csv = String::from("date,cum_cg_z,log_tr_z\n");
            for ((date, cg), tr) in series
                .dates
                .iter()
                .zip(&series.cum_cg_z)
                .zip(&series.log_tr_z)
            {
                csv.push_str(&format!("{date},{cg},{tr}\n"));
            }
            write_text(&report_dir.join(format!("accrual_5-7m_{market}.csv")), &csv)?;
            println!(
                "report: accrual diagnostic {market} 5-7m: corr(cum cg, log TR) = {:.3}",
                series.correlation()
            );
        }
    }

    // Horizon-scan figure from a prior `scan` run, when present.
    let scan_json = cfg.output_dir.join("scan.json");
    if scan_json.exists() {
        println!("report: scan.json found; fig_scan.svg was emitted by `carrygap scan`");
    }

    write_report(
        &cfg.output_dir.join("report_manifest.json"),
        &cfg.hash(),
        serde_json::json!({
            "tables": [
                "report/table_insample.csv",
                "report/table_coefficients.csv",
                "report/table_loyo_summary.csv",
                "report/table_loyo_yearly.csv",
                "report/table_sign_stability.csv",
                "report/table_buckets.csv",
            ],
            "figures": markets.iter().map(|m| format!("report/fig_loyo_{m}.svg")).collect::<Vec<_>>(),
        }),
    )?;
    println!("report: tables and figures in {}", report_dir.display());
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Data(format!("writing {}: {e}", path.display())))
}
