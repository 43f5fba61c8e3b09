//! Run configuration: a TOML file plus flag/env overrides, with a stable
//! fingerprint embedded in every report.

use std::path::{Path, PathBuf};

use carrygap::econometrics::{HacOptions, ScoreAggregation};
use carrygap::implied_discount::{CellEstimator, EstimatorConfig};
use carrygap::market_data::FilterConfig;
use carrygap::synthetic_lab::{CgTruth, MarketParams, SyntheticMarketConfig};
use carrygap::types::Market;
use carrygap::validation::{LoyoOptions, PooledCentering, SstConvention, DEFAULT_SCAN_GRID};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Output-directory override honored between the config file and `--out`.
pub const OUT_DIR_ENV: &str = "CARRYGAP_OUT";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Root seed; all randomness (simulation, Monte Carlo) flows from it.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub inputs: InputsSection,
    pub synthetic: SyntheticSection,
    pub filters: FiltersSection,
    pub estimator: EstimatorSection,
    pub econometrics: EconometricsSection,
    pub validation: ValidationSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            output_dir: PathBuf::from("out"),
            inputs: InputsSection::default(),
            synthetic: SyntheticSection::default(),
            filters: FiltersSection::default(),
            estimator: EstimatorSection::default(),
            econometrics: EconometricsSection::default(),
            validation: ValidationSection::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InputsSection {
    /// Quote/daily/OIS files; when omitted, stage outputs in `output_dir`
    /// (for example from `simulate`) are used.
    pub quotes: Option<PathBuf>,
    pub daily: Option<PathBuf>,
    pub ois: Option<PathBuf>,
    pub markets: Option<Vec<Market>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSection {
    pub start_date: chrono::NaiveDate,
    pub n_years: usize,
    pub markets: Vec<Market>,
    pub ois_1y_base_pct: f64,
    pub ois_10y_base_pct: f64,
    pub rate_wiggle_pct: f64,
    /// Constant imposed wedge in bp; ignored when `cg_linear` is set.
    pub cg_constant_bp: f64,
    pub cg_linear: Option<CgLinearSection>,
    pub proxy_lookback: usize,
    pub daily_history_days: usize,
    pub strike_span: f64,
    pub n_strikes: usize,
    pub half_spread: f64,
    pub mid_noise_sd: f64,
    pub tick: f64,
    pub expiry_every_days: usize,
    pub min_tau_days: i64,
    pub max_tau_days: i64,
    pub n_expiries: usize,
    pub snapshot_time: u32,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        let base = SyntheticMarketConfig::default();
        SyntheticSection {
            start_date: base.start_date,
            n_years: base.n_years,
            markets: vec![Market::Spx],
            ois_1y_base_pct: base.ois_1y_base_pct,
            ois_10y_base_pct: base.ois_10y_base_pct,
            rate_wiggle_pct: base.rate_wiggle_pct,
            cg_constant_bp: 25.0,
            cg_linear: None,
            proxy_lookback: base.proxy_lookback,
            daily_history_days: base.daily_history_days,
            strike_span: 0.10,
            n_strikes: 21,
            half_spread: base.half_spread,
            mid_noise_sd: base.mid_noise_sd,
            tick: base.tick,
            expiry_every_days: base.expiry_every_days,
            min_tau_days: base.min_tau_days,
            max_tau_days: base.max_tau_days,
            n_expiries: base.n_expiries,
            snapshot_time: base.snapshot_minute,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CgLinearSection {
    pub alpha: f64,
    pub phi_1: f64,
    pub phi_10: f64,
    pub psi: f64,
    pub beta: f64,
    pub gamma: f64,
    pub noise_sd_bp: f64,
}

impl Default for CgLinearSection {
    fn default() -> Self {
        CgLinearSection {
            alpha: 25.0,
            phi_1: -0.5,
            phi_10: 0.4,
            psi: 0.119,
            beta: 0.2,
            gamma: -20.0,
            noise_sd_bp: 5.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiltersSection {
    pub min_mid: f64,
    pub max_rel_spread: f64,
    pub min_strikes_per_cell: usize,
    pub snapshot_time: u32,
}

impl Default for FiltersSection {
    fn default() -> Self {
        let base = FilterConfig::default();
        FiltersSection {
            min_mid: base.min_mid,
            max_rel_spread: base.max_rel_spread,
            min_strikes_per_cell: base.min_strikes_per_cell,
            snapshot_time: base.snapshot_time,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatorSection {
    pub method: CellEstimator,
    pub b_hat_band: (f64, f64),
}

impl Default for EstimatorSection {
    fn default() -> Self {
        let base = EstimatorConfig::default();
        EstimatorSection {
            method: base.method,
            b_hat_band: base.b_hat_band,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EconometricsSection {
    pub hac_max_lag: usize,
    pub score_aggregation: ScoreAggregation,
}

impl Default for EconometricsSection {
    fn default() -> Self {
        EconometricsSection {
            hac_max_lag: 21,
            score_aggregation: ScoreAggregation::Sum,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationSection {
    pub drift_lookback: usize,
    pub scan_grid: Vec<usize>,
    pub sst_convention: SstConventionToml,
    pub pooled_centering: PooledCenteringToml,
}

impl Default for ValidationSection {
    fn default() -> Self {
        ValidationSection {
            drift_lookback: 504,
            scan_grid: DEFAULT_SCAN_GRID.to_vec(),
            sst_convention: SstConventionToml::HoldoutMean,
            pooled_centering: PooledCenteringToml::PooledMean,
        }
    }
}

// Serde-friendly mirrors of the validation enums (the library types only
// serialize; config needs deserialization too).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SstConventionToml {
    HoldoutMean,
    TrainingMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PooledCenteringToml {
    PooledMean,
    PerYearMean,
}

impl RunConfig {
    /// Loads the config file (when given), then applies `--out`/`--seed`
    /// flags and the `CARRYGAP_OUT` environment variable. Flags win over the
    /// environment, which wins over the file.
    pub fn load(
        path: Option<&Path>,
        out_flag: Option<&Path>,
        seed_flag: Option<u64>,
    ) -> Result<RunConfig, CliError> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Usage(format!("cannot read config {}: {e}", p.display()))
                })?;
                toml::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("config {}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Ok(env_out) = std::env::var(OUT_DIR_ENV) {
            if !env_out.is_empty() {
                cfg.output_dir = PathBuf::from(env_out);
            }
        }
        if let Some(out) = out_flag {
            cfg.output_dir = out.to_path_buf();
        }
        if let Some(seed) = seed_flag {
            cfg.seed = seed;
        }
        cfg.filter_config()
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }

    /// FNV-1a fingerprint of the canonical JSON serialization. The output
    /// directory is excluded: it locates artifacts but does not change the
    /// analysis, and identical runs into different directories must produce
    /// identical reports.
    pub fn hash(&self) -> String {
        let mut analytical = self.clone();
        analytical.output_dir = PathBuf::new();
        let canon = serde_json::to_string(&analytical).expect("config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for byte in canon.as_bytes() {
            h ^= u64::from(*byte);
            h = h.wrapping_mul(0x1000_0000_01b3);
        }
        format!("{h:016x}")
    }

    pub fn markets(&self) -> Vec<Market> {
        self.inputs
            .markets
            .clone()
            .unwrap_or_else(|| self.synthetic.markets.clone())
    }

    pub fn quotes_path(&self) -> PathBuf {
        self.inputs
            .quotes
            .clone()
            .unwrap_or_else(|| self.output_dir.join("quotes.csv"))
    }

    pub fn daily_path(&self) -> PathBuf {
        self.inputs
            .daily
            .clone()
            .unwrap_or_else(|| self.output_dir.join("daily.csv"))
    }

    pub fn ois_path(&self) -> PathBuf {
        self.inputs
            .ois
            .clone()
            .unwrap_or_else(|| self.output_dir.join("ois.csv"))
    }

    pub fn filter_config(&self) -> FilterConfig {
        FilterConfig {
            min_mid: self.filters.min_mid,
            max_rel_spread: self.filters.max_rel_spread,
            min_strikes_per_cell: self.filters.min_strikes_per_cell,
            snapshot_time: self.filters.snapshot_time,
        }
    }

    pub fn estimator_config(&self) -> EstimatorConfig {
        EstimatorConfig {
            method: self.estimator.method,
            b_hat_band: self.estimator.b_hat_band,
        }
    }

    pub fn hac_options(&self) -> HacOptions {
        HacOptions {
            max_lag: self.econometrics.hac_max_lag,
            score_aggregation: self.econometrics.score_aggregation,
        }
    }

    pub fn loyo_options(&self) -> LoyoOptions {
        LoyoOptions {
            hac: self.hac_options(),
            sst: match self.validation.sst_convention {
                SstConventionToml::HoldoutMean => SstConvention::HoldoutMean,
                SstConventionToml::TrainingMean => SstConvention::TrainingMean,
            },
            pooled: match self.validation.pooled_centering {
                PooledCenteringToml::PooledMean => PooledCentering::PooledMean,
                PooledCenteringToml::PerYearMean => PooledCentering::PerYearMean,
            },
        }
    }

    pub fn synthetic_config(&self) -> SyntheticMarketConfig {
        let s = &self.synthetic;
        let half = s.n_strikes.max(2) / 2;
        let strike_grid: Vec<f64> = (-(half as i64)..=half as i64)
            .map(|i| i as f64 * s.strike_span / half as f64)
            .collect();
        SyntheticMarketConfig {
            seed: self.seed,
            start_date: s.start_date,
            n_years: s.n_years,
            markets: s
                .markets
                .iter()
                .map(|&m| MarketParams::default_for(m))
                .collect(),
            ois_1y_base_pct: s.ois_1y_base_pct,
            ois_10y_base_pct: s.ois_10y_base_pct,
            rate_wiggle_pct: s.rate_wiggle_pct,
            cg_true: match &s.cg_linear {
                Some(lin) => CgTruth::Linear {
                    alpha: lin.alpha,
                    phi_1: lin.phi_1,
                    phi_10: lin.phi_10,
                    psi: lin.psi,
                    beta: lin.beta,
                    gamma: lin.gamma,
                    noise_sd_bp: lin.noise_sd_bp,
                },
                None => CgTruth::ConstantBp(s.cg_constant_bp),
            },
            proxy_lookback: s.proxy_lookback,
            daily_history_days: s.daily_history_days,
            strike_grid,
            half_spread: s.half_spread,
            mid_noise_sd: s.mid_noise_sd,
            tick: s.tick,
            expiry_every_days: s.expiry_every_days,
            min_tau_days: s.min_tau_days,
            max_tau_days: s.max_tau_days,
            n_expiries: s.n_expiries,
            snapshot_minute: s.snapshot_time,
        }
    }
}

/// Wrapper adding provenance fields to every JSON report.
#[derive(Debug, Serialize)]
pub struct Report<'a, T: Serialize> {
    pub artifact: &'static str,
    pub version: &'static str,
    pub config_hash: &'a str,
    #[serde(flatten)]
    pub body: T,
}

pub fn write_report<T: Serialize>(path: &Path, config_hash: &str, body: T) -> Result<(), CliError> {
    let report = Report {
        artifact: "carrygap",
        version: env!("CARGO_PKG_VERSION"),
        config_hash,
        body,
    };
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Data(format!("serializing {}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| CliError::Data(format!("writing {}: {e}", path.display())))?;
    Ok(())
}
