//! Carry-gap analysis library.
//!
//! Recovers option-implied discount factors from the strike cross-section of
//! put–call parity, benchmarks them against a bootstrapped OIS curve, and
//! regresses the resulting carry gap (the annualized log wedge between the
//! two discount factors, in basis points) on GBM path-risk terms, trading
//! frictions, and financial conditions, with date-based Newey–West inference
//! and leave-one-year-out validation.
//!
//! The pipeline stages, in dependency order:
//!
//! 1. [`market_data`] — quote ingestion, call–put pairing, sample filters.
//! 2. [`ois_curve`] — OIS discount-curve bootstrap and log-linear evaluation.
//! 3. [`implied_discount`] — joint recovery of the implied discount factor
//!    and forward from each date–maturity cell.
//! 4. [`carry_gap_panel`] — the market–date–maturity carry-gap panel and
//!    daily aggregates.
//! 5. [`path_risk`] — Brownian support-capital closed forms, the GBM
//!    diffusion and drift regressors, and the prior-only rolling drift proxy.
//! 6. [`econometrics`] — OLS with date-clustered HAC (Newey–West) inference.
//! 7. [`validation`] — leave-one-year-out validation, horizon scan, sign
//!    stability, maturity-bucket diagnostics, and the price-space hurdle.
//! 8. [`synthetic_lab`] — synthetic-market generator and Monte Carlo checks
//!    that serve as round-trip oracles for everything above.
//!
//! Every stage is a pure transformation over immutable inputs; file formats
//! are documented on the reader/writer functions of the owning module.

pub mod carry_gap_panel;
pub mod econometrics;
pub mod implied_discount;
pub mod linalg;
pub mod market_data;
pub mod ois_curve;
pub mod path_risk;
pub mod synthetic_lab;
pub mod types;
pub mod validation;

pub use carry_gap_panel::CarryGapObservation;
pub use econometrics::{RegressionFit, RegressorRow};
pub use implied_discount::CellEstimate;
pub use market_data::{DailyMarketRow, FilterConfig, OptionQuote, PairedQuote};
pub use ois_curve::OisCurve;
pub use path_risk::{DriftProxySeries, GbmTerms, SupportCapitalParams};
pub use types::{CellKey, EnforcementDirection, Market, MaturityBucket, OptionRight};
