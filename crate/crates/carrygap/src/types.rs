//! Shared domain types: markets, option rights, maturity buckets, cell keys.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

/// Index-option market.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Market {
    Spx,
    Rut,
}

impl Market {
    pub const ALL: [Market; 2] = [Market::Spx, Market::Rut];

    pub fn as_str(&self) -> &'static str {
        match self {
            Market::Spx => "SPX",
            Market::Rut => "RUT",
        }
    }
}

impl fmt::Display for Market {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Market {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "SPX" => Ok(Market::Spx),
            "RUT" => Ok(Market::Rut),
            other => Err(format!("unknown market {other:?} (expected SPX or RUT)")),
        }
    }
}

/// Option right (call or put).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OptionRight {
    Call,
    Put,
}

impl OptionRight {
    pub fn as_str(&self) -> &'static str {
        match self {
            OptionRight::Call => "C",
            OptionRight::Put => "P",
        }
    }
}

impl fmt::Display for OptionRight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OptionRight {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "C" | "CALL" => Ok(OptionRight::Call),
            "P" | "PUT" => Ok(OptionRight::Put),
            other => Err(format!("unknown option right {other:?} (expected C or P)")),
        }
    }
}

/// Direction of a parity-enforcement position, identified by the sign of its
/// futures-leg exposure. Long futures has drift exposure `+1`, short futures
/// `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnforcementDirection {
    /// The `-C+P+F` side: long futures leg, drift sign `+1`.
    LongFutures,
    /// The `+C-P-F` side: short futures leg, drift sign `-1`.
    ShortFutures,
}

impl EnforcementDirection {
    /// Signed drift exposure of the futures leg (`+1` or `-1`).
    pub fn sign(&self) -> f64 {
        match self {
            EnforcementDirection::LongFutures => 1.0,
            EnforcementDirection::ShortFutures => -1.0,
        }
    }
}

/// Maturity bucket labels. Month boundaries are interpreted as
/// `tau ∈ [m1/12, m2/12)` years, left-closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MaturityBucket {
    M1to2,
    M2to3,
    M3to5,
    M5to7,
    M7to10,
    M10to14,
    M14to21,
    M21Plus,
}

impl MaturityBucket {
    pub const ALL: [MaturityBucket; 8] = [
        MaturityBucket::M1to2,
        MaturityBucket::M2to3,
        MaturityBucket::M3to5,
        MaturityBucket::M5to7,
        MaturityBucket::M7to10,
        MaturityBucket::M10to14,
        MaturityBucket::M14to21,
        MaturityBucket::M21Plus,
    ];

    /// Lower month bound (inclusive) and upper month bound (exclusive,
    /// `None` for the open-ended top bucket).
    pub fn month_bounds(&self) -> (u32, Option<u32>) {
        match self {
            MaturityBucket::M1to2 => (1, Some(2)),
            MaturityBucket::M2to3 => (2, Some(3)),
            MaturityBucket::M3to5 => (3, Some(5)),
            MaturityBucket::M5to7 => (5, Some(7)),
            MaturityBucket::M7to10 => (7, Some(10)),
            MaturityBucket::M10to14 => (10, Some(14)),
            MaturityBucket::M14to21 => (14, Some(21)),
            MaturityBucket::M21Plus => (21, None),
        }
    }

    /// Bucket for a maturity in years, or `None` when `tau` is below the
    /// one-month floor of the bucket table.
    pub fn for_tau(tau_years: f64) -> Option<MaturityBucket> {
        if !tau_years.is_finite() || tau_years < 1.0 / 12.0 {
            return None;
        }
        for bucket in MaturityBucket::ALL {
            let (lo, hi) = bucket.month_bounds();
            let lo = f64::from(lo) / 12.0;
            let within_hi = match hi {
                Some(h) => tau_years < f64::from(h) / 12.0,
                None => true,
            };
            if tau_years >= lo && within_hi {
                return Some(bucket);
            }
        }
        None
    }

    pub fn label(&self) -> &'static str {
        match self {
            MaturityBucket::M1to2 => "1-2m",
            MaturityBucket::M2to3 => "2-3m",
            MaturityBucket::M3to5 => "3-5m",
            MaturityBucket::M5to7 => "5-7m",
            MaturityBucket::M7to10 => "7-10m",
            MaturityBucket::M10to14 => "10-14m",
            MaturityBucket::M14to21 => "14-21m",
            MaturityBucket::M21Plus => "21m+",
        }
    }
}

impl fmt::Display for MaturityBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MaturityBucket {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MaturityBucket::ALL
            .iter()
            .find(|b| b.label() == s.trim())
            .copied()
            .ok_or_else(|| format!("unknown maturity bucket {s:?}"))
    }
}

impl Serialize for MaturityBucket {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for MaturityBucket {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Key of one date–maturity cell within a market.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub market: Market,
    pub quote_date: NaiveDate,
    pub expiry: NaiveDate,
}

/// Year fraction between two dates on an ACT/365.25 calendar-day count.
pub fn year_fraction(from: NaiveDate, to: NaiveDate) -> f64 {
    (to - from).num_days() as f64 / 365.25
}
