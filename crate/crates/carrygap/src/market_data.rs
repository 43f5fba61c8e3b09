//! Option-quote and daily-market ingestion, call–put pairing, and sample
//! filters.
//!
//! Quotes enter as minute-stamped NBBO rows. One quote per contract per day
//! is selected at the configured snapshot time (nearest minute at or before
//! it), price filters are applied, calls and puts are matched by
//! `(market, date, expiry, strike)`, and cells with too few surviving strikes
//! are deleted. Every input quote is accounted for exactly once: kept in a
//! pair, rejected at parse, or filtered with a per-rule audit count.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{CellKey, Market, OptionRight};

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: header mismatch, expected `{expected}`, found `{found}`")]
    SchemaMismatch {
        path: String,
        expected: String,
        found: String,
    },
    #[error("{path} row {row}: {message}")]
    Csv {
        path: String,
        row: u64,
        message: String,
    },
    #[error("invalid filter config: {0}")]
    InvalidFilterConfig(String),
}

/// One raw NBBO option quote.
#[derive(Debug, Clone, PartialEq)]
pub struct OptionQuote {
    pub market: Market,
    pub quote_date: NaiveDate,
    pub expiry: NaiveDate,
    /// Strike in index points, strictly positive.
    pub strike: f64,
    pub right: OptionRight,
    pub bid: f64,
    pub ask: f64,
    /// Intraday timestamp in minutes since midnight.
    pub quote_time: u32,
}

impl OptionQuote {
    /// Mid price, always derived from bid/ask.
    pub fn mid(&self) -> f64 {
        0.5 * (self.bid + self.ask)
    }

    /// Bid–ask spread relative to mid.
    pub fn relative_spread(&self) -> f64 {
        (self.ask - self.bid) / self.mid()
    }
}

/// A strike-matched call–put pair at one `(market, date, expiry)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedQuote {
    pub market: Market,
    pub quote_date: NaiveDate,
    pub expiry: NaiveDate,
    pub strike: f64,
    pub call_mid: f64,
    pub put_mid: f64,
    pub call_spread: f64,
    pub put_spread: f64,
    /// `call_mid - put_mid`, the cross-sectional input to discount-factor
    /// recovery. Maintained exactly by [`PairedQuote::from_quotes`].
    pub synthetic_forward: f64,
}

impl PairedQuote {
    pub fn from_quotes(call: &OptionQuote, put: &OptionQuote) -> Self {
        debug_assert_eq!(call.right, OptionRight::Call);
        debug_assert_eq!(put.right, OptionRight::Put);
        debug_assert_eq!(call.strike, put.strike);
        let call_mid = call.mid();
        let put_mid = put.mid();
        PairedQuote {
            market: call.market,
            quote_date: call.quote_date,
            expiry: call.expiry,
            strike: call.strike,
            call_mid,
            put_mid,
            call_spread: call.ask - call.bid,
            put_spread: put.ask - put.bid,
            synthetic_forward: call_mid - put_mid,
        }
    }

    pub fn cell_key(&self) -> CellKey {
        CellKey {
            market: self.market,
            quote_date: self.quote_date,
            expiry: self.expiry,
        }
    }
}

/// One daily market row: total-return index level and volatility index for
/// one market, plus the shared OIS rates and financial-conditions index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyMarketRow {
    pub date: NaiveDate,
    pub market: Market,
    pub tr_index: f64,
    pub vol_pct: f64,
    pub ois_1y_pct: f64,
    pub ois_10y_pct: f64,
    pub nfci: f64,
}

/// Sample-filter settings.
///
/// The defaults are artifact choices, not values taken from any data source:
/// quotes below 0.05 index points, relative spreads above 50%, and cells with
/// fewer than five surviving strikes are removed, and quotes are snapshotted
/// at 15:45 exchange time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub min_mid: f64,
    pub max_rel_spread: f64,
    pub min_strikes_per_cell: usize,
    /// Snapshot time in minutes since midnight.
    pub snapshot_time: u32,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            min_mid: 0.05,
            max_rel_spread: 0.50,
            min_strikes_per_cell: 5,
            snapshot_time: 15 * 60 + 45,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<(), MarketDataError> {
        if self.min_strikes_per_cell < 2 {
            return Err(MarketDataError::InvalidFilterConfig(
                "min_strikes_per_cell must be at least 2 (cross-sectional regression needs two strikes)".into(),
            ));
        }
        if !self.min_mid.is_finite() || self.min_mid < 0.0 {
            return Err(MarketDataError::InvalidFilterConfig(
                "min_mid must be nonnegative".into(),
            ));
        }
        if !self.max_rel_spread.is_finite() || self.max_rel_spread <= 0.0 {
            return Err(MarketDataError::InvalidFilterConfig(
                "max_rel_spread must be positive".into(),
            ));
        }
        if self.snapshot_time >= 24 * 60 {
            return Err(MarketDataError::InvalidFilterConfig(
                "snapshot_time must be below 1440 minutes".into(),
            ));
        }
        Ok(())
    }
}

/// A parse-time reject: the 1-based data row and why it was refused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectedRow {
    pub row: u64,
    pub reason: String,
}

/// Result of loading a quotes file for one market.
#[derive(Debug, Clone, Default)]
pub struct QuoteLoad {
    pub quotes: Vec<OptionQuote>,
    pub rejects: Vec<RejectedRow>,
    /// Well-formed rows belonging to a different market than requested.
    pub other_market: usize,
}

const QUOTES_HEADER: [&str; 8] = [
    "market",
    "quote_date",
    "expiry",
    "strike",
    "right",
    "bid",
    "ask",
    "quote_time",
];

/// Loads option quotes for one market from
/// `market,quote_date,expiry,strike,right,bid,ask,quote_time` CSV.
///
/// Malformed rows are collected into the rejects report with the failing row
/// number and a reason; they are never silently dropped. Rows from the other
/// market are counted but not rejected.
pub fn load_quotes(path: &Path, market: Market) -> Result<QuoteLoad, MarketDataError> {
    let mut reader = csv_reader(path)?;
    check_header(&mut reader, path, &QUOTES_HEADER)?;

    let mut out = QuoteLoad::default();
    for (idx, record) in reader.records().enumerate() {
        let row = idx as u64 + 1;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                out.rejects.push(RejectedRow {
                    row,
                    reason: format!("unreadable record: {e}"),
                });
                continue;
            }
        };
        match parse_quote_record(&record) {
            Ok(q) if q.market == market => out.quotes.push(q),
            Ok(_) => out.other_market += 1,
            Err(reason) => out.rejects.push(RejectedRow { row, reason }),
        }
    }
    Ok(out)
}

fn parse_quote_record(record: &csv::StringRecord) -> Result<OptionQuote, String> {
    if record.len() != QUOTES_HEADER.len() {
        return Err(format!(
            "wrong field count: {} (expected {})",
            record.len(),
            QUOTES_HEADER.len()
        ));
    }
    let field = |i: usize| record.get(i).unwrap_or("").trim();
    let market: Market = field(0).parse()?;
    let quote_date: NaiveDate = field(1)
        .parse()
        .map_err(|_| format!("bad quote_date {:?}", field(1)))?;
    let expiry: NaiveDate = field(2)
        .parse()
        .map_err(|_| format!("bad expiry {:?}", field(2)))?;
    let strike: f64 = field(3)
        .parse()
        .map_err(|_| format!("bad strike {:?}", field(3)))?;
    let right: OptionRight = field(4).parse()?;
    let bid: f64 = field(5)
        .parse()
        .map_err(|_| format!("bad bid {:?}", field(5)))?;
    let ask: f64 = field(6)
        .parse()
        .map_err(|_| format!("bad ask {:?}", field(6)))?;
    let quote_time: u32 = field(7)
        .parse()
        .map_err(|_| format!("bad quote_time {:?}", field(7)))?;

    if !strike.is_finite() || strike <= 0.0 {
        return Err("non-positive strike".into());
    }
    if !bid.is_finite() || !ask.is_finite() {
        return Err("non-finite price".into());
    }
    if bid < 0.0 {
        return Err("negative bid".into());
    }
    if ask < bid {
        return Err("crossed quote".into());
    }
    if expiry <= quote_date {
        return Err("expiry not after quote date".into());
    }
    if quote_time >= 24 * 60 {
        return Err("quote_time out of range".into());
    }

    Ok(OptionQuote {
        market,
        quote_date,
        expiry,
        strike,
        right,
        bid,
        ask,
        quote_time,
    })
}

/// Writes option quotes in the documented schema.
pub fn write_quotes(path: &Path, quotes: &[OptionQuote]) -> Result<(), MarketDataError> {
    let mut writer = csv_writer(path)?;
    writer
        .write_record(QUOTES_HEADER)
        .map_err(|e| csv_error(path, 0, e))?;
    for (i, q) in quotes.iter().enumerate() {
        writer
            .write_record(&[
                q.market.to_string(),
                q.quote_date.to_string(),
                q.expiry.to_string(),
                q.strike.to_string(),
                q.right.to_string(),
                q.bid.to_string(),
                q.ask.to_string(),
                q.quote_time.to_string(),
            ])
            .map_err(|e| csv_error(path, i as u64 + 1, e))?;
    }
    writer.flush().map_err(|e| io_error(path, e))?;
    Ok(())
}

/// Writes the rejects report (`row,reason`).
pub fn write_rejects(path: &Path, rejects: &[RejectedRow]) -> Result<(), MarketDataError> {
    let mut writer = csv_writer(path)?;
    writer
        .write_record(["row", "reason"])
        .map_err(|e| csv_error(path, 0, e))?;
    for r in rejects {
        writer
            .write_record(&[r.row.to_string(), r.reason.clone()])
            .map_err(|e| csv_error(path, r.row, e))?;
    }
    writer.flush().map_err(|e| io_error(path, e))?;
    Ok(())
}

/// Loads daily market rows from
/// `date,market,tr_index,vol_pct,ois_1y_pct,ois_10y_pct,nfci` CSV.
pub fn load_daily(path: &Path) -> Result<Vec<DailyMarketRow>, MarketDataError> {
    let mut reader = csv_reader(path)?;
    let mut rows = Vec::new();
    for (idx, result) in reader.deserialize::<DailyMarketRow>().enumerate() {
        let row = result.map_err(|e| csv_error(path, idx as u64 + 1, e))?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_daily(path: &Path, rows: &[DailyMarketRow]) -> Result<(), MarketDataError> {
    let mut writer = csv_writer(path)?;
    for row in rows {
        writer.serialize(row).map_err(|e| csv_error(path, 0, e))?;
    }
    writer.flush().map_err(|e| io_error(path, e))?;
    Ok(())
}

/// Intermediate paired-cell file, one row per surviving call–put pair.
pub fn write_pairs(
    path: &Path,
    cells: &BTreeMap<CellKey, Vec<PairedQuote>>,
) -> Result<(), MarketDataError> {
    let mut writer = csv_writer(path)?;
    for pairs in cells.values() {
        for pair in pairs {
            writer.serialize(pair).map_err(|e| csv_error(path, 0, e))?;
        }
    }
    writer.flush().map_err(|e| io_error(path, e))?;
    Ok(())
}

pub fn load_pairs(path: &Path) -> Result<BTreeMap<CellKey, Vec<PairedQuote>>, MarketDataError> {
    let mut reader = csv_reader(path)?;
    let mut cells: BTreeMap<CellKey, Vec<PairedQuote>> = BTreeMap::new();
    for (idx, result) in reader.deserialize::<PairedQuote>().enumerate() {
        let pair: PairedQuote = result.map_err(|e| csv_error(path, idx as u64 + 1, e))?;
        cells.entry(pair.cell_key()).or_default().push(pair);
    }
    for pairs in cells.values_mut() {
        pairs.sort_by(|a, b| a.strike.partial_cmp(&b.strike).unwrap());
    }
    Ok(cells)
}

/// Per-rule accounting of what happened to every input quote.
///
/// The counters partition the input exactly:
/// `after_snapshot + superseded + below_min_mid + excessive_spread +
/// unpaired + 2 * thin_cell_pairs + 2 * kept_pairs == input_quotes`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FilterAudit {
    pub input_quotes: usize,
    /// Quotes stamped after the snapshot time.
    pub after_snapshot: usize,
    /// Quotes at or before the snapshot that lost to a later one for the
    /// same contract (or to a later file row at the same minute).
    pub superseded: usize,
    pub below_min_mid: usize,
    pub excessive_spread: usize,
    /// Quotes that passed price filters but had no surviving counterpart.
    pub unpaired: usize,
    /// Pairs deleted because their cell had too few surviving strikes.
    pub thin_cell_pairs: usize,
    pub kept_pairs: usize,
}

/// Selects snapshot quotes, applies price filters, matches call–put pairs by
/// strike, and deletes thin cells. Total: never fails, every exclusion is
/// counted in the audit.
pub fn pair_and_filter(
    quotes: &[OptionQuote],
    cfg: &FilterConfig,
) -> (BTreeMap<CellKey, Vec<PairedQuote>>, FilterAudit) {
    let mut audit = FilterAudit {
        input_quotes: quotes.len(),
        ..FilterAudit::default()
    };

    // One quote per contract per day: nearest minute at or before the
    // snapshot, later file order winning ties at the same minute.
    type ContractKey = (Market, NaiveDate, NaiveDate, u64, OptionRight);
    let contract_key = |q: &OptionQuote| -> ContractKey {
        (
            q.market,
            q.quote_date,
            q.expiry,
            q.strike.to_bits(),
            q.right,
        )
    };
    let mut selected: BTreeMap<ContractKey, usize> = BTreeMap::new();
    for (idx, q) in quotes.iter().enumerate() {
        if q.quote_time > cfg.snapshot_time {
            audit.after_snapshot += 1;
            continue;
        }
        match selected.entry(contract_key(q)) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(idx);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let held = &quotes[*e.get()];
                if q.quote_time >= held.quote_time {
                    audit.superseded += 1;
                    e.insert(idx);
                } else {
                    audit.superseded += 1;
                }
            }
        }
    }

    // Price filters on the snapshot quotes.
    type StrikeKey = (Market, NaiveDate, NaiveDate, u64);
    let mut by_strike: BTreeMap<StrikeKey, (Option<usize>, Option<usize>)> = BTreeMap::new();
    for (&(market, date, expiry, strike_bits, right), &idx) in &selected {
        let q = &quotes[idx];
        if q.mid() < cfg.min_mid {
            audit.below_min_mid += 1;
            continue;
        }
        if q.relative_spread() > cfg.max_rel_spread {
            audit.excessive_spread += 1;
            continue;
        }
        let slot = by_strike
            .entry((market, date, expiry, strike_bits))
            .or_default();
        match right {
            OptionRight::Call => slot.0 = Some(idx),
            OptionRight::Put => slot.1 = Some(idx),
        }
    }

    // Pair survivors; leftovers are unpaired.
    let mut cells: BTreeMap<CellKey, Vec<PairedQuote>> = BTreeMap::new();
    for (_, (call, put)) in by_strike {
        match (call, put) {
            (Some(c), Some(p)) => {
                let pair = PairedQuote::from_quotes(&quotes[c], &quotes[p]);
                cells.entry(pair.cell_key()).or_default().push(pair);
            }
            (Some(_), None) | (None, Some(_)) => audit.unpaired += 1,
            (None, None) => {}
        }
    }

    // Delete cells with too few strikes; sort survivors by strike.
    cells.retain(|_, pairs| {
        if pairs.len() < cfg.min_strikes_per_cell {
            audit.thin_cell_pairs += pairs.len();
            false
        } else {
            pairs.sort_by(|a, b| a.strike.partial_cmp(&b.strike).unwrap());
            audit.kept_pairs += pairs.len();
            true
        }
    });

    (cells, audit)
}

pub(crate) fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>, MarketDataError> {
    let file = std::fs::File::open(path).map_err(|e| io_error(path, e))?;
    Ok(csv::ReaderBuilder::new().flexible(true).from_reader(file))
}

pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, MarketDataError> {
    let file = std::fs::File::create(path).map_err(|e| io_error(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn check_header(
    reader: &mut csv::Reader<std::fs::File>,
    path: &Path,
    expected: &[&str],
) -> Result<(), MarketDataError> {
    let headers = reader.headers().map_err(|e| csv_error(path, 0, e))?;
    let found: Vec<&str> = headers.iter().map(str::trim).collect();
    if found != expected {
        return Err(MarketDataError::SchemaMismatch {
            path: path.display().to_string(),
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(())
}

pub(crate) fn io_error(path: &Path, source: std::io::Error) -> MarketDataError {
    MarketDataError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub(crate) fn csv_error(path: &Path, row: u64, e: impl std::fmt::Display) -> MarketDataError {
    MarketDataError::Csv {
        path: path.display().to_string(),
        row,
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        s.parse().unwrap()
    }

    fn quote(strike: f64, right: OptionRight, bid: f64, ask: f64, time: u32) -> OptionQuote {
        OptionQuote {
            market: Market::Spx,
            quote_date: d("2024-03-01"),
            expiry: d("2024-09-20"),
            strike,
            right,
            bid,
            ask,
            quote_time: time,
        }
    }

    fn clean_pair_set(n: usize) -> Vec<OptionQuote> {
        let mut quotes = Vec::new();
        for i in 0..n {
            let k = 4000.0 + 100.0 * i as f64;
            quotes.push(quote(k, OptionRight::Call, 99.0, 101.0, 930));
            quotes.push(quote(k, OptionRight::Put, 49.0, 51.0, 930));
        }
        quotes
    }

    #[test]
    fn load_quotes_well_formed_and_rejects() {
        let dir = std::env::temp_dir().join(format!("carrygap_md_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("quotes.csv");
        std::fs::write(
            &path,
            "market,quote_date,expiry,strike,right,bid,ask,quote_time\n\
             SPX,2024-03-01,2024-09-20,4000,C,99.0,101.0,930\n\
             SPX,2024-03-01,2024-09-20,4000,P,51.0,49.0,930\n\
             SPX,2024-03-01,2024-09-20,4100,C,60.0,62.0,930\n\
             RUT,2024-03-01,2024-09-20,2000,C,10.0,11.0,930\n",
        )
        .unwrap();
        let load = load_quotes(&path, Market::Spx).unwrap();
        assert_eq!(load.quotes.len(), 2);
        assert_eq!(load.rejects.len(), 1);
        assert_eq!(load.rejects[0].row, 2);
        assert_eq!(load.rejects[0].reason, "crossed quote");
        assert_eq!(load.other_market, 1);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn load_quotes_empty_file_with_header() {
        let dir = std::env::temp_dir().join(format!("carrygap_md_empty_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("quotes.csv");
        std::fs::write(
            &path,
            "market,quote_date,expiry,strike,right,bid,ask,quote_time\n",
        )
        .unwrap();
        let load = load_quotes(&path, Market::Spx).unwrap();
        assert!(load.quotes.is_empty());
        assert!(load.rejects.is_empty());
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn load_quotes_schema_mismatch() {
        let dir = std::env::temp_dir().join(format!("carrygap_md_schema_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("quotes.csv");
        std::fs::write(&path, "a,b,c\n1,2,3\n").unwrap();
        assert!(matches!(
            load_quotes(&path, Market::Spx),
            Err(MarketDataError::SchemaMismatch { .. })
        ));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn load_quotes_missing_file() {
        let err = load_quotes(Path::new("/nonexistent/quotes.csv"), Market::Spx).unwrap_err();
        assert!(matches!(err, MarketDataError::Io { .. }));
    }

    #[test]
    fn five_clean_strikes_form_one_cell() {
        let quotes = clean_pair_set(5);
        let (cells, audit) = pair_and_filter(&quotes, &FilterConfig::default());
        assert_eq!(cells.len(), 1);
        let pairs = cells.values().next().unwrap();
        assert_eq!(pairs.len(), 5);
        assert_eq!(audit.kept_pairs, 5);
        assert_eq!(audit.input_quotes, 10);
        // Pairs sorted by strike.
        for w in pairs.windows(2) {
            assert!(w[0].strike < w[1].strike);
        }
    }

    #[test]
    fn low_mid_put_excludes_its_strike() {
        let mut quotes = clean_pair_set(6);
        // Put at strike 4000 drops below min_mid.
        quotes[1].bid = 0.0;
        quotes[1].ask = 0.05;
        let (cells, audit) = pair_and_filter(&quotes, &FilterConfig::default());
        let pairs = cells.values().next().unwrap();
        assert_eq!(pairs.len(), 5);
        assert_eq!(audit.below_min_mid, 1);
        assert_eq!(audit.unpaired, 1); // the orphaned call
        assert!(pairs.iter().all(|p| p.strike != 4000.0));
    }

    #[test]
    fn thin_cell_is_deleted() {
        let quotes = clean_pair_set(4); // below default min of 5
        let (cells, audit) = pair_and_filter(&quotes, &FilterConfig::default());
        assert!(cells.is_empty());
        assert_eq!(audit.thin_cell_pairs, 4);
    }

    #[test]
    fn snapshot_picks_nearest_at_or_before() {
        let mut quotes = Vec::new();
        for k in [4000.0, 4100.0, 4200.0, 4300.0, 4400.0] {
            // Early quote, snapshot-time quote, and a later one to ignore.
            quotes.push(quote(k, OptionRight::Call, 90.0, 92.0, 900));
            quotes.push(quote(k, OptionRight::Call, 99.0, 101.0, 945));
            quotes.push(quote(k, OptionRight::Call, 110.0, 112.0, 1000));
            quotes.push(quote(k, OptionRight::Put, 49.0, 51.0, 945));
        }
        let (cells, audit) = pair_and_filter(&quotes, &FilterConfig::default());
        let pairs = cells.values().next().unwrap();
        assert_eq!(pairs.len(), 5);
        for p in pairs {
            assert!((p.call_mid - 100.0).abs() < 1e-12); // the 945 quote
        }
        assert_eq!(audit.after_snapshot, 5);
        assert_eq!(audit.superseded, 5);
    }

    #[test]
    fn duplicate_minute_keeps_last_in_file_order() {
        let mut quotes = clean_pair_set(5);
        // Re-quote the 4000 call at the same minute with a different price.
        let mut dup = quotes[0].clone();
        dup.bid = 89.0;
        dup.ask = 91.0;
        quotes.push(dup);
        let (cells, _) = pair_and_filter(&quotes, &FilterConfig::default());
        let pairs = cells.values().next().unwrap();
        let p4000 = pairs.iter().find(|p| p.strike == 4000.0).unwrap();
        assert!((p4000.call_mid - 90.0).abs() < 1e-12);
    }

    #[test]
    fn audit_partitions_input_exactly() {
        let mut quotes = clean_pair_set(6);
        quotes[1].bid = 0.0;
        quotes[1].ask = 0.05; // below min_mid
        quotes[3].bid = 1.0;
        quotes[3].ask = 40.0; // excessive spread
        quotes.push(quote(9000.0, OptionRight::Call, 1.0, 1.2, 1200)); // after snapshot
        let (_, audit) = pair_and_filter(&quotes, &FilterConfig::default());
        let accounted = audit.after_snapshot
            + audit.superseded
            + audit.below_min_mid
            + audit.excessive_spread
            + audit.unpaired
            + 2 * audit.thin_cell_pairs
            + 2 * audit.kept_pairs;
        assert_eq!(accounted, audit.input_quotes);
    }

    #[test]
    fn pairing_is_order_invariant() {
        let mut quotes = clean_pair_set(7);
        let (cells_fwd, _) = pair_and_filter(&quotes, &FilterConfig::default());
        quotes.reverse();
        let (cells_rev, _) = pair_and_filter(&quotes, &FilterConfig::default());
        assert_eq!(cells_fwd, cells_rev);
    }

    #[test]
    fn no_pair_mixes_strikes_or_expiries() {
        let mut quotes = clean_pair_set(5);
        let mut other_expiry = clean_pair_set(5);
        for q in &mut other_expiry {
            q.expiry = d("2024-12-20");
        }
        quotes.extend(other_expiry);
        let (cells, _) = pair_and_filter(&quotes, &FilterConfig::default());
        assert_eq!(cells.len(), 2);
        for (key, pairs) in &cells {
            for p in pairs {
                assert_eq!(p.expiry, key.expiry);
                assert_eq!(p.quote_date, key.quote_date);
            }
        }
    }
}
