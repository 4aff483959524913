//! CSV readers for curves, schedules, vol strips and surfaces, histories,
//! quotes and instrument lists. Every row error names file, line and column.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;

use crate::calibration::{SmileQuote, VanillaQuote, VanillaVolStrip, VolSurface};
use crate::error::{CurveError, Result};
use crate::pricing::{CallPut, OptionKind, Quote, QuoteSet};
use crate::termstructure::{year_fraction, ContractSchedule, ForwardCurve};

/// A parsed CSV file: optional `# as_of:` date, header and data rows with
/// their 1-based file line numbers.
#[derive(Debug, Clone)]
pub struct CsvTable {
    pub path: PathBuf,
    pub as_of: Option<NaiveDate>,
    pub headers: Vec<String>,
    pub rows: Vec<(u64, Vec<String>)>,
}

fn parse_error(path: &Path, line: u64, column: &str, message: impl Into<String>) -> CurveError {
    CurveError::Parse {
        file: path.to_path_buf(),
        line,
        column: column.to_string(),
        message: message.into(),
    }
}

impl CsvTable {
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CurveError::io(path, e))?;
        CsvTable::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut as_of = None;
        for (i, line) in text.lines().enumerate() {
            let Some(comment) = line.trim_start().strip_prefix('#') else {
                continue;
            };
            if let Some(value) = comment.trim().strip_prefix("as_of:") {
                let d = NaiveDate::parse_from_str(value.trim(), "%Y-%m-%d")
                    .map_err(|e| parse_error(path, i as u64 + 1, "as_of", e.to_string()))?;
                as_of = Some(d);
            }
        }
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| parse_error(path, 1, "header", e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                parse_error(path, line, "row", e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.iter().all(str::is_empty) {
                continue;
            }
            if rec.len() != headers.len() {
                return Err(parse_error(
                    path,
                    line,
                    "row",
                    format!("{} fields, header has {}", rec.len(), headers.len()),
                ));
            }
            rows.push((line, rec.iter().map(str::to_string).collect()));
        }
        Ok(CsvTable {
            path: path.to_path_buf(),
            as_of,
            headers,
            rows,
        })
    }

    /// Index of every required column, in order.
    pub fn require(&self, names: &[&str]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.headers
                    .iter()
                    .position(|h| h == n)
                    .ok_or_else(|| parse_error(&self.path, 1, n, "required column missing"))
            })
            .collect()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    pub fn as_of_required(&self) -> Result<NaiveDate> {
        self.as_of
            .ok_or_else(|| parse_error(&self.path, 1, "as_of", "file needs a `# as_of: YYYY-MM-DD` line"))
    }

    pub fn error(&self, line: u64, column: usize, message: impl Into<String>) -> CurveError {
        parse_error(&self.path, line, &self.headers[column], message)
    }

    /// Parses one cell.
    pub fn cell<T: FromStr>(&self, line: u64, row: &[String], column: usize) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        row[column]
            .parse()
            .map_err(|e: T::Err| self.error(line, column, format!("`{}`: {e}", row[column])))
    }

    /// An empty cell reads as `None`.
    pub fn optional<T: FromStr>(&self, line: u64, row: &[String], column: usize) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if row[column].is_empty() {
            Ok(None)
        } else {
            self.cell(line, row, column).map(Some)
        }
    }

    /// Attaches file and line to a validation failure of an already parsed row.
    pub fn invalid(&self, line: u64, column: usize, err: CurveError) -> CurveError {
        self.error(line, column, err.to_string())
    }
}

/// `expiry_date,price`, valued at the file's `as_of` date.
pub fn read_curve(path: &Path) -> Result<ForwardCurve> {
    let t = CsvTable::read(path)?;
    let as_of = t.as_of_required()?;
    let c = t.require(&["expiry_date", "price"])?;
    let mut points = Vec::with_capacity(t.rows.len());
    for (line, row) in &t.rows {
        let date: NaiveDate = t.cell(*line, row, c[0])?;
        let price: f64 = t.cell(*line, row, c[1])?;
        if !(price.is_finite() && price > 0.0) {
            return Err(t.error(*line, c[1], format!("price {price} must be > 0")));
        }
        let years = year_fraction(as_of, date).map_err(|e| t.invalid(*line, c[0], e))?;
        if years.years() == 0.0 {
            return Err(t.error(*line, c[0], "expiry must fall after the as_of date"));
        }
        points.push((years.years(), price));
    }
    ForwardCurve::new(as_of, points).map_err(|e| t.invalid(t.rows.first().map_or(1, |r| r.0), c[0], e))
}

fn read_dates(t: &CsvTable, cols: &[usize]) -> Result<Vec<(String, NaiveDate, NaiveDate)>> {
    t.rows
        .iter()
        .map(|(line, row)| {
            let opt: NaiveDate = t.cell(*line, row, cols[1])?;
            let fut: NaiveDate = t.cell(*line, row, cols[2])?;
            if opt > fut {
                return Err(t.error(*line, cols[1], "option expiry after futures expiry"));
            }
            Ok((row[cols[0]].clone(), opt, fut))
        })
        .collect()
}

/// `label,option_expiry,futures_expiry`.
pub fn read_schedule(path: &Path) -> Result<ContractSchedule> {
    let t = CsvTable::read(path)?;
    let as_of = t.as_of_required()?;
    let c = t.require(&["label", "option_expiry", "futures_expiry"])?;
    ContractSchedule::from_dates(as_of, &read_dates(&t, &c)?).map_err(|e| t.invalid(1, c[0], e))
}

/// ATM strip plus, when the `qd*` columns are present, the smile surface.
#[derive(Debug, Clone)]
pub struct VolData {
    pub strip: VanillaVolStrip,
    pub surface: Option<VolSurface>,
}

const SMILE_COLUMNS: [(&str, f64); 5] = [("qd10", 0.10), ("qd25", 0.25), ("qd50", 0.50), ("qd75", 0.75), ("qd90", 0.90)];

/// `label,option_expiry,futures_expiry,atm_vol[,qd10,qd25,qd50,qd75,qd90]`.
pub fn read_vols(path: &Path) -> Result<VolData> {
    let t = CsvTable::read(path)?;
    let as_of = t.as_of_required()?;
    let c = t.require(&["label", "option_expiry", "futures_expiry", "atm_vol"])?;
    let smile_cols: Vec<(usize, f64)> = SMILE_COLUMNS
        .iter()
        .filter_map(|(name, qd)| t.column(name).map(|i| (i, *qd)))
        .collect();
    let dates = read_dates(&t, &c)?;
    let mut quotes = Vec::with_capacity(dates.len());
    let mut smiles = Vec::with_capacity(dates.len());
    for ((line, row), (label, opt, fut)) in t.rows.iter().zip(dates) {
        let vol: f64 = t.cell(*line, row, c[3])?;
        if !(vol.is_finite() && vol > 0.0) {
            return Err(t.error(*line, c[3], format!("vol {vol} must be > 0")));
        }
        let option_expiry = year_fraction(as_of, opt).map_err(|e| t.invalid(*line, c[1], e))?;
        let futures_expiry = year_fraction(as_of, fut).map_err(|e| t.invalid(*line, c[2], e))?;
        let mut pillars = Vec::with_capacity(smile_cols.len());
        for &(col, qd) in &smile_cols {
            let v: f64 = t.cell(*line, row, col)?;
            if !(v.is_finite() && v > 0.0) {
                return Err(t.error(*line, col, format!("vol {v} must be > 0")));
            }
            pillars.push((qd, v));
        }
        quotes.push(VanillaQuote {
            label: label.clone(),
            option_expiry,
            futures_expiry,
            implied_vol: vol,
        });
        smiles.push(SmileQuote {
            label,
            option_expiry,
            futures_expiry,
            atm_vol: vol,
            pillars,
        });
    }
    let strip = VanillaVolStrip::new(quotes).map_err(|e| t.invalid(1, c[0], e))?;
    let surface = if smile_cols.is_empty() {
        None
    } else {
        Some(VolSurface::new(smiles).map_err(|e| t.invalid(1, smile_cols[0].0, e))?)
    };
    Ok(VolData { strip, surface })
}

/// Constant-nearby settlement prices, `date,nearby_1,…,nearby_K`. Empty
/// cells are missing prices (the row is dropped when returns are formed).
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryPanel {
    pub dates: Vec<NaiveDate>,
    pub tenors: Vec<usize>,
    pub prices: Vec<Vec<f64>>,
}

pub fn read_history(path: &Path) -> Result<HistoryPanel> {
    let t = CsvTable::read(path)?;
    let c = t.require(&["date"])?;
    let mut tenors = Vec::new();
    let mut cols = Vec::new();
    for (i, h) in t.headers.iter().enumerate() {
        if let Some(k) = h.strip_prefix("nearby_") {
            let k: usize = k
                .parse()
                .map_err(|_| parse_error(&t.path, 1, h, "nearby columns are `nearby_<n>`"))?;
            tenors.push(k);
            cols.push(i);
        }
    }
    if cols.is_empty() {
        return Err(parse_error(&t.path, 1, "nearby_1", "no nearby columns"));
    }
    let mut dates = Vec::with_capacity(t.rows.len());
    let mut prices = Vec::with_capacity(t.rows.len());
    for (line, row) in &t.rows {
        let d: NaiveDate = t.cell(*line, row, c[0])?;
        if dates.last().is_some_and(|p| *p >= d) {
            return Err(t.error(*line, c[0], "dates must be strictly increasing"));
        }
        let mut p = Vec::with_capacity(cols.len());
        for &col in &cols {
            let v: Option<f64> = t.optional(*line, row, col)?;
            if let Some(x) = v {
                if !(x.is_finite() && x > 0.0) {
                    return Err(t.error(*line, col, format!("price {x} must be > 0")));
                }
            }
            p.push(v.unwrap_or(f64::NAN));
        }
        dates.push(d);
        prices.push(p);
    }
    Ok(HistoryPanel { dates, tenors, prices })
}

/// `label,quote_date,ref_swap,bid,offer,consensus`; all prices optional.
pub fn read_quotes(path: &Path) -> Result<QuoteSet> {
    let t = CsvTable::read(path)?;
    let c = t.require(&["label", "quote_date", "ref_swap", "bid", "offer", "consensus"])?;
    let mut quotes = Vec::with_capacity(t.rows.len());
    for (line, row) in &t.rows {
        let q = Quote {
            label: row[c[0]].clone(),
            quote_date: t.cell(*line, row, c[1])?,
            ref_swap: t.optional(*line, row, c[2])?,
            bid: t.optional(*line, row, c[3])?,
            offer: t.optional(*line, row, c[4])?,
            consensus: t.optional(*line, row, c[5])?,
        };
        if let (Some(b), Some(o)) = (q.bid, q.offer) {
            if b > o {
                return Err(t.error(*line, c[3], format!("bid {b} above offer {o}")));
            }
        }
        quotes.push(q);
    }
    QuoteSet::new(quotes)
}

/// Strike of an instrument row: a number or `ATM` (the matched forward).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrikeSpec {
    Atm,
    Fixed(f64),
}

impl FromStr for StrikeSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("atm") {
            return Ok(StrikeSpec::Atm);
        }
        let k: f64 = s.parse().map_err(|e| format!("{e}"))?;
        if k.is_finite() && k >= 0.0 {
            Ok(StrikeSpec::Fixed(k))
        } else {
            Err(format!("strike {k} must be >= 0"))
        }
    }
}

/// One row of an instrument list, with dates still unresolved.
#[derive(Debug, Clone, PartialEq)]
pub struct InstrumentRow {
    pub line: u64,
    pub label: String,
    /// Unparsed so an unknown kind becomes a per-row diagnostic.
    pub kind: String,
    pub call_put: CallPut,
    pub strike: StrikeSpec,
    pub expiry: NaiveDate,
    /// Contract labels from the schedule, one per fixing.
    pub contracts: Vec<String>,
    /// Fixing dates; empty means every fixing is at `expiry`.
    pub sample_dates: Vec<NaiveDate>,
    /// Undiscounted weights; empty means equal weights summing to 1.
    pub weights: Vec<f64>,
    /// Per-fixing discount factors; empty means 1.
    pub discounts: Vec<f64>,
    pub settlement_discount: f64,
}

impl InstrumentRow {
    pub fn option_kind(&self) -> Result<OptionKind> {
        self.kind.parse()
    }
}

fn split_list<T: FromStr>(t: &CsvTable, line: u64, row: &[String], col: Option<usize>) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let Some(col) = col else {
        return Ok(Vec::new());
    };
    if row[col].is_empty() {
        return Ok(Vec::new());
    }
    row[col]
        .split(';')
        .map(|s| s.trim().parse().map_err(|e: T::Err| t.error(line, col, format!("`{s}`: {e}"))))
        .collect()
}

/// `label,kind,call_put,strike,expiry,contracts[,sample_dates,weights,discounts,settlement_discount]`
/// with `;`-separated lists.
pub fn read_instruments(path: &Path) -> Result<Vec<InstrumentRow>> {
    let t = CsvTable::read(path)?;
    let c = t.require(&["label", "kind", "call_put", "strike", "expiry", "contracts"])?;
    let (sd, w, d, s) = (
        t.column("sample_dates"),
        t.column("weights"),
        t.column("discounts"),
        t.column("settlement_discount"),
    );
    let mut out = Vec::with_capacity(t.rows.len());
    for (line, row) in &t.rows {
        let contracts: Vec<String> = split_list(&t, *line, row, Some(c[5]))?;
        if contracts.is_empty() {
            return Err(t.error(*line, c[5], "at least one contract is required"));
        }
        let sample_dates: Vec<NaiveDate> = split_list(&t, *line, row, sd)?;
        let weights: Vec<f64> = split_list(&t, *line, row, w)?;
        let discounts: Vec<f64> = split_list(&t, *line, row, d)?;
        for (list, col) in [(sample_dates.len(), sd), (weights.len(), w), (discounts.len(), d)] {
            if list != 0 && list != contracts.len() {
                let col = col.expect("non-empty list has a column");
                return Err(t.error(*line, col, format!("{list} entries for {} contracts", contracts.len())));
            }
        }
        let settlement_discount = match s {
            Some(col) => t.optional(*line, row, col)?.unwrap_or(1.0),
            None => 1.0,
        };
        out.push(InstrumentRow {
            line: *line,
            label: row[c[0]].clone(),
            kind: row[c[1]].clone(),
            call_put: t.cell(*line, row, c[2])?,
            strike: t.cell(*line, row, c[3])?,
            expiry: t.cell(*line, row, c[4])?,
            contracts,
            sample_dates,
            weights,
            discounts,
            settlement_discount,
        });
    }
    Ok(out)
}

/// Distinct `as_of` dates seen across files, for the consistency warning.
pub(crate) fn as_of_dates<'a>(tables: impl Iterator<Item = &'a Option<NaiveDate>>) -> HashMap<NaiveDate, usize> {
    let mut seen = HashMap::new();
    for d in tables.flatten() {
        *seen.entry(*d).or_insert(0) += 1;
    }
    seen
}
