//! Calendar arithmetic, contract schedules, forward curves and the
//! piecewise-constant time functions shared by calibration, pricing and
//! simulation.
//!
//! All times are ACT/365 year fractions measured from the valuation date.

use std::collections::HashSet;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{CurveError, Result};

const DAYS_PER_YEAR: f64 = 365.0;

/// A year fraction from the valuation date. Finite and non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct TimePoint(f64);

impl TimePoint {
    pub const ZERO: TimePoint = TimePoint(0.0);

    pub fn new(years: f64) -> Result<Self> {
        if !years.is_finite() || years < 0.0 {
            return Err(CurveError::Domain(format!(
                "time point must be finite and non-negative, got {years}"
            )));
        }
        Ok(TimePoint(years))
    }

    pub fn years(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for TimePoint {
    type Error = CurveError;

    fn try_from(value: f64) -> Result<Self> {
        TimePoint::new(value)
    }
}

impl From<TimePoint> for f64 {
    fn from(t: TimePoint) -> f64 {
        t.0
    }
}

/// Whole calendar days from `d1` to `d2` (exact, additive).
pub fn days_between(d1: NaiveDate, d2: NaiveDate) -> Result<i64> {
    if d2 < d1 {
        return Err(CurveError::Ordering(format!("{d2} precedes {d1}")));
    }
    Ok((d2 - d1).num_days())
}

/// ACT/365 year fraction between two dates.
pub fn year_fraction(d1: NaiveDate, d2: NaiveDate) -> Result<TimePoint> {
    let days = days_between(d1, d2)?;
    Ok(TimePoint(days as f64 / DAYS_PER_YEAR))
}

/// One listed contract: its option expiry `t_M` and futures expiry `T_M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractEntry {
    pub label: String,
    pub option_expiry: TimePoint,
    pub futures_expiry: TimePoint,
}

impl ContractEntry {
    pub fn new(label: impl Into<String>, option_expiry: f64, futures_expiry: f64) -> Result<Self> {
        Ok(ContractEntry {
            label: label.into(),
            option_expiry: TimePoint::new(option_expiry)?,
            futures_expiry: TimePoint::new(futures_expiry)?,
        })
    }
}

/// Contracts ordered by strictly increasing option expiry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ContractEntry>", into = "Vec<ContractEntry>")]
pub struct ContractSchedule {
    entries: Vec<ContractEntry>,
}

impl ContractSchedule {
    pub fn new(entries: Vec<ContractEntry>) -> Result<Self> {
        let mut labels = HashSet::new();
        for (k, e) in entries.iter().enumerate() {
            if e.option_expiry > e.futures_expiry {
                return Err(CurveError::Ordering(format!(
                    "contract {}: option expiry {} after futures expiry {}",
                    e.label,
                    e.option_expiry.years(),
                    e.futures_expiry.years()
                )));
            }
            if k > 0 && e.option_expiry <= entries[k - 1].option_expiry {
                return Err(CurveError::Ordering(format!(
                    "contract {}: option expiries must be strictly increasing",
                    e.label
                )));
            }
            if !labels.insert(e.label.as_str()) {
                return Err(CurveError::InvalidSpec(format!("duplicate contract label {}", e.label)));
            }
        }
        Ok(ContractSchedule { entries })
    }

    /// Builds a schedule from calendar dates relative to `valuation_date`.
    pub fn from_dates(
        valuation_date: NaiveDate,
        rows: &[(String, NaiveDate, NaiveDate)],
    ) -> Result<Self> {
        let entries = rows
            .iter()
            .map(|(label, opt, fut)| {
                Ok(ContractEntry {
                    label: label.clone(),
                    option_expiry: year_fraction(valuation_date, *opt)?,
                    futures_expiry: year_fraction(valuation_date, *fut)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ContractSchedule::new(entries)
    }

    pub fn entries(&self) -> &[ContractEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&ContractEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.label == label)
    }

    pub fn option_expiries(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.option_expiry.years()).collect()
    }
}

impl TryFrom<Vec<ContractEntry>> for ContractSchedule {
    type Error = CurveError;

    fn try_from(entries: Vec<ContractEntry>) -> Result<Self> {
        ContractSchedule::new(entries)
    }
}

impl From<ContractSchedule> for Vec<ContractEntry> {
    fn from(s: ContractSchedule) -> Self {
        s.entries
    }
}

/// The `n`-th (1-based) contract whose futures expiry lies strictly after `t`.
pub fn nearby_expiry(schedule: &ContractSchedule, t: TimePoint, n: usize) -> Result<&ContractEntry> {
    if n == 0 {
        return Err(CurveError::OutOfRange("nearby index is 1-based".into()));
    }
    schedule
        .entries
        .iter()
        .filter(|e| e.futures_expiry > t)
        .nth(n - 1)
        .ok_or_else(|| {
            CurveError::OutOfRange(format!(
                "fewer than {n} live contracts after t = {}",
                t.years()
            ))
        })
}

/// How an `n`-th nearby tenor is turned into an expiry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NearbyConvention {
    /// Look the contract up in the schedule.
    #[default]
    Schedule,
    /// Use `T = t + n/12`.
    Continuous,
}

/// Futures expiry of the `n`-th nearby contract seen from `t`.
pub fn nearby_tenor(
    schedule: &ContractSchedule,
    t: TimePoint,
    n: usize,
    convention: NearbyConvention,
) -> Result<TimePoint> {
    match convention {
        NearbyConvention::Schedule => Ok(nearby_expiry(schedule, t, n)?.futures_expiry),
        NearbyConvention::Continuous => TimePoint::new(t.years() + n as f64 / 12.0),
    }
}

/// Today's futures prices indexed by futures expiry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardCurve {
    pub valuation_date: NaiveDate,
    points: Vec<(f64, f64)>,
}

impl ForwardCurve {
    /// `points` are `(expiry in years, price)` pairs.
    pub fn new(valuation_date: NaiveDate, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(CurveError::MissingData("forward curve has no points".into()));
        }
        for (k, &(t, f)) in points.iter().enumerate() {
            TimePoint::new(t)?;
            if !(f.is_finite() && f > 0.0) {
                return Err(CurveError::Domain(format!(
                    "forward price at T = {t} must be positive, got {f}"
                )));
            }
            if k > 0 && t <= points[k - 1].0 {
                return Err(CurveError::Ordering(
                    "forward curve expiries must be strictly increasing".into(),
                ));
            }
        }
        Ok(ForwardCurve {
            valuation_date,
            points,
        })
    }

    pub fn from_dates(valuation_date: NaiveDate, rows: &[(NaiveDate, f64)]) -> Result<Self> {
        let points = rows
            .iter()
            .map(|&(d, f)| Ok((year_fraction(valuation_date, d)?.years(), f)))
            .collect::<Result<Vec<_>>>()?;
        ForwardCurve::new(valuation_date, points)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// `F^T(0)`, linear in log-price between curve points.
    pub fn price(&self, expiry: f64) -> Result<f64> {
        let idx = self.points.partition_point(|&(t, _)| t < expiry);
        if let Some(&(t, f)) = self.points.get(idx) {
            if t == expiry {
                return Ok(f);
            }
        }
        if idx == 0 || idx == self.points.len() {
            return Err(CurveError::MissingData(format!(
                "expiry {expiry} outside forward curve range [{}, {}]",
                self.points[0].0,
                self.points[self.points.len() - 1].0
            )));
        }
        let (t0, f0) = self.points[idx - 1];
        let (t1, f1) = self.points[idx];
        let w = (expiry - t0) / (t1 - t0);
        Ok((f0.ln() * (1.0 - w) + f1.ln() * w).exp())
    }
}

/// A right-continuous step function of time.
///
/// `values[k]` applies on `[breakpoints[k-1], breakpoints[k])`, with
/// `breakpoints[-1] = -inf` and the last value extending to `+inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepData", into = "StepData")]
pub struct PiecewiseConstant {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct StepData {
    #[serde(default)]
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<StepData> for PiecewiseConstant {
    type Error = CurveError;

    fn try_from(d: StepData) -> Result<Self> {
        PiecewiseConstant::new(d.breakpoints, d.values)
    }
}

impl From<PiecewiseConstant> for StepData {
    fn from(p: PiecewiseConstant) -> Self {
        StepData {
            breakpoints: p.breakpoints,
            values: p.values,
        }
    }
}

impl PiecewiseConstant {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breakpoints.len() + 1 {
            return Err(CurveError::Shape(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                values.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CurveError::Ordering("breakpoints must be strictly increasing".into()));
        }
        if values.iter().chain(&breakpoints).any(|v| !v.is_finite()) {
            return Err(CurveError::Domain("non-finite step function entry".into()));
        }
        Ok(PiecewiseConstant { breakpoints, values })
    }

    pub fn constant(value: f64) -> Self {
        PiecewiseConstant {
            breakpoints: Vec::new(),
            values: vec![value],
        }
    }

    /// Values `v_k` on `[t_{k-1}, t_k)` for knot times `t_1 < ... < t_n`,
    /// the last value extended beyond `t_n`.
    pub fn from_knots(knot_times: &[f64], values: Vec<f64>) -> Result<Self> {
        if knot_times.len() != values.len() || values.is_empty() {
            return Err(CurveError::Shape(format!(
                "{} knot times vs {} values",
                knot_times.len(),
                values.len()
            )));
        }
        PiecewiseConstant::new(knot_times[..knot_times.len() - 1].to_vec(), values)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, s: f64) -> f64 {
        let idx = self.breakpoints.partition_point(|&b| b <= s);
        self.values[idx]
    }

    /// Breakpoints lying strictly inside `(a, b)`.
    pub fn breakpoints_within(&self, a: f64, b: f64) -> impl Iterator<Item = f64> + '_ {
        self.breakpoints.iter().copied().filter(move |&k| k > a && k < b)
    }

    /// `∫_a^b f(s)^2 ds`.
    pub fn integral_of_square(&self, a: f64, b: f64) -> f64 {
        let mut cuts: Vec<f64> = std::iter::once(a)
            .chain(self.breakpoints_within(a, b))
            .chain(std::iter::once(b))
            .collect();
        cuts.dedup();
        cuts.windows(2)
            .map(|w| {
                let v = self.value_at(w[0]);
                v * v * (w[1] - w[0])
            })
            .sum()
    }

    /// `∫_a^b f(s) ds`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let mut cuts: Vec<f64> = std::iter::once(a)
            .chain(self.breakpoints_within(a, b))
            .chain(std::iter::once(b))
            .collect();
        cuts.dedup();
        cuts.windows(2).map(|w| self.value_at(w[0]) * (w[1] - w[0])).sum()
    }
}

/// Sorted union of the breakpoints of two step functions inside `(a, b)`,
/// bracketed by `a` and `b`.
pub(crate) fn merged_cuts(f: &PiecewiseConstant, g: &PiecewiseConstant, a: f64, b: f64) -> Vec<f64> {
    let mut cuts: Vec<f64> = std::iter::once(a)
        .chain(f.breakpoints_within(a, b))
        .chain(g.breakpoints_within(a, b))
        .chain(std::iter::once(b))
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite cut"));
    cuts.dedup();
    cuts
}
