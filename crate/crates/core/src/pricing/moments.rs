//! Vanilla, Asian and swaption pricing. Strip averages are approximated as
//! lognormal with the first two moments matched exactly.

use serde::{Deserialize, Serialize};

use crate::error::{CurveError, Result};
use crate::factor_model::{log_covariance, quadratic_variation, CalibratedModel};
use crate::pricing::black::{black_price_from_variance, CallPut};
use crate::termstructure::{ForwardCurve, TimePoint};

/// One fixing of an average: the contract `T_k` observed at `t_k` with weight
/// `u_k d_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub sample_date: TimePoint,
    pub contract_expiry: TimePoint,
    pub undiscounted_weight: f64,
    pub discount_factor: f64,
}

impl SampleEntry {
    pub fn new(sample_date: f64, contract_expiry: f64, weight: f64, discount: f64) -> Result<Self> {
        Ok(SampleEntry {
            sample_date: TimePoint::new(sample_date)?,
            contract_expiry: TimePoint::new(contract_expiry)?,
            undiscounted_weight: weight,
            discount_factor: discount,
        })
    }

    pub fn weight(&self) -> f64 {
        self.undiscounted_weight * self.discount_factor
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<SampleEntry>", into = "Vec<SampleEntry>")]
pub struct SamplingSchedule {
    entries: Vec<SampleEntry>,
}

impl SamplingSchedule {
    pub fn new(entries: Vec<SampleEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(CurveError::DegenerateSchedule("sampling schedule is empty".into()));
        }
        for e in &entries {
            if e.sample_date > e.contract_expiry {
                return Err(CurveError::Ordering(format!(
                    "sample at {} after contract expiry {}",
                    e.sample_date.years(),
                    e.contract_expiry.years()
                )));
            }
            if !(e.undiscounted_weight.is_finite() && e.undiscounted_weight >= 0.0) {
                return Err(CurveError::Domain(format!(
                    "sample weight {} must be >= 0",
                    e.undiscounted_weight
                )));
            }
            if !(e.discount_factor > 0.0 && e.discount_factor <= 1.0) {
                return Err(CurveError::Domain(format!(
                    "discount factor {} outside (0, 1]",
                    e.discount_factor
                )));
            }
        }
        if entries.iter().all(|e| e.undiscounted_weight == 0.0) {
            return Err(CurveError::DegenerateSchedule("all sampling weights are zero".into()));
        }
        Ok(SamplingSchedule { entries })
    }

    /// A single fixing of contract `expiry` at `t` with unit weight.
    pub fn single(t: f64, expiry: f64) -> Result<Self> {
        SamplingSchedule::new(vec![SampleEntry::new(t, expiry, 1.0, 1.0)?])
    }

    /// Swaption strip: every contract observed at `expiry` with weights `u_k d_k`.
    pub fn swaption(expiry: f64, contracts: &[(f64, f64, f64)]) -> Result<Self> {
        SamplingSchedule::new(
            contracts
                .iter()
                .map(|&(big_t, u, d)| SampleEntry::new(expiry, big_t, u, d))
                .collect::<Result<_>>()?,
        )
    }

    pub fn entries(&self) -> &[SampleEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.entries.iter().map(SampleEntry::weight).collect()
    }

    pub fn last_sample(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.sample_date.years())
            .fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<SampleEntry>> for SamplingSchedule {
    type Error = CurveError;

    fn try_from(entries: Vec<SampleEntry>) -> Result<Self> {
        SamplingSchedule::new(entries)
    }
}

impl From<SamplingSchedule> for Vec<SampleEntry> {
    fn from(s: SamplingSchedule) -> Self {
        s.entries
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Vanilla,
    Asian,
    Swaption,
}

impl std::str::FromStr for OptionKind {
    type Err = CurveError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vanilla" => Ok(OptionKind::Vanilla),
            "asian" => Ok(OptionKind::Asian),
            "swaption" => Ok(OptionKind::Swaption),
            other => Err(CurveError::Unsupported(format!("instrument kind {other}"))),
        }
    }
}

/// A European option on a weighted strip of futures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub kind: OptionKind,
    pub strike: f64,
    pub call_put: CallPut,
    pub expiry: TimePoint,
    pub schedule: SamplingSchedule,
    pub settlement_discount: f64,
}

impl OptionSpec {
    pub fn new(
        kind: OptionKind,
        strike: f64,
        call_put: CallPut,
        expiry: f64,
        schedule: SamplingSchedule,
        settlement_discount: f64,
    ) -> Result<Self> {
        let expiry = TimePoint::new(expiry)?;
        if !(strike.is_finite() && strike >= 0.0) {
            return Err(CurveError::Domain(format!("strike {strike} must be >= 0")));
        }
        if !(settlement_discount > 0.0 && settlement_discount <= 1.0) {
            return Err(CurveError::Domain(format!(
                "settlement discount {settlement_discount} outside (0, 1]"
            )));
        }
        match kind {
            OptionKind::Vanilla => {
                if schedule.len() != 1 || schedule.entries()[0].sample_date != expiry {
                    return Err(CurveError::InvalidSpec(
                        "a vanilla has exactly one fixing, at expiry".into(),
                    ));
                }
            }
            OptionKind::Swaption => {
                if schedule.entries().iter().any(|e| e.sample_date != expiry) {
                    return Err(CurveError::InvalidSpec(
                        "every swaption fixing must fall on the expiry date".into(),
                    ));
                }
            }
            OptionKind::Asian => {
                if schedule.last_sample() > expiry.years() {
                    return Err(CurveError::Ordering(format!(
                        "Asian fixing at {} after expiry {}",
                        schedule.last_sample(),
                        expiry.years()
                    )));
                }
            }
        }
        Ok(OptionSpec {
            kind,
            strike,
            call_put,
            expiry,
            schedule,
            settlement_discount,
        })
    }

    pub fn vanilla(strike: f64, call_put: CallPut, expiry: f64, contract_expiry: f64, df: f64) -> Result<Self> {
        OptionSpec::new(
            OptionKind::Vanilla,
            strike,
            call_put,
            expiry,
            SamplingSchedule::single(expiry, contract_expiry)?,
            df,
        )
    }

    /// Same instrument with another strike.
    pub fn with_strike(&self, strike: f64) -> Result<Self> {
        OptionSpec::new(
            self.kind,
            strike,
            self.call_put,
            self.expiry.years(),
            self.schedule.clone(),
            self.settlement_discount,
        )
    }

    pub fn with_call_put(&self, call_put: CallPut) -> Self {
        OptionSpec { call_put, ..self.clone() }
    }
}

/// A price together with the lognormal inputs that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceResult {
    pub price: f64,
    /// `E[A]` of the weighted average (not renormalised by the weights).
    pub forward: f64,
    /// Matched total log variance `V`.
    pub variance: f64,
    /// Composite vol `√(V / expiry)`; zero at zero expiry.
    pub vol: f64,
}

/// `log Σ_jk a_j a_k e^{c_jk}` with `a = w F / Σ w F`, shifted by the largest
/// covariance so that a single fixing returns `c_11` exactly.
pub(crate) fn matched_variance(
    forwards: &[f64],
    mut cov: impl FnMut(usize, usize) -> Result<f64>,
) -> Result<(f64, f64)> {
    let mean: f64 = forwards.iter().sum();
    if !(mean > 0.0) {
        return Err(CurveError::DegenerateSchedule(format!("expected average {mean} is not positive")));
    }
    let n = forwards.len();
    let mut c = vec![0.0; n * n];
    let mut shift = f64::NEG_INFINITY;
    for j in 0..n {
        for k in j..n {
            if forwards[j] == 0.0 || forwards[k] == 0.0 {
                continue;
            }
            let v = cov(j, k)?;
            c[j * n + k] = v;
            c[k * n + j] = v;
            shift = shift.max(v);
        }
    }
    let a: Vec<f64> = forwards.iter().map(|f| f / mean).collect();
    let mut second = 0.0;
    for j in 0..n {
        if a[j] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for k in 0..n {
            if a[k] != 0.0 {
                row += a[k] * (c[j * n + k] - shift).exp();
            }
        }
        second += a[j] * row;
    }
    Ok((mean, (shift + second.ln()).max(0.0)))
}

fn weighted_forwards(curve: &ForwardCurve, sched: &SamplingSchedule) -> Result<Vec<f64>> {
    sched
        .entries()
        .iter()
        .map(|e| Ok(e.weight() * curve.price(e.contract_expiry.years())?))
        .collect()
}

/// `V[log A] = log(E[A²] / E[A]²)` for `A = Σ w_k F^{T_k}(t_k)`.
pub fn average_log_variance(m: &CalibratedModel, curve: &ForwardCurve, sched: &SamplingSchedule) -> Result<f64> {
    moments(m, curve, sched).map(|(_, v)| v)
}

fn moments(m: &CalibratedModel, curve: &ForwardCurve, sched: &SamplingSchedule) -> Result<(f64, f64)> {
    let fwd = weighted_forwards(curve, sched)?;
    let e = sched.entries();
    matched_variance(&fwd, |j, k| {
        let t = e[j].sample_date.years().min(e[k].sample_date.years());
        log_covariance(m, e[j].contract_expiry.years(), e[k].contract_expiry.years(), 0.0, t)
    })
}

pub(crate) fn finish(
    opt: &OptionSpec,
    forward: f64,
    variance: f64,
    discount: f64,
) -> Result<PriceResult> {
    let price = black_price_from_variance(forward, opt.strike, variance, discount, opt.call_put)?;
    let t = opt.expiry.years();
    let vol = if t > 0.0 { (variance / t).sqrt() } else { 0.0 };
    Ok(PriceResult {
        price,
        forward,
        variance,
        vol,
    })
}

/// Vanilla on one contract: Black at `√(⟨log F^T⟩_0^t / t)`.
pub fn vanilla_price(m: &CalibratedModel, curve: &ForwardCurve, opt: &OptionSpec) -> Result<PriceResult> {
    if opt.kind != OptionKind::Vanilla {
        return Err(CurveError::InvalidSpec(format!("{:?} passed to the vanilla pricer", opt.kind)));
    }
    let e = &opt.schedule.entries()[0];
    let forward = e.weight() * curve.price(e.contract_expiry.years())?;
    let variance = quadratic_variation(m, e.contract_expiry.years(), opt.expiry.years())?;
    finish(opt, forward, variance, opt.settlement_discount)
}

/// Asian option on the weighted average of fixings.
pub fn asian_price(m: &CalibratedModel, curve: &ForwardCurve, opt: &OptionSpec) -> Result<PriceResult> {
    if opt.kind == OptionKind::Vanilla {
        return Err(CurveError::InvalidSpec("vanilla passed to the Asian pricer".into()));
    }
    let (forward, variance) = moments(m, curve, &opt.schedule)?;
    finish(opt, forward, variance, opt.settlement_discount)
}

/// Swaption: an Asian whose fixings all fall on the option expiry.
pub fn swaption_price(m: &CalibratedModel, curve: &ForwardCurve, opt: &OptionSpec) -> Result<PriceResult> {
    if opt.kind != OptionKind::Swaption {
        return Err(CurveError::InvalidSpec(format!("{:?} passed to the swaption pricer", opt.kind)));
    }
    asian_price(m, curve, opt)
}

/// Dispatches on the option kind.
pub fn price(m: &CalibratedModel, curve: &ForwardCurve, opt: &OptionSpec) -> Result<PriceResult> {
    match opt.kind {
        OptionKind::Vanilla => vanilla_price(m, curve, opt),
        OptionKind::Asian => asian_price(m, curve, opt),
        OptionKind::Swaption => swaption_price(m, curve, opt),
    }
}
