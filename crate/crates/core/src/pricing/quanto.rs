//! Options on a domestic commodity strip settled in a foreign currency,
//! priced in the foreign measure.
//!
//! With `X` the domestic price of one unit of foreign currency and `Y = 1/X`,
//! the payoff average is `G = Σ w_k F^{T_k}(t_k) Y(t_k)`. Its first moment is
//! `Σ w_k F^{T_k}(0) E[Y(t_k)]` and the log covariances split into
//! commodity, cross and FX parts. The FX leg behaves as a one-factor asset
//! with no mean reversion and volatility `σ_X(t)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CurveError, Result};
use crate::factor_model::{cross_covariance, log_covariance, CalibratedModel, CrossCorrelation, FactorSpec, FactorVolatility};
use crate::linalg::validate_correlation;
use crate::pricing::moments::{finish, matched_variance, OptionSpec, PriceResult};
use crate::termstructure::{ForwardCurve, PiecewiseConstant};

/// FX dynamics: spot, deterministic rates, piecewise-constant vol and the
/// correlations of the FX Brownian with each commodity factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FxSpecData", into = "FxSpecData")]
pub struct FxSpec {
    spot: f64,
    sigma_x: PiecewiseConstant,
    r_d: PiecewiseConstant,
    r_f: PiecewiseConstant,
    rho_x: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FxSpecData {
    spot: f64,
    sigma_x: PiecewiseConstant,
    r_domestic: PiecewiseConstant,
    r_foreign: PiecewiseConstant,
    rho_x: Vec<f64>,
}

impl TryFrom<FxSpecData> for FxSpec {
    type Error = CurveError;

    fn try_from(d: FxSpecData) -> Result<Self> {
        FxSpec::new(d.spot, d.sigma_x, d.r_domestic, d.r_foreign, d.rho_x)
    }
}

impl From<FxSpec> for FxSpecData {
    fn from(f: FxSpec) -> Self {
        FxSpecData {
            spot: f.spot,
            sigma_x: f.sigma_x,
            r_domestic: f.r_d,
            r_foreign: f.r_f,
            rho_x: f.rho_x,
        }
    }
}

impl FxSpec {
    pub fn new(
        spot: f64,
        sigma_x: PiecewiseConstant,
        r_d: PiecewiseConstant,
        r_f: PiecewiseConstant,
        rho_x: Vec<f64>,
    ) -> Result<Self> {
        if !(spot.is_finite() && spot > 0.0) {
            return Err(CurveError::InvalidSpec(format!("FX spot {spot} must be > 0")));
        }
        if sigma_x.values().iter().any(|v| *v < 0.0) {
            return Err(CurveError::InvalidSpec("FX vol must be >= 0".into()));
        }
        if let Some(r) = rho_x.iter().find(|r| !(r.abs() <= 1.0)) {
            return Err(CurveError::InvalidSpec(format!("FX correlation {r} outside [-1, 1]")));
        }
        Ok(FxSpec {
            spot,
            sigma_x,
            r_d,
            r_f,
            rho_x,
        })
    }

    /// Validates against a commodity spec: one correlation per factor and a
    /// positive semi-definite augmented correlation matrix.
    pub fn for_spec(self, spec: &FactorSpec) -> Result<Self> {
        self.check(spec)?;
        Ok(self)
    }

    fn check(&self, spec: &FactorSpec) -> Result<()> {
        let n = spec.n_factors();
        if self.rho_x.len() != n {
            return Err(CurveError::Shape(format!(
                "{} FX correlations for {n} factors",
                self.rho_x.len()
            )));
        }
        let mut aug = DMatrix::<f64>::identity(n + 1, n + 1);
        aug.view_mut((0, 0), (n, n)).copy_from(spec.rho());
        for (i, r) in self.rho_x.iter().enumerate() {
            aug[(i, n)] = *r;
            aug[(n, i)] = *r;
        }
        validate_correlation(&aug).map(|_| ())
    }

    pub fn spot(&self) -> f64 {
        self.spot
    }

    pub fn sigma_x(&self) -> &PiecewiseConstant {
        &self.sigma_x
    }

    pub fn rho_x(&self) -> &[f64] {
        &self.rho_x
    }

    /// Domestic per foreign forward: `X(0) exp(∫_0^t (r_d - r_f))`.
    pub fn forward_x(&self, t: f64) -> f64 {
        self.spot * (self.r_d.integral(0.0, t) - self.r_f.integral(0.0, t)).exp()
    }

    /// Foreign per domestic forward, `E[Y(t)]` in the foreign measure.
    pub fn forward_y(&self, t: f64) -> f64 {
        (self.r_f.integral(0.0, t) - self.r_d.integral(0.0, t)).exp() / self.spot
    }

    /// Foreign discount factor `exp(-∫_0^t r_f)`.
    pub fn foreign_discount(&self, t: f64) -> f64 {
        (-self.r_f.integral(0.0, t)).exp()
    }
}

/// The FX rate viewed as a one-factor asset with `β = 0`.
pub(crate) struct FxLeg<'a> {
    pub sigma: &'a PiecewiseConstant,
}

impl FactorVolatility for FxLeg<'_> {
    fn n_factors(&self) -> usize {
        1
    }

    fn mean_reversion(&self, _i: usize) -> f64 {
        0.0
    }

    fn time_weight(&self, _i: usize) -> f64 {
        1.0
    }

    fn time_scale(&self) -> &PiecewiseConstant {
        self.sigma
    }

    fn expiry_weight(&self, _i: usize, _expiry: f64) -> f64 {
        1.0
    }
}

fn quanto_moments(
    m: &CalibratedModel,
    fx: &FxSpec,
    curve: &ForwardCurve,
    opt_schedule: &crate::pricing::moments::SamplingSchedule,
) -> Result<(f64, f64)> {
    fx.check(m.spec())?;
    let e = opt_schedule.entries();
    let forwards: Vec<f64> = e
        .iter()
        .map(|s| Ok(s.weight() * curve.price(s.contract_expiry.years())? * fx.forward_y(s.sample_date.years())))
        .collect::<Result<_>>()?;
    let leg = FxLeg { sigma: &fx.sigma_x };
    // Y = 1/X, so correlations quoted against X flip sign
    let xc = CrossCorrelation::new(DMatrix::from_iterator(
        fx.rho_x.len(),
        1,
        fx.rho_x.iter().map(|r| -r),
    ))?;
    let unit = CrossCorrelation::new(DMatrix::identity(1, 1))?;
    matched_variance(&forwards, |j, k| {
        let t = e[j].sample_date.years().min(e[k].sample_date.years());
        let (tj, tk) = (e[j].contract_expiry.years(), e[k].contract_expiry.years());
        let ff = log_covariance(m, tj, tk, 0.0, t)?;
        let fy = cross_covariance(m, &leg, &xc, tj, tj, 0.0, t)?;
        let yf = cross_covariance(m, &leg, &xc, tk, tk, 0.0, t)?;
        let yy = cross_covariance(&leg, &leg, &unit, tj, tj, 0.0, t)?;
        Ok(ff + fy + yf + yy)
    })
}

/// Matched log variance of the foreign-currency average `G`.
pub fn quanto_average_log_variance(
    m: &CalibratedModel,
    fx: &FxSpec,
    curve: &ForwardCurve,
    sched: &crate::pricing::moments::SamplingSchedule,
) -> Result<f64> {
    quanto_moments(m, fx, curve, sched).map(|(_, v)| v)
}

/// Price in foreign currency; `settlement_discount` is the foreign discount
/// factor to payment, and swaption weights carry foreign `d_k`.
pub fn quanto_price(m: &CalibratedModel, fx: &FxSpec, curve: &ForwardCurve, opt: &OptionSpec) -> Result<PriceResult> {
    let (forward, variance) = quanto_moments(m, fx, curve, &opt.schedule)?;
    finish(opt, forward, variance, opt.settlement_discount)
}
