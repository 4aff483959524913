//! Quick Delta moneyness and the four-step smile adjustment: calibrate to
//! ATM vols, read the instrument's Quick Delta, recalibrate to the smile at
//! that Quick Delta, reprice.

use crate::calibration::{calibrate, CalibrationMode, VolSurface};
use crate::error::{CurveError, Result};
use crate::factor_model::FactorSpec;
use crate::pricing::black::{norm_cdf, norm_inv};
use crate::pricing::moments::{price, OptionSpec, PriceResult};
use crate::termstructure::ForwardCurve;

/// `Φ(ln(K/F) / (σ√t))`.
pub fn quick_delta(strike: f64, forward: f64, sigma_atm: f64, t: f64) -> Result<f64> {
    if !(strike > 0.0 && forward > 0.0) {
        return Err(CurveError::Domain(format!("strike {strike} and forward {forward} must be > 0")));
    }
    if !(sigma_atm > 0.0 && t > 0.0) {
        return Err(CurveError::DegenerateMoneyness(format!(
            "vol {sigma_atm} over {t} years has no spread to measure moneyness against"
        )));
    }
    Ok(norm_cdf((strike / forward).ln() / (sigma_atm * t.sqrt())))
}

/// `F exp(σ√t Φ⁻¹(qd))`, the inverse of [`quick_delta`].
pub fn strike_from_quick_delta(qd: f64, forward: f64, sigma_atm: f64, t: f64) -> Result<f64> {
    if !(qd > 0.0 && qd < 1.0) {
        return Err(CurveError::Domain(format!("quick delta {qd} outside (0, 1)")));
    }
    if !(forward > 0.0 && sigma_atm >= 0.0 && t >= 0.0) {
        return Err(CurveError::Domain(format!(
            "forward {forward}, vol {sigma_atm}, expiry {t} out of range"
        )));
    }
    Ok(forward * (sigma_atm * t.sqrt() * norm_inv(qd)).exp())
}

/// Monotone cubic Hermite interpolant (Fritsch-Carlson slopes), flat beyond
/// the end knots.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() || x.is_empty() {
            return Err(CurveError::Shape(format!("{} knots vs {} values", x.len(), y.len())));
        }
        if x.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CurveError::Ordering("interpolation knots must be strictly increasing".into()));
        }
        let n = x.len();
        let delta: Vec<f64> = (0..n.saturating_sub(1))
            .map(|k| (y[k + 1] - y[k]) / (x[k + 1] - x[k]))
            .collect();
        let mut slopes = vec![0.0; n];
        if n > 1 {
            slopes[0] = delta[0];
            slopes[n - 1] = delta[n - 2];
            for k in 1..n - 1 {
                slopes[k] = if delta[k - 1] * delta[k] <= 0.0 {
                    0.0
                } else {
                    (delta[k - 1] + delta[k]) / 2.0
                };
            }
            for k in 0..n - 1 {
                if delta[k] == 0.0 {
                    slopes[k] = 0.0;
                    slopes[k + 1] = 0.0;
                    continue;
                }
                let a = slopes[k] / delta[k];
                let b = slopes[k + 1] / delta[k];
                let r = a * a + b * b;
                if r > 9.0 {
                    let tau = 3.0 / r.sqrt();
                    slopes[k] = tau * a * delta[k];
                    slopes[k + 1] = tau * b * delta[k];
                }
            }
        }
        Ok(MonotoneCubic { x, y, slopes })
    }

    /// Value at `x` and whether `x` fell outside the knots.
    pub fn eval(&self, x: f64) -> (f64, bool) {
        let n = self.x.len();
        if x <= self.x[0] {
            return (self.y[0], x < self.x[0]);
        }
        if x >= self.x[n - 1] {
            return (self.y[n - 1], x > self.x[n - 1]);
        }
        let k = self.x.partition_point(|&v| v <= x) - 1;
        let h = self.x[k + 1] - self.x[k];
        let s = (x - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h10 = s3 - 2.0 * s2 + s;
        let h11 = s3 - s2;
        // written as an increment on y_k so that flat data is reproduced exactly
        let v = self.y[k]
            + (self.y[k + 1] - self.y[k]) * h01
            + h * (self.slopes[k] * h10 + self.slopes[k + 1] * h11);
        (v, false)
    }
}

/// Both legs of a smile-adjusted valuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmileAdjusted {
    /// The instrument priced off the ATM-calibrated model.
    pub atm: PriceResult,
    /// The instrument's Quick Delta at its composite ATM vol.
    pub quick_delta: f64,
    /// The price after recalibrating to the smile at that QD.
    pub adjusted: PriceResult,
    /// True when the QD fell outside some contract's pillars.
    pub extrapolated: bool,
}

/// Smile-consistent price of an option on a strip of futures.
pub fn smile_adjusted_price(
    spec: &FactorSpec,
    mode: CalibrationMode,
    surface: &VolSurface,
    curve: &ForwardCurve,
    opt: &OptionSpec,
) -> Result<SmileAdjusted> {
    let covered: Vec<f64> = surface
        .atm_strip()
        .quotes()
        .iter()
        .map(|q| q.futures_expiry.years())
        .collect();
    for e in opt.schedule.entries() {
        if !covered.contains(&e.contract_expiry.years()) {
            return Err(CurveError::MissingData(format!(
                "vol surface has no contract expiring at {}",
                e.contract_expiry.years()
            )));
        }
    }
    let atm_model = calibrate(mode, spec, surface.atm_strip())?;
    let atm = price(&atm_model, curve, opt)?;
    let qd = quick_delta(opt.strike, atm.forward, atm.vol, opt.expiry.years())?;
    let (strip, extrapolated) = surface.strip_at_quick_delta(qd)?;
    let smile_model = calibrate(mode, spec, &strip)?;
    let adjusted = price(&smile_model, curve, opt)?;
    Ok(SmileAdjusted {
        atm,
        quick_delta: qd,
        adjusted,
        extrapolated,
    })
}
