//! Parameter sensitivity ladder: bump mean reversion, volatility ratio or
//! correlation of a two-factor spec, recalibrate to the same vanilla marks and
//! reprice a list of instruments.

use std::fmt;

use crate::calibration::{calibrate, CalibrationMode, VanillaVolStrip};
use crate::error::{CurveError, Result};
use crate::factor_model::FactorSpec;
use crate::pricing::{price, OptionSpec};
use crate::termstructure::ForwardCurve;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BumpKind {
    /// Added to the short factor's `β`.
    MeanReversion,
    /// Added to `p_S/p_L` and `q_S/q_L`, holding the long factor fixed.
    VolRatio,
    /// Added to the short/long correlation.
    Correlation,
}

impl BumpKind {
    pub const ALL: [BumpKind; 3] = [BumpKind::MeanReversion, BumpKind::VolRatio, BumpKind::Correlation];
}

impl fmt::Display for BumpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BumpKind::MeanReversion => "mean_reversion",
            BumpKind::VolRatio => "vol_ratio",
            BumpKind::Correlation => "correlation",
        })
    }
}

/// Absolute bump sizes; the defaults are `+0.1` each.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bumps {
    pub mean_reversion: f64,
    pub vol_ratio: f64,
    pub correlation: f64,
}

impl Default for Bumps {
    fn default() -> Self {
        Bumps {
            mean_reversion: 0.1,
            vol_ratio: 0.1,
            correlation: 0.1,
        }
    }
}

impl Bumps {
    pub fn size(&self, kind: BumpKind) -> f64 {
        match kind {
            BumpKind::MeanReversion => self.mean_reversion,
            BumpKind::VolRatio => self.vol_ratio,
            BumpKind::Correlation => self.correlation,
        }
    }
}

/// Short and long factor indices of a two-factor spec (the short factor has
/// the larger mean reversion; factor 0 on ties).
fn short_long(spec: &FactorSpec) -> Result<(usize, usize)> {
    if spec.n_factors() != 2 {
        return Err(CurveError::Unsupported(format!(
            "sensitivities need a two-factor spec, got {} factors",
            spec.n_factors()
        )));
    }
    let b = spec.beta();
    Ok(if b[1] > b[0] { (1, 0) } else { (0, 1) })
}

/// The spec with one parameter bumped. A zero bump returns the spec unchanged.
pub fn bump_spec(spec: &FactorSpec, kind: BumpKind, size: f64) -> Result<FactorSpec> {
    let (s, l) = short_long(spec)?;
    if size == 0.0 {
        return Ok(spec.clone());
    }
    match kind {
        BumpKind::MeanReversion => {
            let mut beta = spec.beta().to_vec();
            beta[s] += size;
            spec.with_beta(beta)
        }
        BumpKind::VolRatio => {
            let (mut p, mut q) = (spec.p_const().to_vec(), spec.q_const().to_vec());
            p[s] += size * p[l];
            q[s] += size * q[l];
            spec.with_vols(p, q)
        }
        BumpKind::Correlation => {
            let mut rho = spec.rho().clone();
            rho[(s, l)] += size;
            rho[(l, s)] = rho[(s, l)];
            spec.with_rho(rho)
        }
    }
}

/// One bumped price; `None` when the bumped spec is invalid or cannot be
/// calibrated, with the reason in `note`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityCell {
    pub bumped: Option<f64>,
    pub diff: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    pub label: String,
    pub base: f64,
    /// In [`BumpKind::ALL`] order.
    pub cells: [SensitivityCell; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityTable {
    pub bumps: Bumps,
    pub rows: Vec<SensitivityRow>,
}

/// Base and bumped prices for each instrument. The base spec must calibrate;
/// bumped failures are recorded in their cells.
pub fn sensitivity_ladder(
    spec: &FactorSpec,
    mode: CalibrationMode,
    strip: &VanillaVolStrip,
    curve: &ForwardCurve,
    instruments: &[(String, OptionSpec)],
    bumps: Bumps,
) -> Result<SensitivityTable> {
    short_long(spec)?;
    let base_model = calibrate(mode, spec, strip)?;
    let base: Vec<f64> = instruments
        .iter()
        .map(|(_, opt)| price(&base_model, curve, opt).map(|r| r.price))
        .collect::<Result<_>>()?;
    let bumped: Vec<std::result::Result<Vec<f64>, String>> = BumpKind::ALL
        .iter()
        .map(|&kind| {
            let attempt = || -> Result<Vec<f64>> {
                let m = calibrate(mode, &bump_spec(spec, kind, bumps.size(kind))?, strip)?;
                instruments.iter().map(|(_, opt)| price(&m, curve, opt).map(|r| r.price)).collect()
            };
            attempt().map_err(|e| e.to_string())
        })
        .collect();
    let rows = instruments
        .iter()
        .enumerate()
        .map(|(i, (label, _))| {
            let cell = |k: usize| match &bumped[k] {
                Ok(prices) => SensitivityCell {
                    bumped: Some(prices[i]),
                    diff: Some(prices[i] - base[i]),
                    note: None,
                },
                Err(msg) => SensitivityCell {
                    bumped: None,
                    diff: None,
                    note: Some(msg.clone()),
                },
            };
            SensitivityRow {
                label: label.clone(),
                base: base[i],
                cells: [cell(0), cell(1), cell(2)],
            }
        })
        .collect();
    Ok(SensitivityTable { bumps, rows })
}
