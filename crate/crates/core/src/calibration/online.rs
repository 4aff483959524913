//! Calibration of the scaling functions `α(t)` and `λ(T)` to a strip of
//! vanilla implied vols, so that the model reprices every vanilla exactly.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{CurveError, Result};
use crate::factor_model::{decayed_integral, quadratic_variation, CalibratedModel, FactorSpec};
use crate::pricing::smile::MonotoneCubic;
use crate::termstructure::{ContractEntry, ContractSchedule, TimePoint};

/// One vanilla vol mark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VanillaQuote {
    pub label: String,
    pub option_expiry: TimePoint,
    pub futures_expiry: TimePoint,
    pub implied_vol: f64,
}

/// ATM implied vols for an increasing sequence of option expiries.
#[derive(Debug, Clone, PartialEq)]
pub struct VanillaVolStrip {
    quotes: Vec<VanillaQuote>,
    schedule: ContractSchedule,
}

impl VanillaVolStrip {
    pub fn new(quotes: Vec<VanillaQuote>) -> Result<Self> {
        if let Some(q) = quotes.iter().find(|q| !(q.implied_vol.is_finite() && q.implied_vol > 0.0)) {
            return Err(CurveError::InvalidSpec(format!(
                "contract {}: implied vol {} must be > 0",
                q.label, q.implied_vol
            )));
        }
        let schedule = ContractSchedule::new(
            quotes
                .iter()
                .map(|q| ContractEntry {
                    label: q.label.clone(),
                    option_expiry: q.option_expiry,
                    futures_expiry: q.futures_expiry,
                })
                .collect(),
        )?;
        Ok(VanillaVolStrip { quotes, schedule })
    }

    /// Pairs every schedule entry with the vol at the same position.
    pub fn from_schedule(schedule: &ContractSchedule, vols: &[f64]) -> Result<Self> {
        if vols.len() != schedule.len() {
            return Err(CurveError::Shape(format!(
                "{} vols for {} contracts",
                vols.len(),
                schedule.len()
            )));
        }
        VanillaVolStrip::new(
            schedule
                .entries()
                .iter()
                .zip(vols)
                .map(|(e, &v)| VanillaQuote {
                    label: e.label.clone(),
                    option_expiry: e.option_expiry,
                    futures_expiry: e.futures_expiry,
                    implied_vol: v,
                })
                .collect(),
        )
    }

    pub fn quotes(&self) -> &[VanillaQuote] {
        &self.quotes
    }

    pub fn schedule(&self) -> &ContractSchedule {
        &self.schedule
    }

    pub fn len(&self) -> usize {
        self.quotes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quotes.is_empty()
    }

    pub fn vols(&self) -> Vec<f64> {
        self.quotes.iter().map(|q| q.implied_vol).collect()
    }
}

/// Vol smile of one contract on Quick Delta pillars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmileQuote {
    pub label: String,
    pub option_expiry: TimePoint,
    pub futures_expiry: TimePoint,
    pub atm_vol: f64,
    /// `(quick delta, vol)` pillars in increasing Quick Delta.
    pub pillars: Vec<(f64, f64)>,
}

/// Per-contract ATM vols plus Quick Delta smiles.
#[derive(Debug, Clone)]
pub struct VolSurface {
    smiles: Vec<SmileQuote>,
    interpolants: Vec<MonotoneCubic>,
    atm: VanillaVolStrip,
}

/// Pillars within this distance of 0.5 are treated as the ATM pillar.
const ATM_PILLAR_TOLERANCE: f64 = 1e-12;

impl VolSurface {
    pub fn new(smiles: Vec<SmileQuote>) -> Result<Self> {
        let mut interpolants = Vec::with_capacity(smiles.len());
        for s in &smiles {
            if s.pillars.is_empty() {
                return Err(CurveError::InvalidSpec(format!("contract {}: no smile pillars", s.label)));
            }
            for &(qd, vol) in &s.pillars {
                if !(qd > 0.0 && qd < 1.0) {
                    return Err(CurveError::Domain(format!(
                        "contract {}: quick delta pillar {qd} outside (0, 1)",
                        s.label
                    )));
                }
                if !(vol.is_finite() && vol > 0.0) {
                    return Err(CurveError::InvalidSpec(format!(
                        "contract {}: pillar vol {vol} must be > 0",
                        s.label
                    )));
                }
                if (qd - 0.5).abs() <= ATM_PILLAR_TOLERANCE && vol != s.atm_vol {
                    return Err(CurveError::InvalidSpec(format!(
                        "contract {}: 50 QD pillar {vol} differs from ATM vol {}",
                        s.label, s.atm_vol
                    )));
                }
            }
            let (x, y): (Vec<f64>, Vec<f64>) = s.pillars.iter().copied().unzip();
            interpolants.push(MonotoneCubic::new(x, y)?);
        }
        let atm = VanillaVolStrip::new(
            smiles
                .iter()
                .map(|s| VanillaQuote {
                    label: s.label.clone(),
                    option_expiry: s.option_expiry,
                    futures_expiry: s.futures_expiry,
                    implied_vol: s.atm_vol,
                })
                .collect(),
        )?;
        Ok(VolSurface {
            smiles,
            interpolants,
            atm,
        })
    }

    pub fn smiles(&self) -> &[SmileQuote] {
        &self.smiles
    }

    pub fn atm_strip(&self) -> &VanillaVolStrip {
        &self.atm
    }

    /// Interpolated vol of one contract at a Quick Delta; the flag is set when
    /// the QD lies outside the pillars and the smile was extended flat.
    pub fn vol_at(&self, label: &str, qd: f64) -> Result<(f64, bool)> {
        let k = self
            .atm
            .schedule()
            .position(label)
            .ok_or_else(|| CurveError::MissingData(format!("contract {label} not on vol surface")))?;
        Ok(self.interpolants[k].eval(qd))
    }

    /// A full strip with every contract's smile read at one Quick Delta.
    pub fn strip_at_quick_delta(&self, qd: f64) -> Result<(VanillaVolStrip, bool)> {
        let mut extrapolated = false;
        let vols: Vec<f64> = self
            .interpolants
            .iter()
            .map(|c| {
                let (v, flag) = c.eval(qd);
                extrapolated |= flag;
                v
            })
            .collect();
        Ok((VanillaVolStrip::from_schedule(self.atm.schedule(), &vols)?, extrapolated))
    }
}

/// Which scaling function absorbs the vanilla term structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationMode {
    /// Time-dependent `α(t)` bootstrapped, `λ ≡ 1` (`ε = 0`).
    Nonseasonal,
    /// Expiry-dependent `λ(T)` solved directly, `α ≡ 1` (`ε = 1`).
    Seasonal,
    /// Blend of the two with the spec's `ε`.
    Hybrid,
}

impl std::str::FromStr for CalibrationMode {
    type Err = CurveError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonseasonal" => Ok(CalibrationMode::Nonseasonal),
            "seasonal" => Ok(CalibrationMode::Seasonal),
            "hybrid" => Ok(CalibrationMode::Hybrid),
            other => Err(CurveError::InvalidSpec(format!("unknown calibration mode {other}"))),
        }
    }
}

/// Calibrates in the given mode; `Hybrid` uses `spec.epsilon()`.
pub fn calibrate(mode: CalibrationMode, spec: &FactorSpec, strip: &VanillaVolStrip) -> Result<CalibratedModel> {
    match mode {
        CalibrationMode::Nonseasonal => calibrate_nonseasonal(spec, strip),
        CalibrationMode::Seasonal => calibrate_seasonal(spec, strip),
        CalibrationMode::Hybrid => calibrate_hybrid(spec, strip),
    }
}

fn require_non_empty(strip: &VanillaVolStrip) -> Result<()> {
    if strip.is_empty() {
        return Err(CurveError::InvalidSpec("empty vol strip".into()));
    }
    Ok(())
}

/// `Σ_ij c_i c_j ρ_ij ∫_a^b e^{-(β_i + β_j)(T - s)} ds`
fn weighted_decay(spec: &FactorSpec, c: &[f64], expiry: f64, a: f64, b: f64) -> f64 {
    let beta = spec.beta();
    let rho = spec.rho();
    let n = spec.n_factors();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            total += c[i] * c[j] * rho[(i, j)] * decayed_integral(beta[i], beta[j], expiry, expiry, a, b);
        }
    }
    total
}

/// Sequential solve of `α_k²` against target variances `V_M`, nearest
/// expiry first. `residual_scale` maps a residual variance back to a total
/// variance when reporting the lowest feasible vol.
fn bootstrap_alpha(
    spec: &FactorSpec,
    c: &[f64],
    strip: &VanillaVolStrip,
    targets: &[f64],
    residual_scale: &[f64],
) -> Result<Vec<f64>> {
    let quotes = strip.quotes();
    let mut alpha_sq: Vec<f64> = Vec::with_capacity(quotes.len());
    for (m, q) in quotes.iter().enumerate() {
        let t_m = q.option_expiry.years();
        let big_t = q.futures_expiry.years();
        if t_m <= 0.0 {
            return Err(CurveError::DegenerateExpiry(format!("contract {} expires at t = 0", q.label)));
        }
        let mut carried = 0.0;
        let mut prev = 0.0;
        for (k, a2) in alpha_sq.iter().enumerate() {
            let t_k = quotes[k].option_expiry.years();
            carried += a2 * weighted_decay(spec, c, big_t, prev, t_k);
            prev = t_k;
        }
        let own = weighted_decay(spec, c, big_t, prev, t_m);
        if !(own > 0.0) {
            return Err(CurveError::DegenerateSpec(format!(
                "contract {}: model variance over its own interval is {own}",
                q.label
            )));
        }
        let residual = targets[m] - carried;
        if !(residual > 0.0) {
            let min_total = carried * residual_scale[m];
            return Err(CurveError::InfeasibleCalibration {
                contract: q.label.clone(),
                vol: q.implied_vol,
                min_feasible_vol: (min_total / t_m).sqrt(),
            });
        }
        alpha_sq.push(residual / own);
    }
    Ok(alpha_sq.into_iter().map(f64::sqrt).collect())
}

/// Bootstraps piecewise-constant `α_k` with `λ ≡ 1` and `ε = 0`.
pub fn calibrate_nonseasonal(spec: &FactorSpec, strip: &VanillaVolStrip) -> Result<CalibratedModel> {
    require_non_empty(strip)?;
    let spec = spec.with_epsilon(0.0)?;
    let targets: Vec<f64> = strip
        .quotes()
        .iter()
        .map(|q| q.implied_vol * q.implied_vol * q.option_expiry.years())
        .collect();
    let ones = vec![1.0; strip.len()];
    let alpha = bootstrap_alpha(&spec, spec.p_const(), strip, &targets, &ones)?;
    CalibratedModel::new(spec, strip.schedule().clone(), alpha, ones)
}

fn reject_shared_expiries(strip: &VanillaVolStrip) -> Result<()> {
    let mut seen = HashSet::new();
    for q in strip.quotes() {
        if !seen.insert(q.futures_expiry.years().to_bits()) {
            return Err(CurveError::DegenerateSchedule(format!(
                "contract {} shares futures expiry {} with an earlier contract; λ(T) would be defined twice",
                q.label,
                q.futures_expiry.years()
            )));
        }
    }
    Ok(())
}

/// `λ(T_M) = σ_M √(t_M / D_M)` with `D_M = Σ_ij q_i q_j ρ_ij ∫_0^{t_M} e^{-(β_i+β_j)(T_M - s)} ds`.
fn seasonal_lambda(spec: &FactorSpec, strip: &VanillaVolStrip) -> Result<Vec<f64>> {
    reject_shared_expiries(strip)?;
    strip
        .quotes()
        .iter()
        .map(|q| {
            let t_m = q.option_expiry.years();
            if t_m <= 0.0 {
                return Err(CurveError::DegenerateExpiry(format!("contract {} expires at t = 0", q.label)));
            }
            let d = weighted_decay(spec, spec.q_const(), q.futures_expiry.years(), 0.0, t_m);
            if !(d > 0.0) {
                return Err(CurveError::DegenerateSpec(format!(
                    "contract {}: seasonal denominator {d} is not positive",
                    q.label
                )));
            }
            Ok(q.implied_vol * (t_m / d).sqrt())
        })
        .collect()
}

/// Solves `λ(T_M)` in closed form with `α ≡ 1` and `ε = 1`.
pub fn calibrate_seasonal(spec: &FactorSpec, strip: &VanillaVolStrip) -> Result<CalibratedModel> {
    require_non_empty(strip)?;
    let spec = spec.with_epsilon(1.0)?;
    let lambda = seasonal_lambda(&spec, strip)?;
    CalibratedModel::new(spec, strip.schedule().clone(), vec![1.0; strip.len()], lambda)
}

/// Full seasonal `λ` first, then `α_k` bootstrapped against the residual
/// variances `σ_M² t_M / λ^{2ε}(T_M)` with `p_i(t) = p_i^{1-ε} α(t)` and
/// `q_i(T) = (q_i λ(T))^ε`.
pub fn calibrate_hybrid(spec: &FactorSpec, strip: &VanillaVolStrip) -> Result<CalibratedModel> {
    require_non_empty(strip)?;
    let eps = spec.epsilon();
    let lambda = if eps == 0.0 {
        vec![1.0; strip.len()]
    } else {
        seasonal_lambda(spec, strip)?
    };
    let scale: Vec<f64> = lambda.iter().map(|l| l.powf(2.0 * eps)).collect();
    let targets: Vec<f64> = strip
        .quotes()
        .iter()
        .zip(&scale)
        .map(|(q, s)| q.implied_vol * q.implied_vol * q.option_expiry.years() / s)
        .collect();
    let alpha = bootstrap_alpha(spec, &spec.blended_vols(), strip, &targets, &scale)?;
    CalibratedModel::new(spec.clone(), strip.schedule().clone(), alpha, lambda)
}

/// `√(⟨log F^{T_M}⟩_0^{t_M} / t_M)`.
pub fn implied_vanilla_vol(m: &CalibratedModel, contract: &ContractEntry) -> Result<f64> {
    let t = contract.option_expiry.years();
    if t <= 0.0 {
        return Err(CurveError::DegenerateExpiry(format!("contract {} expires at t = 0", contract.label)));
    }
    Ok((quadratic_variation(m, contract.futures_expiry.years(), t)? / t).sqrt())
}
