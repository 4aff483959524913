//! The N-factor mean-reverting forward curve model.
//!
//! Under the model every futures contract follows
//!
//! ```text
//! dF^T(t) / F^T(t) = Σ_i p_i(t) q_i(T) exp(-β_i (T - t)) dW_i(t),   <dW_i, dW_j> = ρ_ij dt
//! ```
//!
//! with `p_i(t) = p_i^{1-ε} α(t)` and `q_i(T) = (q_i λ(T))^ε`. The whole curve
//! is a deterministic function of the N Ornstein-Uhlenbeck factors
//! `dY_i = -β_i Y_i dt + p_i(t) dW_i`, `Y_i(0) = 0`.
//!
//! Log covariances are evaluated in closed form on each interval where the
//! piecewise-constant time scalings are constant.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CurveError, Result};
use crate::linalg::{from_rows, to_rows, validate_correlation};
use crate::termstructure::{merged_cuts, ContractEntry, ContractSchedule, ForwardCurve, PiecewiseConstant, TimePoint};

/// Below this value of `β·(b-a)` the segment integrals switch to a Taylor series.
pub const SERIES_SWITCH: f64 = 1e-8;

/// `∫_0^h exp(-B u) du = (1 - exp(-B h)) / B`, continuous at `B h = 0`.
pub(crate) fn decay_integral(beta_sum: f64, h: f64) -> f64 {
    let x = beta_sum * h;
    if x.abs() < SERIES_SWITCH {
        h * (1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0)
    } else {
        -(-x).exp_m1() / beta_sum
    }
}

/// `(exp(β b) - exp(β a)) / β`, extended continuously to `b - a` as `β → 0`.
pub fn segment_integral(beta_sum: f64, a: f64, b: f64) -> Result<f64> {
    if a > b {
        return Err(CurveError::Ordering(format!("segment start {a} after end {b}")));
    }
    if beta_sum < 0.0 || !beta_sum.is_finite() {
        return Err(CurveError::Domain(format!("mean reversion sum {beta_sum} must be >= 0")));
    }
    Ok((beta_sum * b).exp() * decay_integral(beta_sum, b - a))
}

/// `∫_a^b exp(-β_i (T_i - s) - β_j (T_j - s)) ds` for `b <= min(T_i, T_j)`.
#[inline]
pub(crate) fn decayed_integral(bi: f64, bj: f64, ti: f64, tj: f64, a: f64, b: f64) -> f64 {
    (-bi * (ti - b) - bj * (tj - b)).exp() * decay_integral(bi + bj, b - a)
}

/// Static model parameters: mean reversions, constant volatility vectors,
/// factor correlations and the non-fungibility blend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FactorSpecData", into = "FactorSpecData")]
pub struct FactorSpec {
    beta: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    rho: DMatrix<f64>,
    epsilon: f64,
}

#[derive(Serialize, Deserialize)]
struct FactorSpecData {
    beta: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    rho: Vec<Vec<f64>>,
    epsilon: f64,
}

impl TryFrom<FactorSpecData> for FactorSpec {
    type Error = CurveError;

    fn try_from(d: FactorSpecData) -> Result<Self> {
        FactorSpec::new(d.beta, d.p, d.q, from_rows(&d.rho)?, d.epsilon)
    }
}

impl From<FactorSpec> for FactorSpecData {
    fn from(s: FactorSpec) -> Self {
        FactorSpecData {
            rho: to_rows(&s.rho),
            beta: s.beta,
            p: s.p,
            q: s.q,
            epsilon: s.epsilon,
        }
    }
}

impl FactorSpec {
    pub fn new(beta: Vec<f64>, p: Vec<f64>, q: Vec<f64>, rho: DMatrix<f64>, epsilon: f64) -> Result<Self> {
        let n = beta.len();
        if n == 0 {
            return Err(CurveError::InvalidSpec("at least one factor required".into()));
        }
        if p.len() != n || q.len() != n || rho.nrows() != n || rho.ncols() != n {
            return Err(CurveError::Shape(format!(
                "factor vectors must all have length {n} (p: {}, q: {}, rho: {}x{})",
                p.len(),
                q.len(),
                rho.nrows(),
                rho.ncols()
            )));
        }
        if let Some(b) = beta.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return Err(CurveError::InvalidSpec(format!("mean reversion {b} must be >= 0")));
        }
        if let Some(v) = p.iter().chain(&q).find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(CurveError::InvalidSpec(format!("factor volatility {v} must be > 0")));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(CurveError::InvalidSpec(format!("epsilon {epsilon} outside [0, 1]")));
        }
        let rho = validate_correlation(&rho)?;
        Ok(FactorSpec { beta, p, q, rho, epsilon })
    }

    /// Two-factor short/long spec: `β = (β_S, 0)`, `p = q = (ratio, 1)`.
    pub fn two_factor(beta_short: f64, vol_ratio: f64, correlation: f64, epsilon: f64) -> Result<Self> {
        let rho = DMatrix::from_row_slice(2, 2, &[1.0, correlation, correlation, 1.0]);
        FactorSpec::new(
            vec![beta_short, 0.0],
            vec![vol_ratio, 1.0],
            vec![vol_ratio, 1.0],
            rho,
            epsilon,
        )
    }

    pub fn n_factors(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn p_const(&self) -> &[f64] {
        &self.p
    }

    pub fn q_const(&self) -> &[f64] {
        &self.q
    }

    pub fn rho(&self) -> &DMatrix<f64> {
        &self.rho
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        FactorSpec::new(self.beta.clone(), self.p.clone(), self.q.clone(), self.rho.clone(), epsilon)
    }

    pub fn with_beta(&self, beta: Vec<f64>) -> Result<Self> {
        FactorSpec::new(beta, self.p.clone(), self.q.clone(), self.rho.clone(), self.epsilon)
    }

    pub fn with_vols(&self, p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        FactorSpec::new(self.beta.clone(), p, q, self.rho.clone(), self.epsilon)
    }

    pub fn with_rho(&self, rho: DMatrix<f64>) -> Result<Self> {
        FactorSpec::new(self.beta.clone(), self.p.clone(), self.q.clone(), rho, self.epsilon)
    }

    /// The constant vector the α bootstrap sees: `p_i^{1-ε} q_i^ε`.
    pub fn blended_vols(&self) -> Vec<f64> {
        self.p
            .iter()
            .zip(&self.q)
            .map(|(p, q)| p.powf(1.0 - self.epsilon) * q.powf(self.epsilon))
            .collect()
    }
}

/// Local volatility structure of an asset, as consumed by the covariance
/// integrals: `p_i(t) = time_weight(i) · α(t)` and `q_i(T) = expiry_weight(i, T)`.
pub trait FactorVolatility {
    fn n_factors(&self) -> usize;
    fn mean_reversion(&self, i: usize) -> f64;
    fn time_weight(&self, i: usize) -> f64;
    fn time_scale(&self) -> &PiecewiseConstant;
    fn expiry_weight(&self, i: usize, expiry: f64) -> f64;
}

/// A [`FactorSpec`] bound to a contract schedule with calibrated time
/// scalings `α_k` (one per option expiry interval) and expiry scalings
/// `λ(T_M)` (one per contract).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CalibratedModelData", into = "CalibratedModelData")]
pub struct CalibratedModel {
    spec: FactorSpec,
    schedule: ContractSchedule,
    alpha_knots: Vec<f64>,
    lambda_samples: Vec<f64>,
    alpha: PiecewiseConstant,
    time_weights: Vec<f64>,
    lambda_by_expiry: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct CalibratedModelData {
    spec: FactorSpec,
    schedule: ContractSchedule,
    alpha_knots: Vec<f64>,
    lambda_samples: Vec<f64>,
}

impl TryFrom<CalibratedModelData> for CalibratedModel {
    type Error = CurveError;

    fn try_from(d: CalibratedModelData) -> Result<Self> {
        CalibratedModel::new(d.spec, d.schedule, d.alpha_knots, d.lambda_samples)
    }
}

impl From<CalibratedModel> for CalibratedModelData {
    fn from(m: CalibratedModel) -> Self {
        CalibratedModelData {
            spec: m.spec,
            schedule: m.schedule,
            alpha_knots: m.alpha_knots,
            lambda_samples: m.lambda_samples,
        }
    }
}

impl CalibratedModel {
    pub fn new(
        spec: FactorSpec,
        schedule: ContractSchedule,
        alpha_knots: Vec<f64>,
        lambda_samples: Vec<f64>,
    ) -> Result<Self> {
        if schedule.is_empty() {
            return Err(CurveError::InvalidSpec("calibrated model needs a non-empty schedule".into()));
        }
        if alpha_knots.len() != schedule.len() || lambda_samples.len() != schedule.len() {
            return Err(CurveError::Shape(format!(
                "schedule has {} contracts but {} alpha knots and {} lambda samples",
                schedule.len(),
                alpha_knots.len(),
                lambda_samples.len()
            )));
        }
        if let Some(a) = alpha_knots.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(CurveError::InvalidSpec(format!("alpha knot {a} must be > 0")));
        }
        if let Some(l) = lambda_samples.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(CurveError::InvalidSpec(format!("lambda sample {l} must be > 0")));
        }
        let alpha = PiecewiseConstant::from_knots(&schedule.option_expiries(), alpha_knots.clone())?;
        let mut lambda_by_expiry: Vec<(f64, f64)> = schedule
            .entries()
            .iter()
            .zip(&lambda_samples)
            .map(|(e, &l)| (e.futures_expiry.years(), l))
            .collect();
        lambda_by_expiry.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite expiry"));
        for w in lambda_by_expiry.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 != w[1].1 {
                return Err(CurveError::InvalidSpec(format!(
                    "futures expiry {} carries two different lambda samples",
                    w[0].0
                )));
            }
        }
        lambda_by_expiry.dedup_by(|a, b| a.0 == b.0);
        let eps = spec.epsilon();
        let time_weights = spec.p_const().iter().map(|p| p.powf(1.0 - eps)).collect();
        Ok(CalibratedModel {
            spec,
            schedule,
            alpha_knots,
            lambda_samples,
            alpha,
            time_weights,
            lambda_by_expiry,
        })
    }

    pub fn spec(&self) -> &FactorSpec {
        &self.spec
    }

    pub fn schedule(&self) -> &ContractSchedule {
        &self.schedule
    }

    pub fn alpha_knots(&self) -> &[f64] {
        &self.alpha_knots
    }

    pub fn lambda_samples(&self) -> &[f64] {
        &self.lambda_samples
    }

    /// `λ(T)`, flat from each sampled expiry up to the next one.
    pub fn lambda_at(&self, expiry: f64) -> f64 {
        let idx = self.lambda_by_expiry.partition_point(|&(t, _)| t <= expiry);
        self.lambda_by_expiry[idx.saturating_sub(1)].1
    }

    /// The same model with every `α_k` multiplied by `factor`.
    pub fn scale_alpha(&self, factor: f64) -> Result<Self> {
        CalibratedModel::new(
            self.spec.clone(),
            self.schedule.clone(),
            self.alpha_knots.iter().map(|a| a * factor).collect(),
            self.lambda_samples.clone(),
        )
    }
}

impl FactorVolatility for CalibratedModel {
    fn n_factors(&self) -> usize {
        self.spec.n_factors()
    }

    fn mean_reversion(&self, i: usize) -> f64 {
        self.spec.beta[i]
    }

    fn time_weight(&self, i: usize) -> f64 {
        self.time_weights[i]
    }

    fn time_scale(&self) -> &PiecewiseConstant {
        &self.alpha
    }

    fn expiry_weight(&self, i: usize, expiry: f64) -> f64 {
        let eps = self.spec.epsilon;
        if eps == 0.0 {
            return 1.0;
        }
        (self.spec.q[i] * self.lambda_at(expiry)).powf(eps)
    }
}

/// Values of the mean-reverting factors at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorState {
    pub t: TimePoint,
    pub y: Vec<f64>,
}

impl FactorState {
    pub fn initial(n_factors: usize) -> Self {
        FactorState {
            t: TimePoint::ZERO,
            y: vec![0.0; n_factors],
        }
    }
}

/// Instantaneous correlations `ρ^{1,2}_{ij}` between factor `i` of one asset
/// and factor `j` of another.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CrossCorrelation(DMatrix<f64>);

impl CrossCorrelation {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if let Some(v) = matrix.iter().find(|v| !(v.is_finite() && v.abs() <= 1.0)) {
            return Err(CurveError::InvalidSpec(format!("cross correlation {v} outside [-1, 1]")));
        }
        Ok(CrossCorrelation(matrix))
    }

    pub fn zeros(n1: usize, n2: usize) -> Self {
        CrossCorrelation(DMatrix::zeros(n1, n2))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        CrossCorrelation(self.0.transpose())
    }

    /// Full correlation matrix `[[ρ1, X], [Xᵀ, ρ2]]`, validated as PSD.
    pub fn stacked(&self, rho1: &DMatrix<f64>, rho2: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let (n1, n2) = (rho1.nrows(), rho2.nrows());
        if self.0.nrows() != n1 || self.0.ncols() != n2 {
            return Err(CurveError::Shape(format!(
                "cross correlation is {}x{}, assets have {n1} and {n2} factors",
                self.0.nrows(),
                self.0.ncols()
            )));
        }
        let mut full = DMatrix::<f64>::zeros(n1 + n2, n1 + n2);
        full.view_mut((0, 0), (n1, n1)).copy_from(rho1);
        full.view_mut((n1, n1), (n2, n2)).copy_from(rho2);
        full.view_mut((0, n1), (n1, n2)).copy_from(&self.0);
        full.view_mut((n1, 0), (n2, n1)).copy_from(&self.0.transpose());
        validate_correlation(&full)
    }
}

impl TryFrom<Vec<Vec<f64>>> for CrossCorrelation {
    type Error = CurveError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        CrossCorrelation::new(from_rows(&rows)?)
    }
}

impl From<CrossCorrelation> for Vec<Vec<f64>> {
    fn from(c: CrossCorrelation) -> Self {
        to_rows(&c.0)
    }
}

fn check_window(expiry1: f64, expiry2: f64, t1: f64, t2: f64) -> Result<()> {
    if !(t1.is_finite() && t2.is_finite()) || t1 < 0.0 {
        return Err(CurveError::Domain(format!("invalid covariance window [{t1}, {t2}]")));
    }
    if t1 > t2 {
        return Err(CurveError::Ordering(format!("window start {t1} after end {t2}")));
    }
    if t2 > expiry1.min(expiry2) {
        return Err(CurveError::Domain(format!(
            "window end {t2} past expiry {}",
            expiry1.min(expiry2)
        )));
    }
    Ok(())
}

/// `Σ_ij q^a_i(T_a) q^b_j(T_b) c_ij ∫_{t1}^{t2} p^a_i(s) p^b_j(s) e^{-β^a_i(T_a - s) - β^b_j(T_b - s)} ds`
pub(crate) fn integrated_covariance<A, B>(
    a: &A,
    b: &B,
    corr: &DMatrix<f64>,
    expiry_a: f64,
    expiry_b: f64,
    t1: f64,
    t2: f64,
) -> f64
where
    A: FactorVolatility + ?Sized,
    B: FactorVolatility + ?Sized,
{
    if t1 == t2 {
        return 0.0;
    }
    let cuts = merged_cuts(a.time_scale(), b.time_scale(), t1, t2);
    let mut total = 0.0;
    for i in 0..a.n_factors() {
        let wi = a.expiry_weight(i, expiry_a) * a.time_weight(i);
        let bi = a.mean_reversion(i);
        for j in 0..b.n_factors() {
            let c = corr[(i, j)];
            if c == 0.0 {
                continue;
            }
            let wj = b.expiry_weight(j, expiry_b) * b.time_weight(j);
            let bj = b.mean_reversion(j);
            let mut integral = 0.0;
            for w in cuts.windows(2) {
                let scale = a.time_scale().value_at(w[0]) * b.time_scale().value_at(w[0]);
                integral += scale * decayed_integral(bi, bj, expiry_a, expiry_b, w[0], w[1]);
            }
            total += wi * wj * c * integral;
        }
    }
    total
}

/// `⟨log F^{T1}, log F^{T2}⟩` integrated over `[t1, t2]`.
pub fn log_covariance(m: &CalibratedModel, expiry1: f64, expiry2: f64, t1: f64, t2: f64) -> Result<f64> {
    check_window(expiry1, expiry2, t1, t2)?;
    // ρ is symmetric, so a canonical order makes the result exactly symmetric
    let (lo, hi) = if expiry1 <= expiry2 { (expiry1, expiry2) } else { (expiry2, expiry1) };
    Ok(integrated_covariance(m, m, m.spec.rho(), lo, hi, t1, t2))
}

/// `⟨log F^T⟩_0^t`, the Black variance of a vanilla expiring at `t`.
pub fn quadratic_variation(m: &CalibratedModel, expiry: f64, t: f64) -> Result<f64> {
    log_covariance(m, expiry, expiry, 0.0, t)
}

/// Log covariance between contract `T1` of one asset and `T2` of another.
#[allow(clippy::too_many_arguments)]
pub fn cross_asset_log_covariance(
    m1: &CalibratedModel,
    m2: &CalibratedModel,
    xc: &CrossCorrelation,
    expiry1: f64,
    expiry2: f64,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    cross_covariance(m1, m2, xc, expiry1, expiry2, t1, t2)
}

/// [`cross_asset_log_covariance`] for any pair of volatility structures.
#[allow(clippy::too_many_arguments)]
pub fn cross_covariance<A, B>(
    a: &A,
    b: &B,
    xc: &CrossCorrelation,
    expiry1: f64,
    expiry2: f64,
    t1: f64,
    t2: f64,
) -> Result<f64>
where
    A: FactorVolatility + ?Sized,
    B: FactorVolatility + ?Sized,
{
    if xc.0.nrows() != a.n_factors() || xc.0.ncols() != b.n_factors() {
        return Err(CurveError::Shape(format!(
            "cross correlation is {}x{}, models have {} and {} factors",
            xc.0.nrows(),
            xc.0.ncols(),
            a.n_factors(),
            b.n_factors()
        )));
    }
    check_window(expiry1, expiry2, t1, t2)?;
    Ok(integrated_covariance(a, b, &xc.0, expiry1, expiry2, t1, t2))
}

/// Loadings `q_i(T) e^{-β_i (T - t)}` mapping factor values to `log F^T(t)`.
pub(crate) fn factor_loadings(m: &CalibratedModel, expiry: f64, t: f64) -> Vec<f64> {
    (0..m.n_factors())
        .map(|i| m.expiry_weight(i, expiry) * (-m.mean_reversion(i) * (expiry - t)).exp())
        .collect()
}

/// `F^T(t) = F^T(0) exp(Σ_i q_i(T) e^{-β_i (T - t)} Y_i(t) - ½ ⟨log F^T⟩_0^t)`.
pub fn reconstruct_futures(
    m: &CalibratedModel,
    curve: &ForwardCurve,
    state: &FactorState,
    expiry: f64,
) -> Result<f64> {
    if state.y.len() != m.n_factors() {
        return Err(CurveError::Shape(format!(
            "state has {} factors, model has {}",
            state.y.len(),
            m.n_factors()
        )));
    }
    let t = state.t.years();
    let f0 = curve.price(expiry)?;
    let qv = quadratic_variation(m, expiry, t)?;
    let drift: f64 = factor_loadings(m, expiry, t)
        .iter()
        .zip(&state.y)
        .map(|(l, y)| l * y)
        .sum();
    Ok(f0 * (drift - 0.5 * qv).exp())
}

/// Looks a contract up in the model's schedule by label.
pub fn contract<'a>(m: &'a CalibratedModel, label: &str) -> Result<&'a ContractEntry> {
    m.schedule
        .get(label)
        .ok_or_else(|| CurveError::MissingData(format!("contract {label} not in model schedule")))
}
