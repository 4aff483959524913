//! Historical calibration: exponentially weighted PCA of curve returns, the
//! two-factor fit to the leading components, model-implied volatility and
//! correlation term structures, and extraction of factor shocks from two
//! nearby contracts.

use chrono::NaiveDate;
use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::{CurveError, Result};
use crate::factor_model::FactorSpec;
use crate::linalg::sorted_symmetric_eigen;

/// `w_r ∝ 2^{-(n-1-r)/h}`: the newest row has raw weight 1; normalised to sum 1.
pub fn exponential_weights(n_rows: usize, half_life: f64) -> Result<Vec<f64>> {
    if !(half_life.is_finite() && half_life > 0.0) {
        return Err(CurveError::Domain(format!("half life {half_life} must be > 0")));
    }
    let raw: Vec<f64> = (0..n_rows)
        .map(|r| (-((n_rows - 1 - r) as f64) / half_life).exp2())
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Daily log returns of constant-nearby futures, one row per date.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    pub dates: Vec<NaiveDate>,
    /// Nearby index of each column (1-based).
    pub tenors: Vec<usize>,
    pub returns: DMatrix<f64>,
    pub weights: Vec<f64>,
}

impl ReturnPanel {
    pub fn new(dates: Vec<NaiveDate>, tenors: Vec<usize>, returns: DMatrix<f64>, half_life: f64) -> Result<Self> {
        if returns.nrows() != dates.len() || returns.ncols() != tenors.len() {
            return Err(CurveError::Shape(format!(
                "{}x{} returns for {} dates and {} tenors",
                returns.nrows(),
                returns.ncols(),
                dates.len(),
                tenors.len()
            )));
        }
        if returns.iter().any(|r| !r.is_finite()) {
            return Err(CurveError::DegenerateData("non-finite return in panel".into()));
        }
        let weights = exponential_weights(dates.len(), half_life)?;
        Ok(ReturnPanel {
            dates,
            tenors,
            returns,
            weights,
        })
    }

    /// Log returns between consecutive price rows. Rows with a missing or
    /// non-positive price are dropped before differencing.
    pub fn from_prices(
        dates: &[NaiveDate],
        tenors: Vec<usize>,
        prices: &[Vec<f64>],
        half_life: f64,
    ) -> Result<Self> {
        let k = tenors.len();
        let clean: Vec<(NaiveDate, &Vec<f64>)> = dates
            .iter()
            .zip(prices)
            .filter(|(_, row)| row.len() == k && row.iter().all(|p| p.is_finite() && *p > 0.0))
            .map(|(d, row)| (*d, row))
            .collect();
        if clean.len() < 3 {
            return Err(CurveError::DegenerateData(format!(
                "need at least 3 complete price rows, found {}",
                clean.len()
            )));
        }
        let n = clean.len() - 1;
        let returns = DMatrix::from_fn(n, k, |r, c| (clean[r + 1].1[c] / clean[r].1[c]).ln());
        let dates = clean[1..].iter().map(|(d, _)| *d).collect();
        ReturnPanel::new(dates, tenors, returns, half_life)
    }

    pub fn n_rows(&self) -> usize {
        self.returns.nrows()
    }

    /// Weighted covariance `Σ_r w_r (x_r - μ)(x_r - μ)ᵀ` with the weighted
    /// mean `μ` removed.
    pub fn weighted_covariance(&self) -> DMatrix<f64> {
        let k = self.returns.ncols();
        let mean = DVector::from_fn(k, |c, _| {
            self.weights.iter().enumerate().map(|(r, w)| w * self.returns[(r, c)]).sum()
        });
        let mut cov = DMatrix::<f64>::zeros(k, k);
        for (r, w) in self.weights.iter().enumerate() {
            let d = self.returns.row(r).transpose() - &mean;
            cov += (&d * d.transpose()) * *w;
        }
        (&cov + cov.transpose()) * 0.5
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    /// Unit loading vectors as columns, largest variance first.
    pub components: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    /// Cumulative share of variance explained by the first `k + 1` components.
    pub explained_fraction: Vec<f64>,
    /// Set when some eigenvalues vanish (fewer informative rows than tenors,
    /// or collinear tenors); those eigenvalues are kept as zeros.
    pub rank_deficient: bool,
}

impl PcaResult {
    pub fn from_covariance(cov: &DMatrix<f64>) -> Self {
        let (values, components) = sorted_symmetric_eigen(cov);
        let top = values.first().copied().unwrap_or(0.0).max(0.0);
        let tol = 1e-12 * top;
        let rank_deficient = values.iter().any(|v| *v <= tol);
        let eigenvalues: Vec<f64> = values.iter().map(|v| if *v <= tol { 0.0 } else { *v }).collect();
        let total: f64 = eigenvalues.iter().sum();
        let mut acc = 0.0;
        let explained_fraction = eigenvalues
            .iter()
            .map(|v| {
                acc += v;
                if total > 0.0 {
                    acc / total
                } else {
                    0.0
                }
            })
            .collect();
        PcaResult {
            components,
            eigenvalues,
            explained_fraction,
            rank_deficient,
        }
    }

    /// `√λ_k v_k`, the component scaled to its standard deviation.
    pub fn scaled_component(&self, k: usize) -> DVector<f64> {
        self.components.column(k) * self.eigenvalues[k].max(0.0).sqrt()
    }
}

/// Eigen-decomposition of the weighted covariance of the panel.
pub fn weighted_pca(panel: &ReturnPanel) -> Result<PcaResult> {
    if panel.n_rows() < 2 || panel.returns.ncols() < 2 {
        return Err(CurveError::DegenerateData(format!(
            "PCA needs at least 2 rows and 2 tenors, got {}x{}",
            panel.n_rows(),
            panel.returns.ncols()
        )));
    }
    Ok(PcaResult::from_covariance(&panel.weighted_covariance()))
}

/// `C_ab = Σ_ij p_i p_j ρ_ij e^{-β_i τ_a - β_j τ_b}` over tenor offsets `τ`.
pub fn instantaneous_covariance(spec: &FactorSpec, tenors: &[f64]) -> DMatrix<f64> {
    let n = spec.n_factors();
    let (beta, p, rho) = (spec.beta(), spec.p_const(), spec.rho());
    let k = tenors.len();
    let load = DMatrix::from_fn(k, n, |a, i| p[i] * (-beta[i] * tenors[a]).exp());
    &load * rho * load.transpose()
}

/// The two non-trivial principal components of the model's instantaneous
/// covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelLoadings {
    pub components: [DVector<f64>; 2],
    pub eigenvalues: [f64; 2],
}

/// Leading components of `C` for a two-factor spec. `C = B Bᵀ` has rank two,
/// so they come from the 2×2 Gram matrix `BᵀB`.
pub fn model_implied_loadings(spec: &FactorSpec, tenors: &[f64]) -> Result<ModelLoadings> {
    if spec.n_factors() != 2 {
        return Err(CurveError::Unsupported(format!(
            "model loadings need a two-factor spec, got {} factors",
            spec.n_factors()
        )));
    }
    let (beta, p, rho) = (spec.beta(), spec.p_const(), spec.rho()[(0, 1)]);
    loadings_from_parts(beta[0], beta[1], p[0], p[1], rho, tenors)
}

fn loadings_from_parts(b0: f64, b1: f64, p0: f64, p1: f64, rho: f64, tenors: &[f64]) -> Result<ModelLoadings> {
    let k = tenors.len();
    // B = A chol(ρ), chol(ρ) = [[1, 0], [ρ, √(1 - ρ²)]]
    let s = (1.0 - rho * rho).max(0.0).sqrt();
    let b = DMatrix::from_fn(k, 2, |a, c| {
        let x0 = p0 * (-b0 * tenors[a]).exp();
        let x1 = p1 * (-b1 * tenors[a]).exp();
        if c == 0 {
            x0 + rho * x1
        } else {
            s * x1
        }
    });
    let g = b.transpose() * &b;
    let gram = Matrix2::new(g[(0, 0)], g[(0, 1)], g[(1, 0)], g[(1, 1)]);
    let eig = gram.symmetric_eigen();
    let order = if eig.eigenvalues[0] >= eig.eigenvalues[1] { [0, 1] } else { [1, 0] };
    let mut comps: Vec<DVector<f64>> = Vec::with_capacity(2);
    let mut vals = [0.0; 2];
    for (slot, &o) in order.iter().enumerate() {
        let mu = eig.eigenvalues[o].max(0.0);
        vals[slot] = mu;
        let v = DVector::from_column_slice(&[eig.eigenvectors[(0, o)], eig.eigenvectors[(1, o)]]);
        let mut u = &b * v;
        let norm = u.norm();
        if norm > 0.0 {
            u /= norm;
        }
        let (mut best, mut best_abs) = (0usize, -1.0f64);
        for (i, x) in u.iter().enumerate() {
            if x.abs() > best_abs + 1e-12 {
                best = i;
                best_abs = x.abs();
            }
        }
        if u[best] < 0.0 {
            u.neg_mut();
        }
        comps.push(u);
    }
    let second = comps.pop().expect("two components");
    let first = comps.pop().expect("two components");
    Ok(ModelLoadings {
        components: [first, second],
        eigenvalues: vals,
    })
}

/// Result of fitting `(β, vol ratio, ρ)` to the leading historical components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoFactorFit {
    pub beta: f64,
    pub vol_ratio: f64,
    pub rho: f64,
    /// Long-factor volatility `p_L` that best scales the shapes.
    pub level: f64,
    /// Sum of squared differences of the scaled components.
    pub residual: f64,
    pub converged: bool,
    /// Set when a parameter ended on the edge of its search box.
    pub at_boundary: bool,
}

impl TwoFactorFit {
    /// The fitted spec with `β_L = 0`, `p = q = (ratio, 1)`.
    pub fn spec(&self, epsilon: f64) -> Result<FactorSpec> {
        FactorSpec::two_factor(self.beta, self.vol_ratio, self.rho, epsilon)
    }
}

const BETA_MAX: f64 = 6.0;
const RATIO_MIN: f64 = 0.05;
const RATIO_MAX: f64 = 20.0;
const RHO_MAX: f64 = 0.999;

fn residual_at(target: &[DVector<f64>; 2], tenors: &[f64], beta: f64, ratio: f64, rho: f64) -> (f64, f64) {
    let Ok(model) = loadings_from_parts(beta, 0.0, ratio, 1.0, rho, tenors) else {
        return (f64::INFINITY, 0.0);
    };
    let mut shapes = [DVector::zeros(0), DVector::zeros(0)];
    for k in 0..2 {
        let mut s = &model.components[k] * model.eigenvalues[k].sqrt();
        if s.dot(&target[k]) < 0.0 {
            s.neg_mut();
        }
        shapes[k] = s;
    }
    let num: f64 = (0..2).map(|k| shapes[k].dot(&target[k])).sum();
    let den: f64 = (0..2).map(|k| shapes[k].dot(&shapes[k])).sum();
    if !(den > 0.0) {
        return (f64::INFINITY, 0.0);
    }
    // the scaled components are linear in the common level p_L
    let level = num / den;
    let r: f64 = (0..2).map(|k| (&shapes[k] * level - &target[k]).norm_squared()).sum();
    (r, level)
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Box-constrained parameters from unconstrained coordinates.
fn from_free(x: &[f64]) -> (f64, f64, f64) {
    let beta = BETA_MAX * logistic(x[0]);
    let ratio = RATIO_MIN * (RATIO_MAX / RATIO_MIN).powf(logistic(x[1]));
    let rho = RHO_MAX * (2.0 * logistic(x[2]) - 1.0);
    (beta, ratio, rho)
}

fn to_free(beta: f64, ratio: f64, rho: f64) -> [f64; 3] {
    [
        logit(beta / BETA_MAX),
        logit((ratio / RATIO_MIN).ln() / (RATIO_MAX / RATIO_MIN).ln()),
        logit((rho / RHO_MAX + 1.0) / 2.0),
    ]
}

/// Outcome of a Nelder-Mead run.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
}

/// Derivative-free Nelder-Mead simplex search from `start` with initial step
/// `step` along each axis.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, start: &[f64], step: f64, tol: f64, max_iter: usize) -> Minimum {
    let n = start.len();
    let mut pts: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut converged = false;
    for _ in 0..max_iter {
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        let spread = (vals[n] - vals[0]).abs();
        let size = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        // a collapsed simplex has converged even when the objective sits at rounding noise
        if size < 1e-10 || spread <= tol * vals[0].abs() && size < 1e-6 {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (pts[n][j] - centroid[j])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < vals[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < vals[n].min(fr) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    pts[i] = (0..n).map(|j| pts[0][j] + 0.5 * (pts[i][j] - pts[0][j])).collect();
                    vals[i] = f(&pts[i]);
                }
            }
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| vals[a].partial_cmp(&vals[b]).unwrap_or(std::cmp::Ordering::Equal))
        .expect("non-empty simplex");
    Minimum {
        x: pts[best].clone(),
        value: vals[best],
        converged,
    }
}

/// Least-squares fit of the two-factor model (`β_L = 0`) to the first two
/// scaled principal components: grid over `β ∈ [0.05, 3]`, ratio `∈ [1, 5]`,
/// `ρ ∈ [-0.9, 0.9]`, then Nelder-Mead from the best grid points.
pub fn fit_two_factor_to_pca(target: &PcaResult, tenors: &[f64]) -> Result<TwoFactorFit> {
    if target.eigenvalues.len() < 2 || target.components.nrows() != tenors.len() {
        return Err(CurveError::Shape(format!(
            "target has {} components over {} tenors, {} tenor offsets given",
            target.eigenvalues.len(),
            target.components.nrows(),
            tenors.len()
        )));
    }
    let goal = [target.scaled_component(0), target.scaled_component(1)];
    let mut grid = Vec::new();
    for bi in 0..13 {
        let beta = 0.05 * (3.0f64 / 0.05).powf(bi as f64 / 12.0);
        for ri in 0..9 {
            let ratio = 1.0 + 0.5 * ri as f64;
            for ci in 0..10 {
                let rho = -0.9 + 0.2 * ci as f64;
                grid.push((residual_at(&goal, tenors, beta, ratio, rho).0, beta, ratio, rho));
            }
        }
    }
    grid.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let objective = |x: &[f64]| {
        let (beta, ratio, rho) = from_free(x);
        residual_at(&goal, tenors, beta, ratio, rho).0
    };
    let mut best: Option<Minimum> = None;
    for &(_, beta, ratio, rho) in grid.iter().take(5) {
        let start = to_free(beta, ratio, rho);
        let mut run = nelder_mead(objective, &start, 0.3, 1e-14, 4000);
        // restart once from the optimum to shake off a collapsed simplex
        let again = nelder_mead(objective, &run.x, 0.05, 1e-14, 4000);
        if again.value <= run.value {
            run = Minimum {
                converged: again.converged,
                ..again
            };
        }
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("grid is non-empty");
    let (beta, ratio, rho) = from_free(&best.x);
    let (residual, level) = residual_at(&goal, tenors, beta, ratio, rho);
    let near = |v: f64, edge: f64| (v - edge).abs() <= 1e-3 * edge.abs().max(1.0);
    let at_boundary = near(beta, BETA_MAX)
        || beta < 1e-4
        || near(ratio, RATIO_MIN)
        || near(ratio, RATIO_MAX)
        || near(rho.abs(), RHO_MAX);
    Ok(TwoFactorFit {
        beta,
        vol_ratio: ratio,
        rho,
        level,
        residual,
        converged: best.converged,
        at_boundary,
    })
}

/// Model term structures of instantaneous volatility and correlation
/// relative to a reference tenor.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelStatistics {
    /// `√(C_aa / C_rr)`.
    pub vol_ratio_curve: Vec<f64>,
    /// `C_ar / √(C_aa C_rr)`.
    pub correlation_curve: Vec<f64>,
}

/// `reference` is a 1-based index into `tenors`.
pub fn model_statistics(spec: &FactorSpec, tenors: &[f64], reference: usize) -> Result<ModelStatistics> {
    if reference == 0 || reference > tenors.len() {
        return Err(CurveError::OutOfRange(format!(
            "reference tenor {reference} outside 1..={}",
            tenors.len()
        )));
    }
    let c = instantaneous_covariance(spec, tenors);
    let r = reference - 1;
    let crr = c[(r, r)];
    let vol_ratio_curve = (0..tenors.len()).map(|a| (c[(a, a)] / crr).sqrt()).collect();
    let correlation_curve = (0..tenors.len())
        .map(|a| {
            if a == r {
                1.0
            } else {
                (c[(a, r)] / (c[(a, a)] * crr).sqrt()).clamp(-1.0, 1.0)
            }
        })
        .collect();
    Ok(ModelStatistics {
        vol_ratio_curve,
        correlation_curve,
    })
}

/// Realised short- and long-factor shocks, one per return observation.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSeries {
    /// Observation dates, empty until attached with [`FactorSeries::with_dates`].
    pub dates: Vec<NaiveDate>,
    pub short_shocks: Vec<f64>,
    pub long_shocks: Vec<f64>,
}

impl FactorSeries {
    pub fn with_dates(mut self, dates: Vec<NaiveDate>) -> Result<Self> {
        if dates.len() != self.short_shocks.len() {
            return Err(CurveError::Shape(format!(
                "{} dates for {} shocks",
                dates.len(),
                self.short_shocks.len()
            )));
        }
        self.dates = dates;
        Ok(self)
    }
}

/// Below this `β (τ2 - τ1)` the two tenors cannot separate the factors.
const SEPARATION_TOLERANCE: f64 = 1e-8;

/// Inverts `r1 = e^{-β τ1} S + L`, `r2 = e^{-β τ2} S + L` for the shocks.
pub fn extract_factor_series(front: &[f64], back: &[f64], beta: f64, tau1: f64, tau2: f64) -> Result<FactorSeries> {
    if front.len() != back.len() {
        return Err(CurveError::Shape(format!(
            "return series have lengths {} and {}",
            front.len(),
            back.len()
        )));
    }
    if !(beta > 0.0) || (beta * (tau2 - tau1)).abs() < SEPARATION_TOLERANCE {
        return Err(CurveError::SingularInversion(format!(
            "β = {beta} with tenors {tau1} and {tau2} cannot separate short and long factors"
        )));
    }
    let (e1, e2) = ((-beta * tau1).exp(), (-beta * tau2).exp());
    let gap = (-beta * (tau2 - tau1)).exp();
    let short_shocks = front.iter().zip(back).map(|(r1, r2)| (r1 - r2) / (e1 - e2)).collect();
    let long_shocks = front.iter().zip(back).map(|(r1, r2)| (gap * r1 - r2) / (gap - 1.0)).collect();
    Ok(FactorSeries {
        dates: Vec::new(),
        short_shocks,
        long_shocks,
    })
}

/// Sample correlation of the two extracted shock series.
pub fn shock_correlation(series: &FactorSeries) -> f64 {
    let (x, y) = (&series.short_shocks, &series.long_shocks);
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Swaption vol target: realised swap/futures ratio times the vanilla vol.
pub fn relative_value_target(realized_ratio: f64, implied_vanilla_vol: f64) -> Result<f64> {
    if !(realized_ratio > 0.0 && implied_vanilla_vol > 0.0) {
        return Err(CurveError::Domain(format!(
            "ratio {realized_ratio} and vol {implied_vanilla_vol} must be > 0"
        )));
    }
    Ok(realized_ratio * implied_vanilla_vol)
}

fn log_return_std(prices: &[f64]) -> Result<f64> {
    if prices.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
        return Err(CurveError::DegenerateData("prices must be positive".into()));
    }
    let r: Vec<f64> = prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let n = r.len() as f64;
    let mean = r.iter().sum::<f64>() / n;
    Ok((r.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt())
}

/// Standard deviation of swap log returns over that of futures log returns.
pub fn realized_swap_futures_ratio(swap: &[f64], futures: &[f64]) -> Result<f64> {
    if swap.len() != futures.len() {
        return Err(CurveError::Shape(format!(
            "series have lengths {} and {}",
            swap.len(),
            futures.len()
        )));
    }
    if swap.len() < 3 {
        return Err(CurveError::DegenerateData(format!(
            "need at least 3 prices for a return deviation, got {}",
            swap.len()
        )));
    }
    let f = log_return_std(futures)?;
    if !(f > 0.0) {
        return Err(CurveError::DegenerateData("futures returns have zero variance".into()));
    }
    Ok(log_return_std(swap)? / f)
}
