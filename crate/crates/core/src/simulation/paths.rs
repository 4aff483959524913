//! Exact-in-distribution simulation of the mean-reverting factors and
//! reconstruction of futures prices along the paths.
//!
//! Over a step `[a, b]` each factor decays by `e^{-β_i (b - a)}` and picks up
//! a Gaussian increment whose covariance follows from the Itô isometry, so
//! there is no discretisation bias at any step size.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{CurveError, Result};
use crate::factor_model::{decayed_integral, factor_loadings, quadratic_variation, CalibratedModel, FactorVolatility};
use crate::linalg::cholesky_psd;
use crate::simulation::rng::PathRng;
use crate::termstructure::{merged_cuts, ForwardCurve};

/// Strictly increasing positive simulation dates.
#[derive(Debug, Clone, PartialEq)]
pub struct SimGrid {
    dates: Vec<f64>,
}

impl SimGrid {
    pub fn new(dates: Vec<f64>) -> Result<Self> {
        if dates.is_empty() {
            return Err(CurveError::InvalidSpec("simulation grid is empty".into()));
        }
        if !(dates[0] > 0.0) || dates.iter().any(|d| !d.is_finite()) {
            return Err(CurveError::Domain("simulation dates must be finite and after 0".into()));
        }
        if dates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CurveError::Ordering("simulation dates must be strictly increasing".into()));
        }
        Ok(SimGrid { dates })
    }

    /// `n` equal steps up to `horizon`.
    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        SimGrid::new((1..=n).map(|k| horizon * k as f64 / n as f64).collect())
    }

    pub fn dates(&self) -> &[f64] {
        &self.dates
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub(crate) fn step_start(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.dates[k - 1]
        }
    }
}

/// `∫_a^b e^{-(β_i + β_j)(b - s)} p_i(s) p_j(s) c_ij ds` between the factors
/// of two volatility structures.
pub(crate) fn step_covariance_between<A, B>(x: &A, y: &B, corr: &DMatrix<f64>, a: f64, b: f64) -> DMatrix<f64>
where
    A: FactorVolatility + ?Sized,
    B: FactorVolatility + ?Sized,
{
    let cuts = merged_cuts(x.time_scale(), y.time_scale(), a, b);
    DMatrix::from_fn(x.n_factors(), y.n_factors(), |i, j| {
        let c = corr[(i, j)];
        if c == 0.0 {
            return 0.0;
        }
        let (bi, bj) = (x.mean_reversion(i), y.mean_reversion(j));
        let mut integral = 0.0;
        for w in cuts.windows(2) {
            let scale = x.time_scale().value_at(w[0]) * y.time_scale().value_at(w[0]);
            integral += scale * decayed_integral(bi, bj, b, b, w[0], w[1]);
        }
        x.time_weight(i) * y.time_weight(j) * c * integral
    })
}

/// Covariance of the factor increments over `[a, b]`.
pub fn step_covariance(m: &CalibratedModel, a: f64, b: f64) -> Result<DMatrix<f64>> {
    if !(a >= 0.0 && b.is_finite()) {
        return Err(CurveError::Domain(format!("invalid step [{a}, {b}]")));
    }
    if a >= b {
        return Err(CurveError::Ordering(format!("step start {a} not before end {b}")));
    }
    Ok(step_covariance_between(m, m, m.spec().rho(), a, b))
}

/// Simulated factor values, laid out path-major: `[path][date][factor]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    pub n_paths: usize,
    pub grid: SimGrid,
    pub n_factors: usize,
    pub seed: u64,
    data: Vec<f64>,
}

impl PathSet {
    pub fn from_raw(n_paths: usize, grid: SimGrid, n_factors: usize, seed: u64, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_paths * grid.len() * n_factors {
            return Err(CurveError::Shape(format!(
                "{} values for {n_paths} paths x {} dates x {n_factors} factors",
                data.len(),
                grid.len()
            )));
        }
        Ok(PathSet {
            n_paths,
            grid,
            n_factors,
            seed,
            data,
        })
    }

    /// `Y(t_date)` on one path.
    pub fn factors(&self, path: usize, date: usize) -> &[f64] {
        let start = (path * self.grid.len() + date) * self.n_factors;
        &self.data[start..start + self.n_factors]
    }

    /// One factor at one date across all paths.
    pub fn factor_column(&self, date: usize, factor: usize) -> Vec<f64> {
        (0..self.n_paths).map(|p| self.factors(p, date)[factor]).collect()
    }

    pub fn raw(&self) -> &[f64] {
        &self.data
    }
}

/// Per-step decay factors and Cholesky factors of the step covariances.
pub(crate) struct Stepper {
    pub decay: Vec<Vec<f64>>,
    pub chol: Vec<DMatrix<f64>>,
}

impl Stepper {
    pub fn new(m: &CalibratedModel, grid: &SimGrid) -> Result<Self> {
        let n = m.n_factors();
        let mut decay = Vec::with_capacity(grid.len());
        let mut chol = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            let (a, b) = (grid.step_start(k), grid.dates()[k]);
            decay.push((0..n).map(|i| (-m.mean_reversion(i) * (b - a)).exp()).collect());
            chol.push(cholesky_psd(&step_covariance(m, a, b)?)?);
        }
        Ok(Stepper { decay, chol })
    }

    /// `y ← decay ∘ y + L_k z`.
    #[inline]
    pub fn advance(&self, k: usize, y: &mut [f64], z: &[f64]) {
        let l = &self.chol[k];
        let n = y.len();
        for i in 0..n {
            let mut inc = 0.0;
            for j in 0..=i {
                inc += l[(i, j)] * z[j];
            }
            y[i] = self.decay[k][i] * y[i] + inc;
        }
    }
}

/// Simulates `n_paths` factor paths; path `p` draws from stream `(seed, p)`.
pub fn simulate_factors(m: &CalibratedModel, grid: &SimGrid, n_paths: usize, seed: u64) -> Result<PathSet> {
    simulate_factor_block(m, grid, 0, n_paths, seed)
}

/// Paths `first .. first + n_paths` of the run keyed by `seed`.
pub fn simulate_factor_block(
    m: &CalibratedModel,
    grid: &SimGrid,
    first: usize,
    n_paths: usize,
    seed: u64,
) -> Result<PathSet> {
    if n_paths == 0 {
        return Err(CurveError::InvalidSpec("need at least one path".into()));
    }
    let n = m.n_factors();
    let stepper = Stepper::new(m, grid)?;
    let stride = grid.len() * n;
    let mut data = vec![0.0; n_paths * stride];
    data.par_chunks_mut(stride).enumerate().for_each(|(p, out)| {
        let mut rng = PathRng::new(seed, (first + p) as u64);
        let mut y = vec![0.0; n];
        let mut z = vec![0.0; n];
        for k in 0..grid.len() {
            rng.fill_normal(&mut z);
            stepper.advance(k, &mut y, &z);
            out[k * n..(k + 1) * n].copy_from_slice(&y);
        }
    });
    PathSet::from_raw(n_paths, grid.clone(), n, seed, data)
}

/// Futures prices along simulated paths, laid out `[path][date][expiry]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePaths {
    pub n_paths: usize,
    pub dates: Vec<f64>,
    pub expiries: Vec<f64>,
    data: Vec<f64>,
}

impl CurvePaths {
    pub fn price(&self, path: usize, date: usize, expiry: usize) -> f64 {
        self.data[(path * self.dates.len() + date) * self.expiries.len() + expiry]
    }

    /// One (date, expiry) cell across all paths.
    pub fn column(&self, date: usize, expiry: usize) -> Vec<f64> {
        (0..self.n_paths).map(|p| self.price(p, date, expiry)).collect()
    }
}

/// Applies the futures reconstruction formula to every path, date and
/// requested expiry.
pub fn curve_paths(m: &CalibratedModel, curve: &ForwardCurve, paths: &PathSet, expiries: &[f64]) -> Result<CurvePaths> {
    if paths.n_factors != m.n_factors() {
        return Err(CurveError::Shape(format!(
            "paths carry {} factors, model has {}",
            paths.n_factors,
            m.n_factors()
        )));
    }
    let dates = paths.grid.dates().to_vec();
    let (nd, ne) = (dates.len(), expiries.len());
    let mut loadings = Vec::with_capacity(nd * ne);
    let mut offsets = Vec::with_capacity(nd * ne);
    for &t in &dates {
        for &big_t in expiries {
            if t > big_t {
                return Err(CurveError::Domain(format!("contract {big_t} has expired before {t}")));
            }
            loadings.push(factor_loadings(m, big_t, t));
            offsets.push(curve.price(big_t)?.ln() - 0.5 * quadratic_variation(m, big_t, t)?);
        }
    }
    let stride = nd * ne;
    let mut data = vec![0.0; paths.n_paths * stride];
    data.par_chunks_mut(stride).enumerate().for_each(|(p, out)| {
        for d in 0..nd {
            let y = paths.factors(p, d);
            for e in 0..ne {
                let c = d * ne + e;
                let x: f64 = loadings[c].iter().zip(y).map(|(l, v)| l * v).sum();
                out[c] = (offsets[c] + x).exp();
            }
        }
    });
    Ok(CurvePaths {
        n_paths: paths.n_paths,
        dates,
        expiries: expiries.to_vec(),
        data,
    })
}
