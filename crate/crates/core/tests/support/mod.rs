//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use chrono::NaiveDate;
use curvekit::calibration::{calibrate, CalibrationMode, VanillaVolStrip};
use curvekit::factor_model::{CalibratedModel, CrossCorrelation, FactorSpec};
use curvekit::pricing::{CallPut, FxSpec, SamplingSchedule};
use curvekit::termstructure::{ContractEntry, ContractSchedule, ForwardCurve};
use nalgebra::DMatrix;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn bundle() -> PathBuf {
    fixtures().join("wti_bundle")
}

pub fn as_of() -> NaiveDate {
    NaiveDate::from_ymd_opt(2014, 3, 19).unwrap()
}

/// Monthly contracts: futures expire at `0.05 + k/12`, options three days earlier.
pub fn monthly_schedule(n: usize) -> ContractSchedule {
    let entries = (0..n)
        .map(|k| {
            let fut = 0.05 + k as f64 / 12.0;
            ContractEntry::new(format!("C{k}"), fut - 3.0 / 365.0, fut).unwrap()
        })
        .collect();
    ContractSchedule::new(entries).unwrap()
}

/// Gently declining ATM vols, `0.19 + 0.02 e^{-T/2}`.
pub fn mild_strip(s: &ContractSchedule) -> VanillaVolStrip {
    let vols: Vec<f64> = s
        .entries()
        .iter()
        .map(|e| 0.19 + 0.02 * (-e.futures_expiry.years() / 2.0).exp())
        .collect();
    VanillaVolStrip::from_schedule(s, &vols).unwrap()
}

pub fn backwardated_curve(s: &ContractSchedule) -> ForwardCurve {
    let pts = s
        .entries()
        .iter()
        .enumerate()
        .map(|(k, e)| (e.futures_expiry.years(), 80.0 + 20.0 * (-(k as f64) / 24.0).exp()))
        .collect();
    ForwardCurve::new(as_of(), pts).unwrap()
}

/// Mean reversion 0.35, short/long vol ratio 1.6, correlation -0.2.
pub fn wti_spec(epsilon: f64) -> FactorSpec {
    FactorSpec::two_factor(0.35, 1.6, -0.2, epsilon).unwrap()
}

pub fn wti_model(n: usize) -> (CalibratedModel, ForwardCurve) {
    let s = monthly_schedule(n);
    let m = calibrate(CalibrationMode::Nonseasonal, &wti_spec(0.0), &mild_strip(&s)).unwrap();
    (m, backwardated_curve(&s))
}

// ---------------------------------------------------------------- quadrature

fn gauss_kronrod(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    const XGK: [f64; 8] = [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.000000000000000000000000000000000,
    ];
    const WGK: [f64; 8] = [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ];
    const WG: [f64; 4] = [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let (f1, f2) = (f(c - h * XGK[j]), f(c + h * XGK[j]));
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature to relative tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, whole: f64, depth: u32) -> f64 {
        let (v, err) = gauss_kronrod(f, a, b);
        if depth == 0 || err <= tol * whole.abs().max(v.abs()) || err < 1e-300 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, tol, whole, depth - 1) + rec(f, m, b, tol, whole, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (rough, _) = gauss_kronrod(f, a, b);
    rec(f, a, b, tol, rough, 40)
}

/// Integrates piecewise between the given cut points.
pub fn integrate_pieces(f: &dyn Fn(f64) -> f64, a: f64, b: f64, cuts: &[f64]) -> f64 {
    let mut pts = vec![a];
    pts.extend(cuts.iter().copied().filter(|c| *c > a && *c < b));
    pts.push(b);
    pts.windows(2).map(|w| integrate(f, w[0], w[1], 1e-14)).sum()
}

// ------------------------------------------------------- model re-derivation

/// `α(s)`: knot `k` applies on `[t_{k-1}, t_k)`, the last knot beyond.
pub fn alpha_at(m: &CalibratedModel, s: f64) -> f64 {
    let t = m.schedule().option_expiries();
    let k = t.iter().take(t.len() - 1).filter(|&&tk| tk <= s).count();
    m.alpha_knots()[k]
}

/// Instantaneous vol of factor `i` seen by contract `T` at time `s`.
pub fn factor_vol(m: &CalibratedModel, i: usize, s: f64, expiry: f64) -> f64 {
    let spec = m.spec();
    let eps = spec.epsilon();
    let time = spec.p_const()[i].powf(1.0 - eps) * alpha_at(m, s);
    let lam = if eps == 0.0 { 1.0 } else { (spec.q_const()[i] * m.lambda_at(expiry)).powf(eps) };
    time * lam * (-spec.beta()[i] * (expiry - s)).exp()
}

pub fn log_covariance_oracle(m: &CalibratedModel, t1: f64, t2: f64, a: f64, b: f64) -> f64 {
    cross_oracle(m, m, m.spec().rho(), t1, t2, a, b)
}

pub fn cross_oracle(
    m1: &CalibratedModel,
    m2: &CalibratedModel,
    corr: &DMatrix<f64>,
    t1: f64,
    t2: f64,
    a: f64,
    b: f64,
) -> f64 {
    let f = |s: f64| {
        let mut v = 0.0;
        for i in 0..m1.spec().n_factors() {
            for j in 0..m2.spec().n_factors() {
                v += corr[(i, j)] * factor_vol(m1, i, s, t1) * factor_vol(m2, j, s, t2);
            }
        }
        v
    };
    let mut cuts = m1.schedule().option_expiries();
    cuts.extend(m2.schedule().option_expiries());
    cuts.sort_by(f64::total_cmp);
    integrate_pieces(&f, a, b, &cuts)
}

/// Factor increment covariance over `[a, b]` by quadrature.
pub fn step_covariance_oracle(m: &CalibratedModel, a: f64, b: f64) -> DMatrix<f64> {
    let spec = m.spec();
    let n = spec.n_factors();
    let eps = spec.epsilon();
    let cuts = m.schedule().option_expiries();
    DMatrix::from_fn(n, n, |i, j| {
        let w = spec.p_const()[i].powf(1.0 - eps) * spec.p_const()[j].powf(1.0 - eps) * spec.rho()[(i, j)];
        let (bi, bj) = (spec.beta()[i], spec.beta()[j]);
        let f = |s: f64| alpha_at(m, s).powi(2) * (-(bi + bj) * (b - s)).exp();
        w * integrate_pieces(&f, a, b, &cuts)
    })
}

// --------------------------------------------------------------- Black oracle

/// Textbook Black-76 with the statrs normal CDF.
pub fn black_oracle(f: f64, k: f64, vol: f64, t: f64, df: f64, cp: CallPut) -> f64 {
    let n = Normal::new(0.0, 1.0).unwrap();
    let sd = vol * t.sqrt();
    let d1 = ((f / k).ln() + 0.5 * sd * sd) / sd;
    let d2 = d1 - sd;
    match cp {
        CallPut::Call => df * (f * n.cdf(d1) - k * n.cdf(d2)),
        CallPut::Put => df * (k * n.cdf(-d2) - f * n.cdf(-d1)),
    }
}

// ------------------------------------------------------------ brute-force MC

pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.0)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        rand_distr::Uniform::new(lo, hi).unwrap().sample(&mut self.0)
    }

    pub fn normals(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }
}

/// Lower Cholesky factor by the textbook recurrence, zero columns for
/// numerically singular pivots.
pub fn cholesky(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let d = a[(j, j)] - (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<f64>();
        let pivot = if d > 1e-14 * a[(j, j)].abs().max(1e-300) { d.sqrt() } else { 0.0 };
        l[(j, j)] = pivot;
        for i in j + 1..n {
            let s = a[(i, j)] - (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<f64>();
            l[(i, j)] = if pivot > 0.0 { s / pivot } else { 0.0 };
        }
    }
    l
}

/// Joint law of `log F^{T_j}(t_j) - log F^{T_j}(0)` for fixings of several
/// models: mean `-½ QV_j` and the quadrature covariance.
pub struct JointLogLaw {
    pub mean: Vec<f64>,
    pub chol: DMatrix<f64>,
}

impl JointLogLaw {
    /// `legs[j] = (model index, expiry, fixing time)`; `corr` is the stacked
    /// factor correlation with the models' factors in order.
    pub fn new(models: &[&CalibratedModel], corr: &DMatrix<f64>, legs: &[(usize, f64, f64)]) -> Self {
        let offs: Vec<usize> = models
            .iter()
            .scan(0, |o, m| {
                let v = *o;
                *o += m.spec().n_factors();
                Some(v)
            })
            .collect();
        let block = |a: usize, b: usize| {
            let (na, nb) = (models[a].spec().n_factors(), models[b].spec().n_factors());
            corr.view((offs[a], offs[b]), (na, nb)).into_owned()
        };
        let n = legs.len();
        let cov = DMatrix::from_fn(n, n, |i, j| {
            let (a, ta, sa) = legs[i];
            let (b, tb, sb) = legs[j];
            cross_oracle(models[a], models[b], &block(a, b), ta, tb, 0.0, sa.min(sb))
        });
        JointLogLaw {
            mean: (0..n).map(|i| -0.5 * cov[(i, i)]).collect(),
            chol: cholesky(&cov),
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        let z = rng.normals(self.mean.len());
        (0..self.mean.len())
            .map(|i| self.mean[i] + (0..=i).map(|k| self.chol[(i, k)] * z[k]).sum::<f64>())
            .collect()
    }
}

/// Joint lognormal law of the quanto average `G = Σ w_k F^{T_k}(t_k) Y(t_k)`
/// for a constant FX vol: legs `log F` then `log Y`, with `Y = 1/X` so the
/// commodity-FX covariance carries `-σ_X ρ_x`.
pub struct QuantoLaw {
    pub cov: DMatrix<f64>,
    chol: DMatrix<f64>,
    /// `w_k F^{T_k}(0) E[Y(t_k)]`.
    pub forwards: Vec<f64>,
}

impl QuantoLaw {
    pub fn new(m: &CalibratedModel, curve: &ForwardCurve, fx: &FxSpec, sched: &SamplingSchedule) -> Self {
        let sx = fx.sigma_x().value_at(0.0);
        let rx = fx.rho_x().to_vec();
        let en = sched.entries();
        let k = en.len();
        let cuts = m.schedule().option_expiries();
        let cov = DMatrix::from_fn(2 * k, 2 * k, |i, j| {
            let (a, b) = (i % k, j % k);
            let t = en[a].sample_date.years().min(en[b].sample_date.years());
            let (ta, tb) = (en[a].contract_expiry.years(), en[b].contract_expiry.years());
            match (i < k, j < k) {
                (true, true) => log_covariance_oracle(m, ta, tb, 0.0, t),
                (false, false) => sx * sx * t,
                _ => {
                    let big_t = if i < k { ta } else { tb };
                    let f = |s: f64| (0..rx.len()).map(|f| factor_vol(m, f, s, big_t) * -sx * rx[f]).sum::<f64>();
                    integrate_pieces(&f, 0.0, t, &cuts)
                }
            }
        });
        let forwards = en
            .iter()
            .map(|s| s.weight() * curve.price(s.contract_expiry.years()).unwrap() * fx.forward_y(s.sample_date.years()))
            .collect();
        QuantoLaw {
            chol: cholesky(&cov),
            cov,
            forwards,
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> f64 {
        let k = self.forwards.len();
        let z = rng.normals(2 * k);
        let x: Vec<f64> = (0..2 * k).map(|i| (0..=i).map(|c| self.chol[(i, c)] * z[c]).sum()).collect();
        (0..k)
            .map(|j| {
                let var = self.cov[(j, j)] + self.cov[(j + k, j + k)] + 2.0 * self.cov[(j, j + k)];
                self.forwards[j] * (x[j] + x[j + k] - 0.5 * var).exp()
            })
            .sum()
    }
}

/// Stacked-factor simulation with one full Cholesky per step: the
/// brute-force alternative to per-asset de-correlation. Returns the factor
/// values at the last grid date.
pub fn stacked_factor_paths(
    models: &[&CalibratedModel],
    corr: &DMatrix<f64>,
    grid: &[f64],
    n_paths: usize,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut betas = Vec::new();
    let mut weights = Vec::new();
    let mut owner = Vec::new();
    for (a, m) in models.iter().enumerate() {
        let eps = m.spec().epsilon();
        for i in 0..m.spec().n_factors() {
            betas.push(m.spec().beta()[i]);
            weights.push(m.spec().p_const()[i].powf(1.0 - eps));
            owner.push(a);
        }
    }
    let n = betas.len();
    let mut steps = Vec::new();
    let mut prev = 0.0;
    for &t in grid {
        let cov = DMatrix::from_fn(n, n, |i, j| {
            let (mi, mj) = (models[owner[i]], models[owner[j]]);
            let f = |s: f64| {
                alpha_at(mi, s) * alpha_at(mj, s) * (-betas[i] * (t - s)).exp() * (-betas[j] * (t - s)).exp()
            };
            let mut cuts = mi.schedule().option_expiries();
            cuts.extend(mj.schedule().option_expiries());
            cuts.sort_by(f64::total_cmp);
            weights[i] * weights[j] * corr[(i, j)] * integrate_pieces(&f, prev, t, &cuts)
        });
        let decay: Vec<f64> = betas.iter().map(|b| (-b * (t - prev)).exp()).collect();
        steps.push((decay, cholesky(&cov)));
        prev = t;
    }
    let mut rng = Rng::new(seed);
    (0..n_paths)
        .map(|_| {
            let mut y = vec![0.0; n];
            for (decay, l) in &steps {
                let z = rng.normals(n);
                for i in 0..n {
                    y[i] = decay[i] * y[i] + (0..=i).map(|k| l[(i, k)] * z[k]).sum::<f64>();
                }
            }
            y
        })
        .collect()
}

pub fn cross(m: &[f64], rows: usize, cols: usize) -> CrossCorrelation {
    CrossCorrelation::new(DMatrix::from_row_slice(rows, cols, m)).unwrap()
}

// ------------------------------------------------------------------ statistics

pub fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Sample covariance and its standard error from the centred products.
pub fn cov_se(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mx, _) = mean_se(x);
    let (my, _) = mean_se(y);
    let prod: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    mean_se(&prod)
}

/// Loading of factor `i` on `log F^T(t)`.
pub fn loading(m: &CalibratedModel, i: usize, expiry: f64, t: f64) -> f64 {
    let spec = m.spec();
    let eps = spec.epsilon();
    let lam = if eps == 0.0 { 1.0 } else { (spec.q_const()[i] * m.lambda_at(expiry)).powf(eps) };
    lam * (-spec.beta()[i] * (expiry - t)).exp()
}

/// Within `k` combined standard errors.
pub fn within(a: f64, b: f64, se: f64, k: f64) -> bool {
    (a - b).abs() <= k * se
}
