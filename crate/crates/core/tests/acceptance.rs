//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints one PASS/FAIL line; exits non-zero if any fails.

mod support;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use curvekit::calibration::{
    calibrate, extract_factor_series, fit_two_factor_to_pca, implied_vanilla_vol, weighted_pca, CalibrationMode,
    ReturnPanel, SmileQuote, VolSurface,
};
use curvekit::commands::instrument_option;
use curvekit::factor_model::{
    cross_asset_log_covariance, log_covariance, quadratic_variation, CalibratedModel, CrossCorrelation, FactorSpec,
};
use curvekit::marketdata::load_bundle;
use curvekit::pricing::{
    asian_price, black_price, price, quanto_average_log_variance, quanto_price, quick_delta, smile_adjusted_price,
    strike_from_quick_delta, CallPut, FxSpec, OptionKind, OptionSpec, SampleEntry, SamplingSchedule,
};
use curvekit::sensitivity::{sensitivity_ladder, Bumps};
use curvekit::simulation::{
    curve_paths, simulate_factors, simulate_multi_asset, step_covariance, AssetUniverse, PathSet, SampleStats, SimGrid,
};
use curvekit::termstructure::{ContractEntry, ContractSchedule, ForwardCurve, PiecewiseConstant};
use nalgebra::DMatrix;
use support::*;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Cal-strip swaption on contracts `first..first + 12` of `s`.
fn cal_swaption(s: &ContractSchedule, curve: &ForwardCurve, first: usize, moneyness: f64) -> OptionSpec {
    let e = &s.entries()[first..first + 12];
    let expiry = e[0].option_expiry.years();
    let legs: Vec<(f64, f64, f64)> = e.iter().map(|c| (c.futures_expiry.years(), 1.0 / 12.0, 1.0)).collect();
    let atm: f64 = legs.iter().map(|l| l.1 * curve.price(l.0).unwrap()).sum();
    let sched = SamplingSchedule::swaption(expiry, &legs).unwrap();
    OptionSpec::new(OptionKind::Swaption, atm * moneyness, CallPut::Call, expiry, sched, (-0.01 * expiry).exp()).unwrap()
}

// 1 ------------------------------------------------------------------------

fn calibration_round_trip() -> Outcome {
    let s = monthly_schedule(36);
    let strip = mild_strip(&s);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let runs = [
        (CalibrationMode::Nonseasonal, 0.0),
        (CalibrationMode::Hybrid, 0.0),
        (CalibrationMode::Hybrid, 0.5),
        (CalibrationMode::Hybrid, 1.0),
        (CalibrationMode::Seasonal, 1.0),
    ];
    for (mode, eps) in runs {
        let m = calibrate(mode, &wti_spec(eps), &strip).map_err(err)?;
        for (q, e) in strip.quotes().iter().zip(s.entries()) {
            worst = worst.max((implied_vanilla_vol(&m, e).map_err(err)? - q.implied_vol).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-10 && secs < 1.0,
        format!("max vol error {worst:.2e} over 5 calibrations, {secs:.3} s"),
    )
}

// 2 ------------------------------------------------------------------------

fn hybrid_endpoints() -> Outcome {
    let s = monthly_schedule(36);
    let strip = mild_strip(&s);
    let curve = backwardated_curve(&s);
    let pairs = [
        (CalibrationMode::Nonseasonal, 0.0, "non-seasonal"),
        (CalibrationMode::Seasonal, 1.0, "seasonal"),
    ];
    let mut worst: f64 = 0.0;
    for (mode, eps, _) in pairs {
        let pure = calibrate(mode, &wti_spec(eps), &strip).map_err(err)?;
        let hybrid = calibrate(CalibrationMode::Hybrid, &wti_spec(eps), &strip).map_err(err)?;
        for first in [0, 12, 24] {
            for k in [0.9, 1.0, 1.1] {
                let opt = cal_swaption(&s, &curve, first, k);
                let a = price(&pure, &curve, &opt).map_err(err)?.price;
                let b = price(&hybrid, &curve, &opt).map_err(err)?.price;
                worst = worst.max((a - b).abs() / a.abs());
            }
        }
    }
    check(worst <= 1e-10, format!("max relative swaption difference {worst:.2e} (18 prices)"))
}

// 3 ------------------------------------------------------------------------

fn random_model(rng: &mut Rng, tiny: bool) -> CalibratedModel {
    let n = 1 + (rng.uniform(0.0, 3.0) as usize).min(2);
    let beta: Vec<f64> = (0..n)
        .map(|_| {
            if tiny {
                // sums reach down to 1e-12
                0.5e-12 * 10f64.powf(rng.uniform(0.0, 3.0))
            } else if rng.uniform(0.0, 1.0) < 0.2 {
                0.0
            } else {
                rng.uniform(0.01, 3.0)
            }
        })
        .collect();
    let b = DMatrix::from_fn(n, n, |_, _| rng.normal());
    let c = &b * b.transpose();
    let rho = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            1.0
        } else {
            c[(i, j)] / (c[(i, i)] * c[(j, j)]).sqrt()
        }
    });
    let p: Vec<f64> = (0..n).map(|_| rng.uniform(0.3, 2.0)).collect();
    let q: Vec<f64> = (0..n).map(|_| rng.uniform(0.3, 2.0)).collect();
    let eps = match rng.uniform(0.0, 4.0) as usize {
        0 => 0.0,
        1 => 1.0,
        _ => rng.uniform(0.0, 1.0),
    };
    let spec = FactorSpec::new(beta, p, q, rho, eps).unwrap();
    let k = 4 + rng.uniform(0.0, 6.0) as usize;
    let mut t = 0.0;
    let entries = (0..k)
        .map(|j| {
            t += rng.uniform(0.1, 0.5);
            ContractEntry::new(format!("R{j}"), t, t + rng.uniform(0.0, 0.1)).unwrap()
        })
        .collect();
    let sched = ContractSchedule::new(entries).unwrap();
    let alpha = (0..k).map(|_| rng.uniform(0.1, 0.5)).collect();
    let lambda = (0..k).map(|_| rng.uniform(0.5, 1.5)).collect();
    CalibratedModel::new(spec, sched, alpha, lambda).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

fn closed_form_vs_quadrature() -> Outcome {
    let mut rng = Rng::new(3);
    let mut worst = [0.0f64; 4];
    for case in 0..100 {
        let tiny = case % 5 == 0;
        let m = random_model(&mut rng, tiny);
        let other = random_model(&mut rng, tiny);
        let fut: Vec<f64> = m.schedule().entries().iter().map(|e| e.futures_expiry.years()).collect();
        let (t1, t2) = (fut[fut.len() / 2], fut[fut.len() - 1]);
        let b = rng.uniform(0.2, 1.0) * t1;
        let a = rng.uniform(0.0, 0.8) * b;
        worst[0] = worst[0].max(rel(log_covariance(&m, t1, t2, a, b).unwrap(), log_covariance_oracle(&m, t1, t2, a, b)));
        worst[1] = worst[1].max(rel(quadratic_variation(&m, t2, b).unwrap(), log_covariance_oracle(&m, t2, t2, 0.0, b)));
        let sc = step_covariance(&m, a, b).unwrap();
        let so = step_covariance_oracle(&m, a, b);
        for (x, y) in sc.iter().zip(so.iter()) {
            worst[2] = worst[2].max(rel(*x, *y));
        }
        let n2 = other.spec().n_factors();
        let xc = DMatrix::from_fn(m.spec().n_factors(), n2, |_, _| rng.uniform(-0.6, 0.6));
        let of = other.schedule().entries().last().unwrap().futures_expiry.years();
        let hi = b.min(of);
        let x = cross_asset_log_covariance(&m, &other, &CrossCorrelation::new(xc.clone()).unwrap(), t1, of, 0.0, hi)
            .unwrap();
        worst[3] = worst[3].max(rel(x, cross_oracle(&m, &other, &xc, t1, of, 0.0, hi)));
    }
    let max = worst.iter().cloned().fold(0.0, f64::max);
    check(
        max <= 1e-10,
        format!(
            "max relative error: log_cov {:.1e}, qv {:.1e}, step_cov {:.1e}, cross {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

// 4 ------------------------------------------------------------------------

/// The factor states of one grid date as a single-date path set.
fn at_date(paths: &PathSet, d: usize) -> Result<PathSet, String> {
    let data = (0..paths.n_paths).flat_map(|p| paths.factors(p, d).to_vec()).collect();
    let grid = SimGrid::new(vec![paths.grid.dates()[d]]).map_err(err)?;
    PathSet::from_raw(paths.n_paths, grid, paths.n_factors, paths.seed, data).map_err(err)
}

fn mc_consistency() -> Outcome {
    let start = Instant::now();
    let (m, curve) = wti_model(36);
    let e = m.schedule().entries();
    let picks = [2usize, 5, 11, 23];
    let grid = SimGrid::new(picks.iter().map(|&k| e[k].option_expiry.years()).collect()).map_err(err)?;
    let paths = simulate_factors(&m, &grid, 100_000, 11).map_err(err)?;
    let (mut worst_mart, mut worst_var, mut worst_px): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (d, &t) in grid.dates().iter().enumerate() {
        // contracts still trading at this date
        let mut expiries: Vec<f64> = picks[d..].iter().map(|&k| e[k].futures_expiry.years()).collect();
        expiries.push(e[35].futures_expiry.years());
        let cp = curve_paths(&m, &curve, &at_date(&paths, d)?, &expiries).map_err(err)?;
        for (x, &big_t) in expiries.iter().enumerate() {
            let col = cp.column(0, x);
            let f0 = curve.price(big_t).map_err(err)?;
            let ratio: Vec<f64> = col.iter().map(|f| f / f0).collect();
            let s = SampleStats::from_slice(&ratio);
            worst_mart = worst_mart.max((s.mean - 1.0).abs() / s.std_error);
            let logs: Vec<f64> = col.iter().map(|f| f.ln()).collect();
            let l = SampleStats::from_slice(&logs);
            let qv = quadratic_variation(&m, big_t, t).map_err(err)?;
            worst_var = worst_var.max((l.variance - qv).abs() / l.variance_std_error());
        }
        // vanilla on the contract whose option expires on this date
        let entry = &e[picks[d]];
        let vol = implied_vanilla_vol(&m, entry).map_err(err)?;
        let f0 = curve.price(expiries[0]).map_err(err)?;
        let df = (-0.02 * t).exp();
        for k in [0.9, 1.0, 1.1] {
            let strike = f0 * k;
            let pay: Vec<f64> = cp.column(0, 0).iter().map(|f| df * (f - strike).max(0.0)).collect();
            let s = SampleStats::from_slice(&pay);
            let black = black_price(f0, strike, vol, t, df, CallPut::Call).map_err(err)?;
            worst_px = worst_px.max((s.mean - black).abs() / s.std_error);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst_mart <= 3.0 && worst_var <= 3.0 && worst_px <= 3.0 && secs < 30.0,
        format!(
            "max |z|: martingale {worst_mart:.2}, log variance {worst_var:.2}, vanilla {worst_px:.2}; {secs:.1} s"
        ),
    )
}

// 5 ------------------------------------------------------------------------

struct Fidelity {
    inside: f64,
    outside: Vec<(f64, f64)>,
}

/// Moment-matched prices against brute-force payoffs for strikes
/// `A e^{z √V}`; returns the worst |z-score| inside ±0.5 and the rest.
fn fidelity(m: &CalibratedModel, curve: &ForwardCurve, opt: &OptionSpec, seed: u64) -> Result<Fidelity, String> {
    let e = opt.schedule.entries();
    let legs: Vec<(usize, f64, f64)> =
        e.iter().map(|s| (0, s.contract_expiry.years(), s.sample_date.years())).collect();
    let law = JointLogLaw::new(&[m], m.spec().rho(), &legs);
    let fwd: Vec<f64> = e
        .iter()
        .map(|s| s.weight() * curve.price(s.contract_expiry.years()).unwrap())
        .collect();
    let base = price(m, curve, opt).map_err(err)?;
    let zs = [-2.0, -1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 2.0];
    let strikes: Vec<f64> = zs.iter().map(|z| base.forward * (z * base.variance.sqrt()).exp()).collect();
    let mut rng = Rng::new(seed);
    let n = 1_000_000;
    let mut pays = vec![Vec::with_capacity(n); strikes.len()];
    for _ in 0..n {
        let x = law.sample(&mut rng);
        let avg: f64 = fwd.iter().zip(&x).map(|(f, v)| f * v.exp()).sum();
        for (p, k) in pays.iter_mut().zip(&strikes) {
            p.push(opt.settlement_discount * (avg - k).max(0.0));
        }
    }
    let mut inside: f64 = 0.0;
    let mut outside = Vec::new();
    for ((z, k), p) in zs.iter().zip(&strikes).zip(&pays) {
        let (mean, se) = mean_se(p);
        let model = price(m, curve, &opt.with_strike(*k).map_err(err)?).map_err(err)?.price;
        let score = (model - mean) / se;
        if z.abs() <= 0.5 {
            inside = inside.max(score.abs());
        } else {
            outside.push((*z, score));
        }
    }
    Ok(Fidelity { inside, outside })
}

fn moment_matching() -> Outcome {
    let (m, curve) = wti_model(36);
    let e = m.schedule().entries();
    // monthly fixings of the front contract through the first year
    let asian_entries = (1..=12)
        .map(|k| SampleEntry::new(e[k].option_expiry.years(), e[k].futures_expiry.years(), 1.0 / 12.0, 1.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let last = e[12].option_expiry.years();
    let asian = OptionSpec::new(
        OptionKind::Asian,
        90.0,
        CallPut::Call,
        last,
        SamplingSchedule::new(asian_entries).map_err(err)?,
        (-0.02 * last).exp(),
    )
    .map_err(err)?;
    let swaption = cal_swaption(m.schedule(), &curve, 12, 1.0);
    // twelve fixings of one contract inside a single month
    let month = (0..12)
        .map(|j| {
            let t = e[5].option_expiry.years() + j as f64 / 252.0;
            SampleEntry::new(t, e[6].futures_expiry.years(), 1.0 / 12.0, 1.0)
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let month_end = month[11].sample_date.years();
    let near = OptionSpec::new(
        OptionKind::Asian,
        90.0,
        CallPut::Call,
        month_end,
        SamplingSchedule::new(month).map_err(err)?,
        (-0.02 * month_end).exp(),
    )
    .map_err(err)?;
    let a = fidelity(&m, &curve, &asian, 21)?;
    let s = fidelity(&m, &curve, &swaption, 22)?;
    let n = fidelity(&m, &curve, &near, 23)?;
    let beyond = |f: &Fidelity| {
        f.outside
            .iter()
            .map(|(z, s)| format!("{z:+}sd {s:+.1}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    check(
        a.inside <= 3.0 && s.inside <= 3.0,
        format!(
            "max |z| within ±0.5 sd: year-strip Asian {:.2}, swaption {:.2}; beyond (z-scores) Asian [{}], \
             swaption [{}]; one-month Asian (information) {:.2} inside, [{}] beyond",
            a.inside,
            s.inside,
            beyond(&a),
            beyond(&s),
            n.inside,
            beyond(&n)
        ),
    )
}

// 6 ------------------------------------------------------------------------

fn table3_signs() -> Outcome {
    let bundle = load_bundle(&bundle()).map_err(err)?;
    let curve = bundle.curve("wti").map_err(err)?;
    let strip = &bundle.vols("wti").map_err(err)?.strip;
    let spec = &bundle.model("wti").map_err(err)?.spec;
    let schedules = [bundle.asset("wti").map_err(err)?.schedule.as_ref().unwrap()];
    let instruments = bundle
        .instruments("wti")
        .map_err(err)?
        .iter()
        .map(|r| Ok((r.label.clone(), instrument_option(r, curve, &schedules, None).map_err(err)?)))
        .collect::<Result<Vec<_>, String>>()?;
    let t = sensitivity_ladder(spec, CalibrationMode::Nonseasonal, strip, curve, &instruments, Bumps::default())
        .map_err(err)?;
    let diffs = |k: usize| -> Result<Vec<f64>, String> {
        t.rows
            .iter()
            .map(|r| r.cells[k].diff.ok_or_else(|| format!("{}: {:?}", r.label, r.cells[k].note)))
            .collect()
    };
    let (mr, vr, corr) = (diffs(0)?, diffs(1)?, diffs(2)?);
    let mr_ok = mr[0] < 0.0 && mr[1] < 0.0 && mr[3] > 0.0 && mr[4] > 0.0;
    let vr_ok = vr.iter().all(|d| *d < 0.0);
    let corr_ok = corr.iter().all(|d| *d < 0.0) && corr.windows(2).all(|w| w[1].abs() >= w[0].abs());
    let fmt = |v: &[f64]| v.iter().map(|d| format!("{d:+.4}")).collect::<Vec<_>>().join(" ");
    check(
        mr_ok && vr_ok && corr_ok,
        format!("mean rev [{}], vol ratio [{}], corr [{}]", fmt(&mr), fmt(&vr), fmt(&corr)),
    )
}

// 7 ------------------------------------------------------------------------

fn offline_recovery() -> Outcome {
    let spec = wti_spec(0.0);
    let sched = monthly_schedule(30);
    let m = CalibratedModel::new(spec.clone(), sched, vec![0.25; 30], vec![1.0; 30]).map_err(err)?;
    let (days, h) = (500usize, 1.0 / 252.0);
    let grid = SimGrid::new((1..=days).map(|d| d as f64 * h).collect()).map_err(err)?;
    let paths = simulate_factors(&m, &grid, 1, 2024).map_err(err)?;
    let tenors: Vec<usize> = (1..=24).collect();
    let tau: Vec<f64> = tenors.iter().map(|k| *k as f64 / 12.0).collect();
    let decay: Vec<f64> = spec.beta().iter().map(|b| (-b * h).exp()).collect();
    let mut returns = DMatrix::zeros(days - 1, tau.len());
    for d in 1..days {
        let (prev, now) = (paths.factors(0, d - 1), paths.factors(0, d));
        for (a, t) in tau.iter().enumerate() {
            returns[(d - 1, a)] = (0..2)
                .map(|i| (-spec.beta()[i] * t).exp() * (now[i] - decay[i] * prev[i]))
                .sum::<f64>();
        }
    }
    let dates: Vec<chrono::NaiveDate> = (1..days).map(|d| as_of() + chrono::Duration::days(d as i64)).collect();
    let panel = ReturnPanel::new(dates, tenors, returns, 125.0).map_err(err)?;
    let pca = weighted_pca(&panel).map_err(err)?;
    let fit = fit_two_factor_to_pca(&pca, &tau).map_err(err)?;
    let explained = pca.explained_fraction[1];
    check(
        (fit.beta - 0.35).abs() <= 0.05
            && (fit.vol_ratio - 1.6).abs() <= 0.1
            && (fit.rho + 0.2).abs() <= 0.1
            && explained > 0.9,
        format!(
            "beta {:.4}, vol ratio {:.4}, rho {:.4}, two-PC explained {:.4}",
            fit.beta, fit.vol_ratio, fit.rho, explained
        ),
    )
}

// 8 ------------------------------------------------------------------------

fn factor_extraction() -> Outcome {
    let mut rng = Rng::new(8);
    let (beta, t1, t2): (f64, f64, f64) = (0.35, 3.0 / 12.0, 36.0 / 12.0);
    let short: Vec<f64> = (0..1000).map(|_| 0.02 * rng.normal()).collect();
    let long: Vec<f64> = (0..1000).map(|_| 0.015 * rng.normal()).collect();
    let r1: Vec<f64> = short.iter().zip(&long).map(|(s, l)| (-beta * t1).exp() * s + l).collect();
    let r2: Vec<f64> = short.iter().zip(&long).map(|(s, l)| (-beta * t2).exp() * s + l).collect();
    let got = extract_factor_series(&r1, &r2, beta, t1, t2).map_err(err)?;
    let mut worst: f64 = 0.0;
    for k in 0..short.len() {
        let scale = short[k].abs().max(long[k].abs());
        worst = worst.max((got.short_shocks[k] - short[k]).abs() / scale);
        worst = worst.max((got.long_shocks[k] - long[k]).abs() / scale);
    }
    check(
        worst <= 64.0 * f64::EPSILON,
        format!("max relative error {worst:.2e} ({:.1} ulp)", worst / f64::EPSILON),
    )
}

// 9 ------------------------------------------------------------------------

fn multi_asset_equivalence() -> Outcome {
    let (a, _) = wti_model(24);
    let s = monthly_schedule(24);
    let vols: Vec<f64> = s
        .entries()
        .iter()
        .map(|e| 0.24 + 0.04 * (-e.futures_expiry.years()).exp())
        .collect();
    let strip = curvekit::calibration::VanillaVolStrip::from_schedule(&s, &vols).map_err(err)?;
    let b_spec = FactorSpec::two_factor(0.6, 1.3, 0.1, 0.0).map_err(err)?;
    let b = calibrate(CalibrationMode::Nonseasonal, &b_spec, &strip).map_err(err)?;
    let xc = cross(&[0.7, 0.2, 0.1, 0.6], 2, 2);
    let universe = AssetUniverse::new(
        vec![("a".into(), a.clone()), ("b".into(), b.clone())],
        &[("a".into(), "b".into(), xc.clone())],
    )
    .map_err(err)?;
    let grid = SimGrid::uniform(1.0, 12).map_err(err)?;
    let n = 100_000;
    let sims = simulate_multi_asset(&universe, &grid, n, 5).map_err(err)?;
    let last = grid.len() - 1;
    let legs = [(0usize, s.entries()[12].futures_expiry.years()), (0, s.entries()[20].futures_expiry.years()),
        (1, s.entries()[13].futures_expiry.years()), (1, s.entries()[22].futures_expiry.years())];
    let models = [&a, &b];
    let efficient: Vec<Vec<f64>> = legs
        .iter()
        .map(|&(k, big_t)| {
            (0..n)
                .map(|p| {
                    let y = sims[k].1.factors(p, last);
                    (0..2).map(|i| loading(models[k], i, big_t, 1.0) * y[i]).sum()
                })
                .collect()
        })
        .collect();
    let stacked = universe.stacked_correlation().clone();
    let brute_states = stacked_factor_paths(&models, &stacked, grid.dates(), n, 6);
    let brute: Vec<Vec<f64>> = legs
        .iter()
        .map(|&(k, big_t)| {
            brute_states
                .iter()
                .map(|y| (0..2).map(|i| loading(models[k], i, big_t, 1.0) * y[2 * k + i]).sum())
                .collect()
        })
        .collect();
    let mut worst: f64 = 0.0;
    for i in 0..legs.len() {
        for j in i..legs.len() {
            let (c1, s1) = cov_se(&efficient[i], &efficient[j]);
            let (c2, s2) = cov_se(&brute[i], &brute[j]);
            worst = worst.max((c1 - c2).abs() / (s1 * s1 + s2 * s2).sqrt());
        }
    }
    let analytic = cross_asset_log_covariance(&a, &b, &xc, legs[0].1, legs[2].1, 0.0, 1.0).map_err(err)?;
    let (mc, _) = cov_se(&efficient[0], &efficient[2]);
    check(
        worst <= 3.0,
        format!("max |z| over 10 log-return covariances {worst:.2}; cross cov mc {mc:.5} analytic {analytic:.5}"),
    )
}

// 10 -----------------------------------------------------------------------

fn quanto_reductions() -> Outcome {
    let (m, curve) = wti_model(24);
    let e = m.schedule().entries();
    let entries = (3..7)
        .map(|k| SampleEntry::new(e[k].option_expiry.years(), e[k].futures_expiry.years(), 0.25, 1.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let sched = SamplingSchedule::new(entries).map_err(err)?;
    let expiry = sched.last_sample();
    let atm: f64 = sched
        .entries()
        .iter()
        .map(|s| s.weight() * curve.price(s.contract_expiry.years()).unwrap())
        .sum();
    let opt = OptionSpec::new(OptionKind::Asian, atm, CallPut::Call, expiry, sched.clone(), 0.98).map_err(err)?;
    let flat = |v: f64| PiecewiseConstant::constant(v);
    let trivial = FxSpec::new(1.0, flat(0.0), flat(0.02), flat(0.02), vec![0.3, -0.2]).map_err(err)?;
    let q = quanto_price(&m, &trivial, &curve, &opt).map_err(err)?.price;
    let d = asian_price(&m, &curve, &opt).map_err(err)?.price;
    let reduction = (q - d).abs() / d;

    let fx = FxSpec::new(1.3, flat(0.1), flat(0.02), flat(0.01), vec![0.3, -0.2]).map_err(err)?;
    let v_model = quanto_average_log_variance(&m, &fx, &curve, &sched).map_err(err)?;
    let law = QuantoLaw::new(&m, &curve, &fx, &sched);
    let mut rng = Rng::new(10);
    let n = 400_000;
    let (mut g1, mut g2) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let g = law.sample(&mut rng);
        g1.push(g);
        g2.push(g * g);
    }
    let (m1, _) = mean_se(&g1);
    let (m2, _) = mean_se(&g2);
    // delta method for log(m2 / m1²)
    let terms: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| b / m2 - 2.0 * a / m1).collect();
    let (_, se) = mean_se(&terms);
    let v_mc = (m2 / (m1 * m1)).ln();
    let z = (v_model - v_mc) / se;
    check(
        reduction <= 1e-12 && z.abs() <= 3.0,
        format!("trivial-FX relative gap {reduction:.1e}; variance model {v_model:.6} vs MC {v_mc:.6} (z {z:+.2})"),
    )
}

// 11 -----------------------------------------------------------------------

fn quick_delta_checks() -> Outcome {
    let mut atm_exact = true;
    let mut worst: f64 = 0.0;
    for f in [20.0, 80.0, 93.17, 150.0] {
        for s in [0.1, 0.3, 0.8] {
            for t in [0.1, 1.0, 4.0] {
                atm_exact &= quick_delta(f, f, s, t).map_err(err)? == 0.5;
                for z in [-2.5, -1.0, -0.3, 0.0, 0.4, 1.2, 2.5] {
                    let k = f * (z * s * f64::sqrt(t)).exp();
                    let qd = quick_delta(k, f, s, t).map_err(err)?;
                    worst = worst.max((strike_from_quick_delta(qd, f, s, t).map_err(err)? / k - 1.0).abs());
                }
            }
        }
    }
    let s = monthly_schedule(24);
    let strip = mild_strip(&s);
    let curve = backwardated_curve(&s);
    let smiles = strip
        .quotes()
        .iter()
        .map(|q| SmileQuote {
            label: q.label.clone(),
            option_expiry: q.option_expiry,
            futures_expiry: q.futures_expiry,
            atm_vol: q.implied_vol,
            pillars: [0.1, 0.25, 0.5, 0.75, 0.9].iter().map(|d| (*d, q.implied_vol)).collect(),
        })
        .collect();
    let surface = VolSurface::new(smiles).map_err(err)?;
    let spec = wti_spec(0.0);
    let m = calibrate(CalibrationMode::Nonseasonal, &spec, &strip).map_err(err)?;
    let mut bit_exact = true;
    for k in [0.8, 1.0, 1.25] {
        let opt = cal_swaption(&s, &curve, 6, k);
        let adj = smile_adjusted_price(&spec, CalibrationMode::Nonseasonal, &surface, &curve, &opt).map_err(err)?;
        let plain = price(&m, &curve, &opt).map_err(err)?;
        bit_exact &= adj.adjusted.price == plain.price && adj.atm.price == plain.price;
    }
    check(
        atm_exact && worst <= 1e-12 && bit_exact,
        format!("QD(F)=0.5 exact: {atm_exact}; max strike round-trip {worst:.1e}; flat-smile bit-exact: {bit_exact}"),
    )
}

// 12 -----------------------------------------------------------------------

fn run_cli(out: &Path, threads: &str, args: &[&str]) -> Result<Vec<u8>, String> {
    let o = Command::new(env!("CARGO_BIN_EXE_curvekit"))
        .env("CURVEKIT_THREADS", threads)
        .arg("--bundle")
        .arg(bundle())
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .map_err(err)?;
    if !o.status.success() {
        return Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)));
    }
    let text = String::from_utf8_lossy(&o.stdout).replace(out.to_str().unwrap(), "<out>");
    Ok(text.into_bytes())
}

fn determinism() -> Outcome {
    let mixed = fixtures().join("mixed_instruments.csv");
    let mixed = mixed.to_str().unwrap();
    let runs: [&[&str]; 7] = [
        &["--asset", "wti", "calibrate"],
        &["--asset", "wti", "price", "--calibrate", "--smile", "--instruments", mixed],
        &["--asset", "wti", "sensitivity"],
        &["--asset", "wti", "compare", "--calibrate"],
        &["--asset", "wti", "history"],
        &["--asset", "wti", "--n-paths", "4000", "--seed", "9", "simulate", "--calibrate"],
        &["--n-paths", "4000", "--seed", "9", "simulate", "--calibrate", "--assets", "wti,brent"],
    ];
    let root = tempfile::tempdir().map_err(err)?;
    let mut snapshots = Vec::new();
    for (tag, threads) in [("a", "1"), ("b", "4"), ("c", "4")] {
        let out = root.path().join(tag);
        let mut stdout = Vec::new();
        for args in runs {
            stdout.push(run_cli(&out, threads, args)?);
        }
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
            .map_err(err)?
            .map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
            })
            .collect();
        files.sort();
        snapshots.push((stdout, files));
    }
    let same = snapshots.windows(2).all(|w| w[0] == w[1]);
    let n_files = snapshots[0].1.len();
    check(
        same && n_files > 0,
        format!("{} commands, {n_files} output files identical across 1 and 4 workers and a repeat", runs.len()),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("calibration round-trip", calibration_round_trip),
        ("hybrid endpoints", hybrid_endpoints),
        ("closed form vs quadrature", closed_form_vs_quadrature),
        ("Monte Carlo consistency", mc_consistency),
        ("moment-matching fidelity", moment_matching),
        ("sensitivity sign pattern", table3_signs),
        ("offline recovery", offline_recovery),
        ("factor extraction identity", factor_extraction),
        ("multi-asset equivalence", multi_asset_equivalence),
        ("quanto reductions", quanto_reductions),
        ("quick delta", quick_delta_checks),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1}s]", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{secs:.1}s]", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
