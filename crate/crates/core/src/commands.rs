//! The command-line workflows as library functions: each reads a bundle,
//! writes its files under the output directory and returns the text it
//! would print.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::calibration::{
    calibrate, extract_factor_series, fit_two_factor_to_pca, implied_vanilla_vol, model_statistics,
    shock_correlation, weighted_pca, CalibrationMode, ReturnPanel, VanillaVolStrip,
};
use crate::error::{CurveError, Result};
use crate::factor_model::{cross_asset_log_covariance, quadratic_variation, CalibratedModel, FactorSpec};
use crate::marketdata::{
    load_bundle, load_model, read_instruments, save_model_document, write_paths, CsvTable, DataBundle, InstrumentRow,
    ModelDocument, StrikeSpec,
};
use crate::pricing::{
    compare_quotes, price, quanto_price, quick_delta, smile_adjusted_price, FxSpec, OptionKind, OptionSpec,
    SampleEntry, SamplingSchedule,
};
use crate::sensitivity::{sensitivity_ladder, Bumps};
use crate::simulation::{
    curve_paths, sample_covariance, simulate_factors, simulate_multi_asset, AssetUniverse, PathSet, SampleStats,
    SimGrid,
};
use crate::termstructure::{year_fraction, ContractSchedule, ForwardCurve};

/// Options shared by every command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub bundle: PathBuf,
    pub asset: String,
    pub mode: CalibrationMode,
    /// Overrides the spec's non-fungibility; hybrid mode only.
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub n_paths: usize,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(bundle: impl Into<PathBuf>, asset: impl Into<String>) -> Self {
        RunConfig {
            bundle: bundle.into(),
            asset: asset.into(),
            mode: CalibrationMode::Nonseasonal,
            epsilon: None,
            seed: 1,
            n_paths: 10_000,
            out: PathBuf::from("curvekit-out"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epsilon.is_some() && self.mode != CalibrationMode::Hybrid {
            return Err(CurveError::InvalidSpec("--epsilon applies to hybrid mode only".into()));
        }
        if let Some(e) = self.epsilon {
            if !(0.0..=1.0).contains(&e) {
                return Err(CurveError::InvalidSpec(format!("epsilon {e} outside [0, 1]")));
            }
        }
        if self.n_paths == 0 {
            return Err(CurveError::InvalidSpec("need at least one path".into()));
        }
        Ok(())
    }

    fn spec_for(&self, doc: &ModelDocument) -> Result<FactorSpec> {
        match self.epsilon {
            Some(e) => doc.spec.with_epsilon(e),
            None => Ok(doc.spec.clone()),
        }
    }

    fn out_file(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out).map_err(|e| CurveError::io(&self.out, e))?;
        Ok(self.out.join(name))
    }
}

/// What a command printed and which files it wrote.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommandOutput {
    pub stdout: String,
    pub files: Vec<PathBuf>,
}

impl CommandOutput {
    fn write(&mut self, path: PathBuf, contents: &str) -> Result<()> {
        std::fs::write(&path, contents).map_err(|e| CurveError::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }
}

/// 0 success, 1 numerical or calibration failure, 2 input failure.
pub fn exit_code(result: &Result<CommandOutput>) -> i32 {
    match result {
        Ok(_) => 0,
        Err(e) if e.is_input_error() => 2,
        Err(_) => 1,
    }
}

fn open(cfg: &RunConfig) -> Result<DataBundle> {
    cfg.validate()?;
    load_bundle(&cfg.bundle)
}

fn warnings(bundle: &DataBundle, out: &mut String) {
    for w in &bundle.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
}

/// Calibrates the asset's spec to its vol strip and writes the model.
pub fn cmd_calibrate(cfg: &RunConfig) -> Result<CommandOutput> {
    let bundle = open(cfg)?;
    let asset = &cfg.asset;
    let doc = bundle.model(asset)?;
    let strip = &bundle.vols(asset)?.strip;
    let curve = bundle.curve(asset)?;
    let model = calibrate(cfg.mode, &cfg.spec_for(doc)?, strip)?;
    let mut out = CommandOutput::default();
    warnings(&bundle, &mut out.stdout);
    let mut report = String::from("label,market_vol,model_vol,abs_error\n");
    let mut worst: f64 = 0.0;
    for (q, e) in strip.quotes().iter().zip(model.schedule().entries()) {
        let v = implied_vanilla_vol(&model, e)?;
        let err = (v - q.implied_vol).abs();
        worst = worst.max(err);
        let _ = writeln!(report, "{},{},{},{:e}", q.label, q.implied_vol, v, err);
    }
    let path = cfg.out_file(&format!("model_{asset}.json"))?;
    save_model_document(
        &ModelDocument::from_model(&model, cfg.mode, Some(curve.valuation_date)),
        &path,
    )?;
    out.files.push(path.clone());
    out.write(cfg.out_file(&format!("calibration_{asset}.csv"))?, &report)?;
    let _ = writeln!(
        out.stdout,
        "calibrated {asset} ({} contracts, mode {:?})\nmax round-trip vol error: {:e}\nmodel written to {}",
        strip.len(),
        cfg.mode,
        worst,
        path.display()
    );
    if worst >= 1e-10 {
        return Err(CurveError::Domain(format!("round-trip vol error {worst:e} exceeds 1e-10")));
    }
    Ok(out)
}

/// The calibrated model: an explicit file, the bundle's calibrated document,
/// or a fresh calibration when `calibrate_now` is set.
pub fn resolve_model(
    cfg: &RunConfig,
    bundle: &DataBundle,
    model_file: Option<&Path>,
    calibrate_now: bool,
) -> Result<CalibratedModel> {
    if let Some(p) = model_file {
        return load_model(p);
    }
    let doc = bundle.model(&cfg.asset)?;
    if calibrate_now {
        return calibrate(cfg.mode, &cfg.spec_for(doc)?, &bundle.vols(&cfg.asset)?.strip);
    }
    doc.model().map_err(|_| CurveError::MissingFile {
        path: bundle.path_of("model", &cfg.asset, "json"),
        expectation: "no calibration section; run `calibrate` and pass --model, or use --calibrate".into(),
    })
}

fn contract_schedule<'a>(bundle: &'a DataBundle, asset: &str, model: Option<&'a CalibratedModel>) -> Vec<&'a ContractSchedule> {
    let a = bundle.assets.get(asset);
    let mut out = Vec::new();
    if let Some(s) = a.and_then(|a| a.schedule.as_ref()) {
        out.push(s);
    }
    if let Some(v) = a.and_then(|a| a.vols.as_ref()) {
        out.push(v.strip.schedule());
    }
    if let Some(m) = model {
        out.push(m.schedule());
    }
    out
}

/// Builds the option for an instrument row. ATM strikes resolve to the
/// expected average `Σ w_k F^{T_k}(0)`, converted at the FX forwards when
/// `fx` is given.
pub fn instrument_option(
    row: &InstrumentRow,
    curve: &ForwardCurve,
    schedules: &[&ContractSchedule],
    fx: Option<&FxSpec>,
) -> Result<OptionSpec> {
    let kind_name = row.kind.strip_prefix("quanto_").unwrap_or(&row.kind);
    let kind: OptionKind = kind_name.parse()?;
    let years = |d: NaiveDate| year_fraction(curve.valuation_date, d).map(|t| t.years());
    let expiry = years(row.expiry)?;
    let m = row.contracts.len();
    if kind == OptionKind::Vanilla && m != 1 {
        return Err(CurveError::InvalidSpec(format!("vanilla {} needs exactly one contract", row.label)));
    }
    if kind == OptionKind::Asian && row.sample_dates.is_empty() {
        return Err(CurveError::InvalidSpec(format!("Asian {} needs sample dates", row.label)));
    }
    let mut entries = Vec::with_capacity(m);
    for (k, label) in row.contracts.iter().enumerate() {
        let e = schedules
            .iter()
            .find_map(|s| s.get(label))
            .ok_or_else(|| CurveError::MissingData(format!("{}: contract {label} not in any schedule", row.label)))?;
        let sample = match row.sample_dates.get(k) {
            Some(d) if kind == OptionKind::Asian => years(*d)?,
            _ => expiry,
        };
        let u = row.weights.get(k).copied().unwrap_or(1.0 / m as f64);
        let d = row.discounts.get(k).copied().unwrap_or(1.0);
        entries.push(SampleEntry::new(sample, e.futures_expiry.years(), u, d)?);
    }
    let schedule = SamplingSchedule::new(entries)?;
    let strike = match row.strike {
        StrikeSpec::Fixed(k) => k,
        StrikeSpec::Atm => schedule
            .entries()
            .iter()
            .map(|e| {
                let y = fx.map_or(1.0, |f| f.forward_y(e.sample_date.years()));
                Ok(e.weight() * curve.price(e.contract_expiry.years())? * y)
            })
            .sum::<Result<f64>>()?,
    };
    OptionSpec::new(kind, strike, row.call_put, expiry, schedule, row.settlement_discount)
}

/// One priced row: `(price, vol, qd, flag)` or a diagnostic.
fn price_row(
    cfg: &RunConfig,
    bundle: &DataBundle,
    model: &CalibratedModel,
    row: &InstrumentRow,
    smile: bool,
) -> Result<(f64, f64, f64, &'static str)> {
    let curve = bundle.curve(&cfg.asset)?;
    let schedules = contract_schedule(bundle, &cfg.asset, Some(model));
    if row.kind.starts_with("quanto_") {
        let fx = bundle.fx_for(&cfg.asset)?;
        let opt = instrument_option(row, curve, &schedules, Some(fx))?;
        let r = quanto_price(model, fx, curve, &opt)?;
        let qd = quick_delta(opt.strike, r.forward, r.vol, opt.expiry.years())?;
        return Ok((r.price, r.vol, qd, "OK"));
    }
    let opt = instrument_option(row, curve, &schedules, None)?;
    if smile {
        let surface = bundle.vols(&cfg.asset)?.surface.as_ref().ok_or_else(|| CurveError::MissingFile {
            path: bundle.path_of("vols", &cfg.asset, "csv"),
            expectation: "--smile needs qd10,qd25,qd50,qd75,qd90 columns".into(),
        })?;
        let s = smile_adjusted_price(model.spec(), cfg.mode, surface, curve, &opt)?;
        let flag = if s.extrapolated { "EXTRAPOLATED" } else { "OK" };
        return Ok((s.adjusted.price, s.adjusted.vol, s.quick_delta, flag));
    }
    let r = price(model, curve, &opt)?;
    let qd = quick_delta(opt.strike, r.forward, r.vol, opt.expiry.years())?;
    Ok((r.price, r.vol, qd, "OK"))
}

/// Options of the `price` command beyond the shared config.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PriceOptions {
    pub instruments: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub calibrate: bool,
    pub smile: bool,
}

/// Prices every instrument; bad rows become diagnostics in the flag column.
pub fn cmd_price(cfg: &RunConfig, opts: &PriceOptions) -> Result<CommandOutput> {
    let bundle = open(cfg)?;
    let model = resolve_model(cfg, &bundle, opts.model.as_deref(), opts.calibrate)?;
    let rows = match &opts.instruments {
        Some(p) => read_instruments(p)?,
        None => bundle.instruments(&cfg.asset)?.to_vec(),
    };
    let mut out = CommandOutput::default();
    warnings(&bundle, &mut out.stdout);
    let mut csv = String::from("label,price,vol,qd,flag\n");
    for row in &rows {
        match price_row(cfg, &bundle, &model, row, opts.smile) {
            Ok((p, v, qd, flag)) => {
                let _ = writeln!(csv, "{},{p},{v},{qd},{flag}", row.label);
            }
            Err(e) => {
                let msg = format!("line {}: {e}", row.line).replace(',', ";");
                let _ = writeln!(csv, "{},,,,ERROR: {msg}", row.label);
            }
        }
    }
    out.stdout.push_str(&csv);
    out.write(cfg.out_file(&format!("prices_{}.csv", cfg.asset))?, &csv)?;
    Ok(out)
}

/// Options of the `sensitivity` command.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SensitivityOptions {
    pub instruments: Option<PathBuf>,
    pub bumps: Bumps,
}

/// Base, bumped and difference prices for each instrument and bump, with the
/// model recalibrated to the vanilla marks after every bump.
pub fn cmd_sensitivity(cfg: &RunConfig, opts: &SensitivityOptions) -> Result<CommandOutput> {
    let bundle = open(cfg)?;
    let doc = bundle.model(&cfg.asset)?;
    let spec = cfg.spec_for(doc)?;
    let strip: &VanillaVolStrip = &bundle.vols(&cfg.asset)?.strip;
    let curve = bundle.curve(&cfg.asset)?;
    let rows = match &opts.instruments {
        Some(p) => read_instruments(p)?,
        None => bundle.instruments(&cfg.asset)?.to_vec(),
    };
    let schedules = contract_schedule(&bundle, &cfg.asset, None);
    let instruments = rows
        .iter()
        .map(|r| Ok((r.label.clone(), instrument_option(r, curve, &schedules, None)?)))
        .collect::<Result<Vec<_>>>()?;
    let table = sensitivity_ladder(&spec, cfg.mode, strip, curve, &instruments, opts.bumps)?;
    let mut csv = String::from("label,base,mean_rev,mean_rev_diff,vol_ratio,vol_ratio_diff,corr,corr_diff,note\n");
    for r in &table.rows {
        let _ = write!(csv, "{},{}", r.label, r.base);
        let mut notes = Vec::new();
        for c in &r.cells {
            match (c.bumped, c.diff) {
                (Some(b), Some(d)) => {
                    let _ = write!(csv, ",{b},{d}");
                }
                _ => {
                    csv.push_str(",NA,NA");
                    notes.extend(c.note.iter().map(|n| n.replace(',', ";")));
                }
            }
        }
        let _ = writeln!(csv, ",{}", notes.join(" | "));
    }
    let mut out = CommandOutput::default();
    warnings(&bundle, &mut out.stdout);
    let b = opts.bumps;
    let _ = writeln!(
        out.stdout,
        "bumps: mean reversion {:+}, vol ratio {:+}, correlation {:+} (vanillas recalibrated after each bump)",
        b.mean_reversion, b.vol_ratio, b.correlation
    );
    out.stdout.push_str(&csv);
    out.write(cfg.out_file(&format!("sensitivity_{}.csv", cfg.asset))?, &csv)?;
    Ok(out)
}

/// Reads `label,price` pairs from a CSV with at least those columns.
pub fn read_price_column(path: &Path) -> Result<Vec<(String, f64)>> {
    let t = CsvTable::read(path)?;
    let c = t.require(&["label", "price"])?;
    let mut out = Vec::new();
    for (line, row) in &t.rows {
        if let Some(p) = t.optional::<f64>(*line, row, c[1])? {
            out.push((row[c[0]].clone(), p));
        }
    }
    Ok(out)
}

/// Options of the `compare` command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CompareOptions {
    /// Precomputed model prices; otherwise the instruments are priced.
    pub prices: Option<PathBuf>,
    pub quotes: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub calibrate: bool,
}

/// Model against consensus and broker market with the recalibration flag.
pub fn cmd_compare(cfg: &RunConfig, opts: &CompareOptions) -> Result<CommandOutput> {
    let bundle = open(cfg)?;
    let quotes = match &opts.quotes {
        Some(p) => crate::marketdata::read_quotes(p)?,
        None => bundle.quotes(&cfg.asset)?.clone(),
    };
    let mut out = CommandOutput::default();
    warnings(&bundle, &mut out.stdout);
    let prices = match &opts.prices {
        Some(p) => read_price_column(p)?,
        None => {
            let model = resolve_model(cfg, &bundle, opts.model.as_deref(), opts.calibrate)?;
            let mut v = Vec::new();
            for row in bundle.instruments(&cfg.asset)? {
                match price_row(cfg, &bundle, &model, row, false) {
                    Ok((p, ..)) => v.push((row.label.clone(), p)),
                    Err(e) => {
                        let _ = writeln!(out.stdout, "warning: {} not priced: {e}", row.label);
                    }
                }
            }
            v
        }
    };
    let report = compare_quotes(&prices, &quotes);
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    let mut csv = String::from("label,model,consensus,diff_pct,position,flag\n");
    for r in &report.rows {
        let diff = r.diff_pct.map_or(String::new(), |d| format!("{d:.1}%"));
        let _ = writeln!(csv, "{},{},{},{diff},{},{}", r.label, r.model, opt(r.consensus), r.position, r.flag);
    }
    out.stdout.push_str(&csv);
    for u in &report.unmatched {
        let _ = writeln!(out.stdout, "unmatched: {u}");
    }
    out.write(cfg.out_file(&format!("compare_{}.csv", cfg.asset))?, &csv)?;
    Ok(out)
}

/// Options of the `history` command.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryOptions {
    pub half_life: f64,
    /// Nearby used as the reference for the vol-ratio and correlation curves.
    pub reference: usize,
    /// Nearbies whose returns are inverted into factor shocks.
    pub front: usize,
    pub back: usize,
}

impl Default for HistoryOptions {
    fn default() -> Self {
        HistoryOptions {
            half_life: 125.0,
            reference: 12,
            front: 3,
            back: 36,
        }
    }
}

/// Rows needed for a covariance of returns.
pub const MIN_HISTORY_ROWS: usize = 3;

/// Weighted PCA of the history, the two-factor fit and its statistics.
pub fn cmd_history(cfg: &RunConfig, opts: &HistoryOptions) -> Result<CommandOutput> {
    let bundle = open(cfg)?;
    let h = bundle.history(&cfg.asset)?;
    let complete = h.prices.iter().filter(|r| r.iter().all(|p| p.is_finite())).count();
    if complete < MIN_HISTORY_ROWS {
        return Err(CurveError::DegenerateData(format!(
            "history has {complete} complete rows; at least {MIN_HISTORY_ROWS} are required"
        )));
    }
    let panel = ReturnPanel::from_prices(&h.dates, h.tenors.clone(), &h.prices, opts.half_life)?;
    let pca = weighted_pca(&panel)?;
    // monthly contracts: nearby k sits about k/12 years out
    let tau: Vec<f64> = h.tenors.iter().map(|k| *k as f64 / 12.0).collect();
    let fit = fit_two_factor_to_pca(&pca, &tau)?;
    let spec = fit.spec(0.0)?;
    let reference = opts.reference.min(h.tenors.len());
    let stats = model_statistics(&spec, &tau, reference)?;
    let cov = panel.weighted_covariance();
    let r = reference - 1;

    let mut out = CommandOutput::default();
    warnings(&bundle, &mut out.stdout);
    let mut loadings = String::from("nearby");
    for k in 0..pca.eigenvalues.len().min(3) {
        let _ = write!(loadings, ",pc{}", k + 1);
    }
    loadings.push('\n');
    for (a, k) in h.tenors.iter().enumerate() {
        let _ = write!(loadings, "{k}");
        for c in 0..pca.eigenvalues.len().min(3) {
            let _ = write!(loadings, ",{}", pca.components[(a, c)]);
        }
        loadings.push('\n');
    }
    let mut curves = String::from("nearby,model_vol_ratio,hist_vol_ratio,model_corr,hist_corr\n");
    for (a, k) in h.tenors.iter().enumerate() {
        let hv = (cov[(a, a)] / cov[(r, r)]).sqrt();
        let hc = cov[(a, r)] / (cov[(a, a)] * cov[(r, r)]).sqrt();
        let _ = writeln!(
            curves,
            "{k},{},{hv},{},{hc}",
            stats.vol_ratio_curve[a], stats.correlation_curve[a]
        );
    }
    let _ = writeln!(out.stdout, "rows: {} returns, half life {}", panel.n_rows(), opts.half_life);
    let explained2 = pca.explained_fraction.get(1).copied().unwrap_or(1.0);
    let _ = writeln!(out.stdout, "explained by first two components: {:.4}", explained2);
    if pca.rank_deficient {
        let _ = writeln!(out.stdout, "warning: covariance is rank deficient");
    }
    let _ = writeln!(
        out.stdout,
        "fit: beta {:.6} vol_ratio {:.6} rho {:.6} level {:.6} residual {:e}",
        fit.beta, fit.vol_ratio, fit.rho, fit.level, fit.residual
    );
    if !fit.converged || fit.at_boundary {
        let _ = writeln!(out.stdout, "warning: fit did not settle inside the search box");
    }
    let pos = |n: usize| h.tenors.iter().position(|k| *k == n);
    let back = opts.back.min(*h.tenors.iter().max().expect("non-empty tenors"));
    if let (Some(f), Some(b)) = (pos(opts.front), pos(back)) {
        if f != b {
            let front_r: Vec<f64> = panel.returns.column(f).iter().copied().collect();
            let back_r: Vec<f64> = panel.returns.column(b).iter().copied().collect();
            let series = extract_factor_series(&front_r, &back_r, fit.beta, tau[f], tau[b])?;
            let _ = writeln!(
                out.stdout,
                "factor shocks from nearbies {} and {}: correlation {:.4}",
                opts.front,
                back,
                shock_correlation(&series)
            );
        }
    }
    let summary = out.stdout.clone();
    out.write(cfg.out_file(&format!("pca_{}.csv", cfg.asset))?, &loadings)?;
    out.write(cfg.out_file(&format!("curves_{}.csv", cfg.asset))?, &curves)?;
    out.write(cfg.out_file(&format!("history_{}.txt", cfg.asset))?, &summary)?;
    Ok(out)
}

/// Options of the `simulate` command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimulateOptions {
    pub model: Option<PathBuf>,
    pub calibrate: bool,
    /// Years simulated; defaults to one year, capped at the last option expiry.
    pub horizon: Option<f64>,
    pub steps: usize,
    /// Several assets simulated jointly with the bundle's cross correlations.
    pub assets: Vec<String>,
}

/// Martingale and variance checks on the first contract alive at the horizon.
fn path_summary(m: &CalibratedModel, curve: &ForwardCurve, paths: &PathSet) -> Result<(String, f64, Vec<f64>)> {
    let horizon = *paths.grid.dates().last().expect("non-empty grid");
    let e = m
        .schedule()
        .entries()
        .iter()
        .find(|e| e.futures_expiry.years() >= horizon)
        .ok_or_else(|| CurveError::OutOfRange(format!("no contract alive at the horizon {horizon}")))?;
    let big_t = e.futures_expiry.years();
    let cp = curve_paths(m, curve, paths, &[big_t])?;
    let f0 = curve.price(big_t)?;
    let mut s = format!("contract {} (F0 {f0})\ndate,t,mean_ratio,se,log_var,log_var_se,analytic_qv\n", e.label);
    let mut last_logs = Vec::new();
    for (d, t) in paths.grid.dates().iter().enumerate() {
        let col = cp.column(d, 0);
        let ratio: Vec<f64> = col.iter().map(|f| f / f0).collect();
        let logs: Vec<f64> = col.iter().map(|f| f.ln()).collect();
        let a = SampleStats::from_slice(&ratio);
        let l = SampleStats::from_slice(&logs);
        let qv = quadratic_variation(m, big_t, *t)?;
        let _ = writeln!(
            s,
            "{d},{t},{},{},{},{},{qv}",
            a.mean,
            a.std_error,
            l.variance,
            l.variance_std_error()
        );
        last_logs = logs;
    }
    Ok((s, big_t, last_logs))
}

/// Simulates factor paths, writes them in binary form and prints checks.
pub fn cmd_simulate(cfg: &RunConfig, opts: &SimulateOptions) -> Result<CommandOutput> {
    let bundle = open(cfg)?;
    let mut out = CommandOutput::default();
    warnings(&bundle, &mut out.stdout);
    let steps = if opts.steps == 0 { 12 } else { opts.steps };
    if opts.assets.len() > 1 {
        let mut models = Vec::new();
        for a in &opts.assets {
            let c = RunConfig {
                asset: a.clone(),
                ..cfg.clone()
            };
            models.push((a.clone(), resolve_model(&c, &bundle, None, opts.calibrate)?));
        }
        let horizon = opts.horizon.unwrap_or_else(|| {
            models
                .iter()
                .map(|(_, m)| *m.schedule().option_expiries().last().expect("non-empty"))
                .fold(1.0, f64::min)
        });
        let grid = SimGrid::uniform(horizon, steps)?;
        let universe = AssetUniverse::new(models.clone(), &bundle.cross_pairs())?;
        let sims = simulate_multi_asset(&universe, &grid, cfg.n_paths, cfg.seed)?;
        let mut finals = Vec::new();
        for ((name, paths), (_, m)) in sims.iter().zip(&models) {
            let curve = bundle.curve(name)?;
            let (s, big_t, logs) = path_summary(m, curve, paths)?;
            let _ = writeln!(out.stdout, "[{name}] {s}");
            let p = cfg.out_file(&format!("paths_{name}.bin"))?;
            write_paths(paths, &p)?;
            out.files.push(p);
            finals.push((name.clone(), m, big_t, logs));
        }
        let cross = bundle.cross_pairs();
        for (a, b, xc) in &cross {
            let (Some(x), Some(y)) = (
                finals.iter().find(|f| &f.0 == a),
                finals.iter().find(|f| &f.0 == b),
            ) else {
                continue;
            };
            let mc = sample_covariance(&x.3, &y.3);
            let analytic = cross_asset_log_covariance(x.1, y.1, xc, x.2, y.2, 0.0, horizon)?;
            let _ = writeln!(out.stdout, "cross log covariance {a}/{b} at horizon: mc {mc} analytic {analytic}");
        }
        let summary = out.stdout.clone();
        out.write(cfg.out_file("simulation_summary.txt")?, &summary)?;
        return Ok(out);
    }
    let model = resolve_model(cfg, &bundle, opts.model.as_deref(), opts.calibrate)?;
    let curve = bundle.curve(&cfg.asset)?;
    let last = *model.schedule().option_expiries().last().expect("non-empty schedule");
    let horizon = opts.horizon.unwrap_or(last.min(1.0));
    let grid = SimGrid::uniform(horizon, steps)?;
    let paths = simulate_factors(&model, &grid, cfg.n_paths, cfg.seed)?;
    let (s, ..) = path_summary(&model, curve, &paths)?;
    let _ = writeln!(out.stdout, "{} paths, {} steps to {horizon}, seed {}", cfg.n_paths, steps, cfg.seed);
    out.stdout.push_str(&s);
    let p = cfg.out_file(&format!("paths_{}.bin", cfg.asset))?;
    write_paths(&paths, &p)?;
    out.files.push(p);
    let summary = out.stdout.clone();
    out.write(cfg.out_file(&format!("simulation_{}.txt", cfg.asset))?, &summary)?;
    Ok(out)
}
