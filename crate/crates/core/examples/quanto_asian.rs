//! A monthly-average Asian paid in a foreign currency, across FX correlations.

use std::path::Path;

use curvekit::calibration::{calibrate, CalibrationMode};
use curvekit::marketdata::load_bundle;
use curvekit::pricing::{price, quanto_price, CallPut, FxSpec, OptionKind, OptionSpec, SampleEntry, SamplingSchedule};

fn main() -> curvekit::Result<()> {
    let bundle = load_bundle(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/wti_bundle"))?;
    let curve = bundle.curve("wti")?;
    let m = calibrate(CalibrationMode::Nonseasonal, &bundle.model("wti")?.spec, &bundle.vols("wti")?.strip)?;
    // one fixing per month on the then-front contract through the next year
    let entries = m.schedule().entries();
    let fixings = entries[9..21]
        .iter()
        .map(|c| SampleEntry::new(c.option_expiry.years(), c.futures_expiry.years(), 1.0 / 12.0, 1.0))
        .collect::<curvekit::Result<Vec<_>>>()?;
    let sched = SamplingSchedule::new(fixings)?;
    let expiry = sched.last_sample();
    let base = OptionSpec::new(OptionKind::Asian, 0.0, CallPut::Call, expiry, sched, 1.0)?;
    let forward = price(&m, curve, &base)?.forward;
    let opt = base.with_strike(forward)?;
    println!("domestic ATM Asian: {:.4} (strike {forward:.2})", price(&m, curve, &opt)?.price);
    // the foreign-currency average has its own forward; strike there
    let fx = bundle.fx_for("wti")?;
    let quanto_forward = quanto_price(&m, fx, curve, &base)?.forward;
    let quanto = base.with_strike(quanto_forward)?;
    let r = quanto_price(&m, fx, curve, &quanto)?;
    println!("quanto ATM Asian: {:.4} (strike {quanto_forward:.2}, vol {:.4})", r.price, r.vol);
    println!("rho_x   quanto price");
    for rho in [-0.5, -0.25, 0.0, 0.25, 0.5] {
        let shifted = FxSpec::new(fx.spot(), fx.sigma_x().clone(), flat(0.005), flat(0.01), vec![rho, rho])?;
        println!("{rho:5.2}   {:.4}", quanto_price(&m, &shifted, curve, &quanto)?.price);
    }
    Ok(())
}

fn flat(r: f64) -> curvekit::termstructure::PiecewiseConstant {
    curvekit::termstructure::PiecewiseConstant::constant(r)
}
