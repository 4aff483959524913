//! Calendar-strip swaptions priced by moment matching, with a one-contract check.

use std::path::Path;

use curvekit::calibration::{calibrate, CalibrationMode};
use curvekit::commands::instrument_option;
use curvekit::marketdata::load_bundle;
use curvekit::pricing::{price, CallPut, OptionSpec};

fn main() -> curvekit::Result<()> {
    let bundle = load_bundle(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/wti_bundle"))?;
    let curve = bundle.curve("wti")?;
    let schedule = bundle.asset("wti")?.schedule.as_ref().expect("fixture has a schedule");
    let m = calibrate(CalibrationMode::Nonseasonal, &bundle.model("wti")?.spec, &bundle.vols("wti")?.strip)?;
    println!("label   strike   price   vol");
    for row in bundle.instruments("wti")? {
        let opt = instrument_option(row, curve, &[schedule], None)?;
        let r = price(&m, curve, &opt)?;
        println!("{}  {:6.2}  {:6.3}  {:.4}", row.label, opt.strike, r.price, r.vol);
    }
    // a swaption on one contract is that contract's vanilla
    let c = &schedule.entries()[12];
    let t = c.option_expiry.years() - 0.25;
    let f = curve.price(c.futures_expiry.years())?;
    let vanilla = OptionSpec::vanilla(f, CallPut::Call, t, c.futures_expiry.years(), 1.0)?;
    let swaption = OptionSpec::new(
        curvekit::pricing::OptionKind::Swaption,
        f,
        CallPut::Call,
        t,
        curvekit::pricing::SamplingSchedule::swaption(t, &[(c.futures_expiry.years(), 1.0, 1.0)])?,
        1.0,
    )?;
    println!(
        "{} early: vanilla {:.6}, one-contract swaption {:.6}",
        c.label,
        price(&m, curve, &vanilla)?.price,
        price(&m, curve, &swaption)?.price
    );
    Ok(())
}
