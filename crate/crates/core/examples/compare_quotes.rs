//! Model swaption prices checked against broker bid and offer.

use std::path::Path;

use curvekit::calibration::{calibrate, CalibrationMode};
use curvekit::commands::instrument_option;
use curvekit::marketdata::load_bundle;
use curvekit::pricing::{compare_quotes, price};

fn main() -> curvekit::Result<()> {
    let bundle = load_bundle(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/wti_bundle"))?;
    let curve = bundle.curve("wti")?;
    let schedule = bundle.asset("wti")?.schedule.as_ref().expect("fixture has a schedule");
    let m = calibrate(CalibrationMode::Nonseasonal, &bundle.model("wti")?.spec, &bundle.vols("wti")?.strip)?;
    let prices = bundle
        .instruments("wti")?
        .iter()
        .map(|row| Ok((row.label.clone(), price(&m, curve, &instrument_option(row, curve, &[schedule], None)?)?.price)))
        .collect::<curvekit::Result<Vec<_>>>()?;
    let report = compare_quotes(&prices, bundle.quotes("wti")?);
    println!("label  model   position     flag");
    for r in &report.rows {
        println!("{}  {:6.3}  {:<11}  {}", r.label, r.model, format!("{:?}", r.position), r.flag);
    }
    Ok(())
}
