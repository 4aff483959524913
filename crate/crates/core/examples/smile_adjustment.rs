//! Quick-delta smile adjustment across strikes of a calendar swaption.

use std::path::Path;

use curvekit::calibration::CalibrationMode;
use curvekit::commands::instrument_option;
use curvekit::marketdata::load_bundle;
use curvekit::pricing::{smile_adjusted_price, CallPut};

fn main() -> curvekit::Result<()> {
    let bundle = load_bundle(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/wti_bundle"))?;
    let curve = bundle.curve("wti")?;
    let schedule = bundle.asset("wti")?.schedule.as_ref().expect("fixture has a schedule");
    let surface = bundle.vols("wti")?.surface.as_ref().expect("fixture has smile columns");
    let spec = &bundle.model("wti")?.spec;
    let row = &bundle.instruments("wti")?[0];
    let atm = instrument_option(row, curve, &[schedule], None)?;
    println!("{} ATM strike {:.2}", row.label, atm.strike);
    println!("strike  side   qd     atm price  smile price");
    for k in [70.0, 80.0, 90.0, 100.0, 110.0] {
        let side = if k < atm.strike { CallPut::Put } else { CallPut::Call };
        let opt = atm.with_strike(k)?.with_call_put(side);
        let s = smile_adjusted_price(spec, CalibrationMode::Nonseasonal, surface, curve, &opt)?;
        println!(
            "{k:6.1}  {side:?}  {:.3}  {:9.4}  {:11.4}{}",
            s.quick_delta,
            s.atm.price,
            s.adjusted.price,
            if s.extrapolated { " (extrapolated)" } else { "" }
        );
    }
    Ok(())
}
