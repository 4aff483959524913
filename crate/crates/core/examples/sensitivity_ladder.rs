//! Price changes from bumping model parameters with the vanillas held at their marks.

use std::path::Path;

use curvekit::calibration::CalibrationMode;
use curvekit::commands::instrument_option;
use curvekit::marketdata::load_bundle;
use curvekit::sensitivity::{sensitivity_ladder, Bumps};

fn main() -> curvekit::Result<()> {
    let bundle = load_bundle(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/wti_bundle"))?;
    let curve = bundle.curve("wti")?;
    let schedule = bundle.asset("wti")?.schedule.as_ref().expect("fixture has a schedule");
    let instruments = bundle
        .instruments("wti")?
        .iter()
        .map(|row| Ok((row.label.clone(), instrument_option(row, curve, &[schedule], None)?)))
        .collect::<curvekit::Result<Vec<_>>>()?;
    let table = sensitivity_ladder(
        &bundle.model("wti")?.spec,
        CalibrationMode::Nonseasonal,
        &bundle.vols("wti")?.strip,
        curve,
        &instruments,
        Bumps::default(),
    )?;
    println!("label   base     mean rev   vol ratio  corr");
    for r in &table.rows {
        let d: Vec<String> = r.cells.iter().map(|c| c.diff.map_or("n/a".into(), |x| format!("{x:+.4}"))).collect();
        println!("{}  {:7.4}  {:>9}  {:>9}  {:>8}", r.label, r.base, d[0], d[1], d[2]);
    }
    Ok(())
}
