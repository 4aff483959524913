//! Fit the scaling functions to a vanilla vol strip under each calibration mode.

use std::path::Path;

use curvekit::calibration::{calibrate, implied_vanilla_vol, CalibrationMode};
use curvekit::marketdata::load_bundle;

fn main() -> curvekit::Result<()> {
    let bundle = load_bundle(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/wti_bundle"))?;
    let strip = &bundle.vols("wti")?.strip;
    let spec = &bundle.model("wti")?.spec;
    println!("{} contracts, beta {:?}", strip.len(), spec.beta());
    for mode in [CalibrationMode::Nonseasonal, CalibrationMode::Seasonal, CalibrationMode::Hybrid] {
        let m = calibrate(mode, spec, strip)?;
        let worst = strip
            .quotes()
            .iter()
            .zip(m.schedule().entries())
            .map(|(q, c)| implied_vanilla_vol(&m, c).map(|v| (v - q.implied_vol).abs()))
            .collect::<curvekit::Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let alpha = m.alpha_knots();
        println!(
            "{mode:?}: alpha first {:.4} last {:.4}, worst vol error {worst:.1e}",
            alpha[0],
            alpha[alpha.len() - 1]
        );
    }
    Ok(())
}
