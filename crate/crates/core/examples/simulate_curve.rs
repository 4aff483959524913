//! Monte Carlo forward-curve scenarios from the factor paths.

use std::path::Path;

use curvekit::calibration::{calibrate, CalibrationMode};
use curvekit::marketdata::load_bundle;
use curvekit::simulation::{curve_paths, simulate_factors, SampleStats, SimGrid};

fn main() -> curvekit::Result<()> {
    let bundle = load_bundle(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/wti_bundle"))?;
    let curve = bundle.curve("wti")?;
    let m = calibrate(CalibrationMode::Nonseasonal, &bundle.model("wti")?.spec, &bundle.vols("wti")?.strip)?;
    let grid = SimGrid::uniform(1.0, 4)?;
    let paths = simulate_factors(&m, &grid, 50_000, 7)?;
    let expiries: Vec<f64> = m.schedule().entries()[12..].iter().step_by(12).map(|c| c.futures_expiry.years()).collect();
    let scenarios = curve_paths(&m, curve, &paths, &expiries)?;
    println!("date  expiry  F0      mean     5%      95%");
    for (d, t) in grid.dates().iter().enumerate() {
        for (e, big_t) in expiries.iter().enumerate() {
            let mut col = scenarios.column(d, e);
            let s = SampleStats::from_slice(&col);
            col.sort_by(f64::total_cmp);
            let q = |p: f64| col[(p * (col.len() - 1) as f64) as usize];
            println!(
                "{t:.2}  {big_t:6.2}  {:6.2}  {:6.2}  {:6.2}  {:6.2}",
                curve.price(*big_t)?,
                s.mean,
                q(0.05),
                q(0.95)
            );
        }
    }
    Ok(())
}
