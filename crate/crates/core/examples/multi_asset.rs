//! Joint simulation of two commodities with a cross-factor correlation.

use std::path::Path;

use curvekit::calibration::{calibrate, CalibrationMode};
use curvekit::factor_model::cross_asset_log_covariance;
use curvekit::marketdata::load_bundle;
use curvekit::simulation::{curve_paths, sample_covariance, simulate_multi_asset, AssetUniverse, SimGrid};

fn main() -> curvekit::Result<()> {
    let bundle = load_bundle(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/wti_bundle"))?;
    let names = ["wti", "brent"];
    let models = names
        .iter()
        .map(|a| Ok((a.to_string(), calibrate(CalibrationMode::Nonseasonal, &bundle.model(a)?.spec, &bundle.vols(a)?.strip)?)))
        .collect::<curvekit::Result<Vec<_>>>()?;
    let cross = bundle.cross_pairs();
    let universe = AssetUniverse::new(models.clone(), &cross)?;
    let horizon = 0.5;
    let sims = simulate_multi_asset(&universe, &SimGrid::new(vec![horizon])?, 100_000, 3)?;
    let expiry = 1.0;
    let logs: Vec<Vec<f64>> = sims
        .iter()
        .map(|(name, paths)| {
            let curve = bundle.curve(name)?;
            let m = &models.iter().find(|(n, _)| n == name).expect("simulated asset").1;
            let f0 = curve.price(expiry)?;
            Ok(curve_paths(m, curve, paths, &[expiry])?.column(0, 0).iter().map(|f| (f / f0).ln()).collect())
        })
        .collect::<curvekit::Result<_>>()?;
    let exact = cross_asset_log_covariance(&models[0].1, &models[1].1, &cross[0].2, expiry, expiry, 0.0, horizon)?;
    println!("log covariance at {horizon}y of the 1y contracts");
    println!("monte carlo {:.6}", sample_covariance(&logs[0], &logs[1]));
    println!("analytic    {exact:.6}");
    Ok(())
}
