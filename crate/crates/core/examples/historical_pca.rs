//! Weighted principal components of futures returns and the two-factor fit.

use std::path::Path;

use curvekit::calibration::{fit_two_factor_to_pca, model_statistics, weighted_pca, ReturnPanel};
use curvekit::marketdata::load_bundle;

fn main() -> curvekit::Result<()> {
    let bundle = load_bundle(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/wti_bundle"))?;
    let h = bundle.history("wti")?;
    let panel = ReturnPanel::from_prices(&h.dates, h.tenors.clone(), &h.prices, 125.0)?;
    let pca = weighted_pca(&panel)?;
    println!("{} weighted returns over {} nearbies", panel.n_rows(), h.tenors.len());
    for k in 0..3 {
        println!("pc{}: explains {:.2}% cumulative", k + 1, 100.0 * pca.explained_fraction[k]);
    }
    let tenors: Vec<f64> = h.tenors.iter().map(|&k| k as f64 / 12.0).collect();
    let fit = fit_two_factor_to_pca(&pca, &tenors)?;
    println!(
        "fit: beta {:.3}, vol ratio {:.3}, rho {:.3}, residual {:.1e}",
        fit.beta, fit.vol_ratio, fit.rho, fit.residual
    );
    let stats = model_statistics(&fit.spec(0.0)?, &tenors, 1)?;
    println!("nearby  vol ratio  correlation to front");
    for k in (0..tenors.len()).step_by(4) {
        println!("{:6}  {:9.4}  {:.4}", h.tenors[k], stats.vol_ratio_curve[k], stats.correlation_curve[k]);
    }
    Ok(())
}
