use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use curvekit::calibration::CalibrationMode;
use curvekit::commands::{
    cmd_calibrate, cmd_compare, cmd_history, cmd_price, cmd_sensitivity, cmd_simulate, exit_code, CompareOptions,
    HistoryOptions, PriceOptions, RunConfig, SensitivityOptions, SimulateOptions,
};
use curvekit::sensitivity::Bumps;

#[derive(Parser)]
#[command(name = "curvekit", version, about = "Forward curve calibration, pricing and simulation")]
struct Cli {
    /// Data bundle directory.
    #[arg(long, global = true, default_value = ".")]
    bundle: PathBuf,
    #[arg(long, global = true, default_value = "")]
    asset: String,
    #[arg(long, global = true, default_value = "nonseasonal", value_parser = ["nonseasonal", "seasonal", "hybrid"])]
    mode: String,
    /// Non-fungibility override, hybrid mode only.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 10_000)]
    n_paths: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = "curvekit-out")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelSource {
    /// Calibrated model file; defaults to the bundle's model document.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Calibrate the bundle's spec before use.
    #[arg(long)]
    calibrate: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the scaling functions to the vanilla vol strip.
    Calibrate,
    /// Price the instrument list.
    Price {
        #[arg(long)]
        instruments: Option<PathBuf>,
        #[command(flatten)]
        source: ModelSource,
        /// Apply the quick-delta smile adjustment.
        #[arg(long)]
        smile: bool,
    },
    /// Parameter bumps with the vanillas held at their marks.
    Sensitivity {
        #[arg(long)]
        instruments: Option<PathBuf>,
        #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
        mean_rev_bump: f64,
        #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
        vol_ratio_bump: f64,
        #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
        corr_bump: f64,
    },
    /// Model prices against consensus and broker quotes.
    Compare {
        /// CSV with `label,price`; otherwise the instruments are priced.
        #[arg(long)]
        prices: Option<PathBuf>,
        #[arg(long)]
        quotes: Option<PathBuf>,
        #[command(flatten)]
        source: ModelSource,
    },
    /// Weighted PCA of the price history and the two-factor fit.
    History {
        #[arg(long, default_value_t = 125.0)]
        half_life: f64,
        #[arg(long, default_value_t = 12)]
        reference: usize,
    },
    /// Monte Carlo factor paths with martingale and variance checks.
    Simulate {
        #[command(flatten)]
        source: ModelSource,
        #[arg(long, default_value_t = 12)]
        steps: usize,
        #[arg(long)]
        horizon: Option<f64>,
        /// Comma-separated assets simulated jointly.
        #[arg(long, value_delimiter = ',')]
        assets: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("CURVEKIT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a pool already built is fine; the count only caps parallelism
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let cfg = RunConfig {
        bundle: cli.bundle,
        asset: cli.asset,
        mode: cli.mode.parse::<CalibrationMode>().expect("clap restricts the mode"),
        epsilon: cli.epsilon,
        seed: cli.seed,
        n_paths: cli.n_paths,
        out: cli.out,
    };
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    let result = match cli.command {
        Command::Calibrate => cmd_calibrate(&cfg),
        Command::Price {
            instruments,
            source,
            smile,
        } => cmd_price(
            &cfg,
            &PriceOptions {
                instruments,
                model: source.model,
                calibrate: source.calibrate,
                smile,
            },
        ),
        Command::Sensitivity {
            instruments,
            mean_rev_bump,
            vol_ratio_bump,
            corr_bump,
        } => cmd_sensitivity(
            &cfg,
            &SensitivityOptions {
                instruments,
                bumps: Bumps {
                    mean_reversion: mean_rev_bump,
                    vol_ratio: vol_ratio_bump,
                    correlation: corr_bump,
                },
            },
        ),
        Command::Compare { prices, quotes, source } => cmd_compare(
            &cfg,
            &CompareOptions {
                prices,
                quotes,
                model: source.model,
                calibrate: source.calibrate,
            },
        ),
        Command::History { half_life, reference } => cmd_history(
            &cfg,
            &HistoryOptions {
                half_life,
                reference,
                ..HistoryOptions::default()
            },
        ),
        Command::Simulate {
            source,
            steps,
            horizon,
            assets,
        } => cmd_simulate(
            &cfg,
            &SimulateOptions {
                model: source.model,
                calibrate: source.calibrate,
                horizon,
                steps,
                assets,
            },
        ),
    };
    match &result {
        Ok(out) => print!("{}", out.stdout),
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
