mod support;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use support::bundle;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(bundle: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvekit"))
        .arg("--bundle")
        .arg(bundle)
        .arg("--out")
        .arg(out)
        .args(["--asset", "wti"])
        .args(args)
        .output()
        .unwrap()
}

fn ok(bundle: &Path, out: &Path, args: &[&str]) -> String {
    let o = run(bundle, out, args);
    assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

/// Data rows of the first CSV block that starts with a `label` header.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip_while(|l| !l.starts_with("label,"))
        .skip(1)
        .take_while(|l| !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for e in std::fs::read_dir(from).unwrap() {
        let p = e.unwrap().path();
        let target = to.join(p.file_name().unwrap());
        if p.is_dir() {
            copy_dir(&p, &target);
        } else {
            std::fs::copy(&p, &target).unwrap();
        }
    }
}

#[test]
fn calibrate_reports_a_tight_round_trip() {
    let out = tempfile::tempdir().unwrap();
    let text = ok(&bundle(), out.path(), &["calibrate"]);
    let err = text.lines().find_map(|l| l.strip_prefix("max round-trip vol error: ")).unwrap();
    assert!(num(err) < 1e-10, "{err}");
    assert!(out.path().join("model_wti.json").exists());
    for r in csv_rows(&out.path().join("calibration_wti.csv")) {
        assert!(num(&r[3]) < 1e-10, "{}", r[0]);
    }
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    rows(&std::fs::read_to_string(path).unwrap())
}

#[test]
fn hybrid_without_non_fungibility_matches_nonseasonal() {
    let out = tempfile::tempdir().unwrap();
    let plain = rows(&ok(&bundle(), out.path(), &["price", "--calibrate"]));
    let hybrid = rows(&ok(&bundle(), out.path(), &["--mode", "hybrid", "--epsilon", "0", "price", "--calibrate"]));
    assert_eq!(plain.len(), hybrid.len());
    for (a, b) in plain.iter().zip(&hybrid) {
        assert!((num(&a[1]) - num(&b[1])).abs() <= 1e-12 * num(&a[1]), "{}", a[0]);
    }
}

#[test]
fn missing_vol_file_is_an_input_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&bundle(), dir.path());
    std::fs::remove_file(dir.path().join("vols/wti.csv")).unwrap();
    let o = run(dir.path(), &dir.path().join("out"), &["calibrate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("vols/wti.csv"));
}

#[test]
fn price_handles_every_instrument_kind() {
    let out = tempfile::tempdir().unwrap();
    let instruments = fixture("mixed_instruments.csv");
    let text = ok(&bundle(), out.path(), &["price", "--calibrate", "--instruments", instruments.to_str().unwrap()]);
    let r = rows(&text);
    let get = |label: &str| r.iter().find(|x| x[0] == label).unwrap().clone();
    // vanillas on the marked contract carry its vol
    assert_eq!(num(&get("JAN15_atm")[2]), 0.2037);
    assert_eq!(num(&get("JAN15_90put")[2]), 0.2037);
    // a one-contract swaption is the early-expiry vanilla
    assert_eq!(get("JAN15_early")[1], get("JAN15_early_vanilla")[1]);
    // a bad row is reported in place without aborting the batch
    assert!(get("bad_kind")[4].starts_with("ERROR"));
    assert_eq!(r.len(), 8);
}

#[test]
fn smile_on_a_flat_surface_changes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&bundle(), dir.path());
    let vols = dir.path().join("vols/wti.csv");
    let flat: Vec<String> = std::fs::read_to_string(&vols)
        .unwrap()
        .lines()
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            if l.starts_with('#') || l.starts_with("label") {
                return l.to_string();
            }
            let mut v = cells[..4].to_vec();
            v.extend([cells[3]; 5]);
            v.join(",")
        })
        .collect();
    std::fs::write(&vols, flat.join("\n") + "\n").unwrap();
    let out = dir.path().join("out");
    let instruments = fixture("mixed_instruments.csv");
    let base = ok(dir.path(), &out, &["price", "--calibrate", "--instruments", instruments.to_str().unwrap()]);
    let smile = ok(dir.path(), &out, &["price", "--calibrate", "--smile", "--instruments", instruments.to_str().unwrap()]);
    assert_eq!(base, smile);
}

#[test]
fn zero_bumps_give_zero_differences() {
    let out = tempfile::tempdir().unwrap();
    let text = ok(&bundle(), out.path(), &["sensitivity", "--mean-rev-bump", "0", "--vol-ratio-bump", "0", "--corr-bump", "0"]);
    for r in rows(&text) {
        for k in [3, 5, 7] {
            assert_eq!(num(&r[k]), 0.0, "{} column {k}", r[0]);
        }
    }
}

#[test]
fn compare_reports_differences_and_positions() {
    let out = tempfile::tempdir().unwrap();
    let (p1, q1, p2) = (fixture("consensus_prices.csv"), fixture("consensus_quotes.csv"), fixture("broker_prices.csv"));
    let t1 = rows(&ok(&bundle(), out.path(), &["compare", "--prices", p1.to_str().unwrap(), "--quotes", q1.to_str().unwrap()]));
    assert_eq!(&t1[0][..4], ["Cal15", "9.49", "9.97", "-4.8%"]);
    let t2 = rows(&ok(&bundle(), out.path(), &["compare", "--prices", p2.to_str().unwrap()]));
    assert_eq!((t2[0][4].as_str(), t2[0][5].as_str()), ("inside", "OK"));
    // a price above both consensus and offer
    let dir = tempfile::tempdir().unwrap();
    let (prices, quotes) = (dir.path().join("p.csv"), dir.path().join("q.csv"));
    std::fs::write(&prices, "label,price\nCal15,5.10\n").unwrap();
    std::fs::write(&quotes, "# as_of: 2014-03-19\nlabel,quote_date,ref_swap,bid,offer,consensus\nCal15,2014-03-19,88.00,4.57,4.97,4.77\n").unwrap();
    let t3 = rows(&ok(&bundle(), out.path(), &["compare", "--prices", prices.to_str().unwrap(), "--quotes", quotes.to_str().unwrap()]));
    assert_eq!((t3[0][4].as_str(), t3[0][5].as_str()), ("above_offer", "RECALIBRATE"));
}

#[test]
fn history_recovers_the_two_factor_shape() {
    let out = tempfile::tempdir().unwrap();
    let text = ok(&bundle(), out.path(), &["history"]);
    assert!(text.contains("half life 125"));
    let explained = text.lines().find_map(|l| l.strip_prefix("explained by first two components: ")).unwrap();
    assert!(num(explained) > 0.95);
    let fit = text.lines().find(|l| l.starts_with("fit:")).unwrap();
    let beta = num(fit.split_whitespace().nth(2).unwrap());
    assert!((beta - 0.35).abs() < 0.05, "{beta}");
}

fn martingale_rows(text: &str) -> Vec<(f64, f64)> {
    text.lines()
        .filter(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit()) && l.matches(',').count() == 6)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (num(c[2]), num(c[3]))
        })
        .collect()
}

#[test]
fn simulate_is_a_reproducible_martingale() {
    let out = tempfile::tempdir().unwrap();
    let args = ["--n-paths", "20000", "--seed", "5", "simulate", "--calibrate"];
    let text = ok(&bundle(), out.path(), &args);
    let r = martingale_rows(&text);
    assert_eq!(r.len(), 12);
    for (mean, se) in r {
        assert!((mean - 1.0).abs() < 3.0 * se, "{mean} ± {se}");
    }
    let first = std::fs::read(out.path().join("paths_wti.bin")).unwrap();
    ok(&bundle(), out.path(), &args);
    assert_eq!(first, std::fs::read(out.path().join("paths_wti.bin")).unwrap());
}

#[test]
fn simulate_runs_assets_jointly() {
    let out = tempfile::tempdir().unwrap();
    let text = ok(&bundle(), out.path(), &["--n-paths", "20000", "simulate", "--calibrate", "--assets", "wti,brent"]);
    assert!(text.contains("[wti]") && text.contains("[brent]"));
    assert_eq!(martingale_rows(&text).len(), 24);
    let line = text.lines().find(|l| l.starts_with("cross log covariance")).unwrap();
    let w: Vec<&str> = line.split_whitespace().collect();
    let (mc, exact) = (num(w[7]), num(w[9]));
    assert!((mc - exact).abs() < 0.05 * exact, "{line}");
    assert!(out.path().join("paths_brent.bin").exists());
}
