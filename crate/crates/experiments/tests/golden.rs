//! Runs the binary on pinned configurations and compares report.csv with the stored
//! copies, numerically for number cells and exactly for everything else.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

const REL_TOL: f64 = 1e-8;

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn assert_same_table(got: &str, want: &str) {
    let (got, want) = (data_lines(got), data_lines(want));
    assert_eq!(got.len(), want.len(), "row count");
    for (n, (g, w)) in got.iter().zip(&want).enumerate() {
        let (gc, wc): (Vec<&str>, Vec<&str>) = (g.split(',').collect(), w.split(',').collect());
        assert_eq!(gc.len(), wc.len(), "line {n}: {g}");
        for (a, b) in gc.iter().zip(&wc) {
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => assert!(
                    (x - y).abs() <= REL_TOL * x.abs().max(y.abs()),
                    "line {n}: {x} vs {y}\n{g}\n{w}"
                ),
                _ => assert_eq!(a, b, "line {n}"),
            }
        }
    }
}

fn run_golden(command: &str, name: &str) {
    let out = tempfile::tempdir().unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_bessel-harmonic"))
        .arg(command)
        .arg("--config")
        .arg(golden_dir().join(format!("{name}.cfg")))
        .arg("--out")
        .arg(out.path())
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "{command}: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let got = fs::read_to_string(out.path().join("report.csv")).unwrap();
    let want = fs::read_to_string(golden_dir().join(format!("{name}.csv"))).unwrap();
    assert_same_table(&got, &want);
}

#[test]
fn sparse_demo_matches_golden() {
    run_golden("sparse-demo", "sparse_demo");
}

#[test]
fn two_weight_scan_matches_golden() {
    run_golden("scan-t12", "scan_t12");
}

#[test]
fn comparison_is_numeric() {
    assert_same_table("# x\na,1.0e0\n", "# y\na,1.00000000001e0\n");
    assert!(std::panic::catch_unwind(|| assert_same_table("a,1.0\n", "a,1.1\n")).is_err());
    assert!(std::panic::catch_unwind(|| assert_same_table("a,1.0\n", "b,1.0\n")).is_err());
}
