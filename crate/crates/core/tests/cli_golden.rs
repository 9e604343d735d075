use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_torus-heun"))
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).output().expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn check(name: &str, args: &[&str]) {
    let (code, stdout, stderr) = run(args);
    assert_eq!(code, 0, "{name}: {stderr}");
    let expected = std::fs::read_to_string(golden(name)).unwrap();
    assert_eq!(stdout, expected, "{name}");
}

#[test]
fn closed_form() {
    check("closed_form.out", &["closed-form", "--omega", "1", "--delta", "0.6", "--b", "1.4142135624"]);
}

#[test]
fn growth() {
    check("growth.out", &["growth", "--omega", "1", "--delta", "0.6", "--nmax", "1"]);
}

#[test]
fn heun_che() {
    check("heun_che_no_solution.out", &["heun", "che", "--b", "1", "--g", "2", "--nu-re", "0", "--nu-im", "1"]);
    check("heun_che_family.out", &["heun", "che", "--b", "1", "--g", "2", "--nu-re", "0", "--nu-im", "0"]);
    check("heun_che_pair.out", &["heun", "che", "--b", "1", "--g", "1", "--nu-re", "0", "--nu-im", "0"]);
}

#[test]
fn heun_ghe() {
    check(
        "heun_ghe.out",
        &["heun", "ghe", "--alpha", "3", "--b", "0.625", "--c", "0.625", "--nu-re", "0", "--nu-im", "0"],
    );
    check(
        "heun_ghe_minus_complement.out",
        &["heun", "ghe", "--alpha", "2", "--b", "0.5", "--c", "2", "--root", "-", "--branch", "complement"],
    );
}

#[test]
fn heun_verify_appends_small_residual() {
    let (code, stdout, _) = run(&["heun", "ghe", "--alpha", "3", "--b", "0.625", "--c", "0.625", "--verify"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!(v["residual"].as_f64().unwrap() < 1e-9);
    let (code, stdout, _) = run(&["heun", "che", "--b", "0.3", "--g", "1", "--nu-im", "0.2", "--root", "-", "--verify"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert!(v["residual"].as_f64().unwrap() < 1e-9);
}

#[test]
fn rotnum() {
    let base = ["rotnum", "--omega", "1", "--delta", "0.6", "--bigd", "0", "--a", "0"];
    let mut args = base.to_vec();
    args.extend(["--b", "1.4142135624"]);
    check("rotnum_elliptic.out", &args);
    let mut args = base.to_vec();
    args.extend(["--b", "0.5"]);
    check("rotnum_locked.out", &args);
}

#[test]
fn monodromy() {
    check(
        "monodromy.out",
        &["monodromy", "--omega", "1", "--delta", "0.6", "--bigd", "0", "--b", "0.5", "--a", "0"],
    );
}

#[test]
fn scan() {
    let args = [
        "scan", "--omega", "1", "--delta", "0.25", "--bigd", "0", "--b", "1", "--amin", "3.9", "--amax", "4.2", "--na",
        "5", "--threshold", "0.5",
    ];
    check("scan.out", &args);
    let mut one = args.to_vec();
    one.extend(["--workers", "1"]);
    check("scan.out", &one);
}

#[test]
fn audit_quantization() {
    check(
        "audit.out",
        &[
            "audit-quantization", "--omega", "1", "--delta", "0.4", "--bigd", "0", "--rect=-4,4,-4,4", "--samples", "20",
            "--seed", "3",
        ],
    );
}

#[test]
fn portrait_csv_and_pgm() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("p.csv");
    let pgm = dir.path().join("p.pgm");
    for workers in ["1", "3"] {
        let (code, stdout, stderr) = run(&[
            "portrait", "--omega", "1", "--delta", "0.6", "--bigd", "0", "--bmin", "0", "--bmax", "2", "--amin", "0",
            "--amax", "1", "--nb", "3", "--na", "2", "--out", csv.to_str().unwrap(), "--pgm", pgm.to_str().unwrap(),
            "--channel", "lyapunov", "--clip", "0,1.25", "--workers", workers,
        ]);
        assert_eq!(code, 0, "{stderr}");
        assert_eq!(stdout, std::fs::read_to_string(golden("portrait.out")).unwrap());
        assert_eq!(std::fs::read_to_string(&csv).unwrap(), std::fs::read_to_string(golden("portrait.csv")).unwrap());
        let bytes = std::fs::read(&pgm).unwrap();
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        // Top row is A = 1, bottom row A = 0; B = 0 at A = 0 has the clip maximum.
        assert_eq!(bytes[header.len() + 3], 255);
        assert_eq!(bytes[header.len() + 5], 0);
    }
}

#[test]
fn validation_errors_exit_with_2() {
    for args in [
        vec!["rotnum", "--omega", "1", "--delta", "1", "--b", "1"],
        vec!["rotnum", "--omega", "0", "--delta", "0.5", "--b", "1"],
        vec!["closed-form", "--omega", "-1", "--delta", "0.5", "--b", "2"],
        vec!["heun", "ghe", "--alpha", "0.5", "--b", "1", "--c", "0"],
        vec!["heun", "che", "--b", "0", "--g", "1"],
        vec!["rotnum", "--omega", "1"],
        vec!["no-such-command"],
        vec!["growth", "--omega", "1", "--delta", "0.5", "--nmax", "x"],
        vec!["scan", "--omega", "1", "--delta", "0", "--b", "1", "--amin", "0", "--amax", "1", "--na", "1"],
        vec!["audit-quantization", "--omega", "1", "--delta", "0.4", "--rect", "1,2,3"],
    ] {
        let (code, stdout, stderr) = run(&args);
        assert_eq!(code, 2, "{args:?}");
        assert!(stdout.is_empty());
        assert!(!stderr.is_empty());
    }
}

#[test]
fn io_errors_exit_with_1() {
    let (code, _, stderr) = run(&[
        "portrait", "--omega", "1", "--delta", "0.3", "--bmin", "0", "--bmax", "1", "--amin", "0", "--amax", "1", "--nb",
        "2", "--na", "2", "--out", "/nonexistent-dir/p.csv",
    ]);
    assert_eq!(code, 1);
    assert!(stderr.contains("/nonexistent-dir/p.csv"));
}

#[test]
fn negative_values_are_accepted() {
    let (code, stdout, _) = run(&["closed-form", "--omega", "1", "--delta", "0.6", "--b", "-1.4142135624"]);
    assert_eq!(code, 0);
    assert_eq!(stdout, "{\"rho\":-1.25}\n");
}
