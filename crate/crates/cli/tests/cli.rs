use std::path::PathBuf;
use std::process::{Command, Output};

fn tmp(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn write_config(name: &str, text: &str) -> PathBuf {
    let path = tmp(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn stepwise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stepwise"))
        .args(args)
        .env_remove("OUT_DIR")
        .env_remove("WORKER_THREADS")
        .output()
        .unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = stepwise(args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn value<'a>(report: &'a str, key: &str) -> &'a str {
    report
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in\n{report}"))
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

const SCAN: &str = r#"
[model]
kind = "qubit"
lambda1 = 0.5
lambda2 = 0.5

[scan]
axis1 = { name = "alpha", lo = 0.5, hi = 2.5, steps = 4 }
axis2 = { name = "beta", lo = 0, hi = "2*pi", steps = 5 }
"#;

const BAYES: &str = r#"
[model]
kind = "qubit"
lambda1 = "pi"
lambda2 = "7*pi/8"

[bayes]
total_shots = 300
gamma = 0.5
seed = 9
grid_points = 100
prior_width1 = "pi/5"
prior_width2 = "pi/5"
batch_size = 30
"#;

#[test]
fn scan_writes_header_metadata_and_rows() {
    let cfg = write_config("scan.toml", SCAN);
    let text = stdout(&["scan", "--config", cfg.to_str().unwrap(), "--threads", "1"]);
    assert!(text.starts_with("# stepwise "));
    assert!(text.contains("# command: scan"));
    let rows = data_lines(&text);
    assert!(rows[0].starts_with("axis1,axis2,q11,q12,q22,delta"));
    assert_eq!(rows.len(), 1 + 4 * 5);
    assert!(rows[1..].iter().all(|r| r.split(',').count() == 18));
}

#[test]
fn scan_output_is_independent_of_thread_count() {
    let cfg = write_config("scan_threads.toml", SCAN);
    let one = stdout(&["scan", "--config", cfg.to_str().unwrap(), "--threads", "1"]);
    let three = stdout(&["scan", "--config", cfg.to_str().unwrap(), "--threads", "3"]);
    assert_eq!(one, three);
}

#[test]
fn scan_writes_to_file() {
    let cfg = write_config("scan_file.toml", SCAN);
    let out = tmp("scan_out.csv");
    let printed = stdout(&[
        "scan",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(printed.is_empty());
    let written = std::fs::read_to_string(&out).unwrap();
    assert_eq!(data_lines(&written).len(), 21);
}

#[test]
fn scaling_reports_slopes() {
    let cfg = write_config(
        "scaling.toml",
        "[model]\nkind = \"ising\"\nlambda1 = 1.9\nlambda2 = 0.28\n[scaling]\nlengths = [4, 5, 6]\n",
    );
    let text = stdout(&["scaling", "--config", cfg.to_str().unwrap()]);
    let rows = data_lines(&text);
    assert_eq!(rows[0], "L,mu,mu_tilde,gamma_opt,region");
    assert_eq!(rows.len(), 4);
    assert!(text.contains("# slope_mu="));
}

#[test]
fn bayes_is_byte_identical_on_repeat() {
    let cfg = write_config("bayes.toml", BAYES);
    let args = ["bayes", "--config", cfg.to_str().unwrap()];
    let a = stdout(&args);
    let b = stdout(&args);
    assert_eq!(a, b);
    assert!(a.contains("# seed=9 "));
    let rows = data_lines(&a);
    assert_eq!(
        rows[0],
        "shots_used,est1,est2,var1,var2,scaled_error,mu,mu_tilde"
    );
    assert_eq!(rows.len(), 1 + 10);
    assert!(rows.last().unwrap().starts_with("300,"));

    let other = stdout(&["bayes", "--config", cfg.to_str().unwrap(), "--seed", "10"]);
    assert_ne!(data_lines(&a), data_lines(&other));
}

#[test]
fn point_reports() {
    let gaussian = write_config(
        "gaussian.toml",
        "[model]\nkind = \"gaussian\"\nalpha_re = 1\nr = 1\n",
    );
    let text = stdout(&["point", "--config", gaussian.to_str().unwrap()]);
    assert_eq!(value(&text, "region"), "III");
    assert_eq!(value(&text, "delta"), "nan");

    let qubit = write_config("qubit.toml", "[model]\nkind = \"qubit\"\n");
    let text = stdout(&[
        "point",
        "--config",
        qubit.to_str().unwrap(),
        "--lambda1",
        "-0.3",
    ]);
    assert_eq!(value(&text, "lambda1"), "-3.00000000000e-1");
    for key in [
        "q11",
        "q12",
        "q22",
        "delta",
        "mu",
        "mu_tilde",
        "gamma_opt",
        "hcrb",
    ] {
        let v: f64 = value(&text, key).parse().unwrap();
        assert!(v.is_finite(), "{key}={v}");
    }

    let ising = write_config("ising.toml", "[model]\nkind = \"ising\"\nlength = 6\n");
    let text = stdout(&[
        "point",
        "--config",
        ising.to_str().unwrap(),
        "--lambda1",
        "1.9",
        "--lambda2",
        "0.28",
    ]);
    let ratio: f64 = value(&text, "ratio").parse().unwrap();
    assert!(ratio < 1.0);
}

#[test]
fn bad_input_exits_nonzero() {
    let garbled = write_config("garbled.toml", "[model]\nkind = \"qutrit\"\n");
    let out = stepwise(&["point", "--config", garbled.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let long_chain = write_config("long.toml", "[model]\nkind = \"ising\"\nlength = 13\n");
    assert!(
        !stepwise(&["point", "--config", long_chain.to_str().unwrap()])
            .status
            .success()
    );

    let missing = tmp("does_not_exist.toml");
    assert!(!stepwise(&["scan", "--config", missing.to_str().unwrap()])
        .status
        .success());

    let no_scan = write_config("no_scan.toml", "[model]\nkind = \"lz\"\n");
    assert!(!stepwise(&["scan", "--config", no_scan.to_str().unwrap()])
        .status
        .success());
}
