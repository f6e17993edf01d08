use std::fs;
use std::process::{Command, Output};

fn jscc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jscc")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn column<'a>(csv: &'a str, name: &str) -> Vec<&'a str> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name} in {header:?}"));
    lines.map(|l| l.split(',').nth(idx).unwrap()).collect()
}

#[test]
fn invalid_parameters_fail_with_message() {
    for args in [
        &["loop", "--alpha", "0.5"][..],
        &["sdr", "--codec", "hexagon"],
        &["loop", "--trials", "0"],
        &["sdr", "--codec", "linear", "--lambda", "0.5"],
        &["bounds", "--snr-db", "ten"],
    ] {
        let out = jscc(args);
        assert!(!out.status.success(), "{args:?} succeeded");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.starts_with("error:"), "{args:?}: {err}");
    }
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    fs::write(&path, "alpha = 2\ngain = 3\n").unwrap();
    let out = jscc(&["bounds", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("gain"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    fs::write(&path, "# loop setup\nalpha = 3\nhorizon = 50\ntrials = 2\nsnr-db = 20\n").unwrap();
    let csv = stdout(&jscc(&["loop", "--config", path.to_str().unwrap(), "--alpha", "1.5"]));
    assert_eq!(column(&csv, "alpha"), ["1.5", "1.5"]);
    assert_eq!(column(&csv, "horizon"), ["50", "50"]);
    assert_eq!(column(&csv, "trial"), ["0", "1"]);
}

#[test]
fn same_seed_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let trace = dir.path().join(format!("{name}.trace"));
        let args = [
            "loop", "--snr-db", "8", "--horizon", "200", "--trials", "3", "--seed", seed, "--out",
            out.to_str().unwrap(), "--trace", trace.to_str().unwrap(),
        ];
        assert!(jscc(&args).status.success());
        (fs::read(out).unwrap(), fs::read(trace).unwrap())
    };
    let a = run("7", "a.csv");
    assert_eq!(a, run("7", "b.csv"));
    assert_ne!(a, run("8", "c.csv"));
    let trace = String::from_utf8(a.1).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "t,x,y,u,s,s_hat,x_hat_enc,x_hat_dec,stage_cost");
    assert_eq!(trace.lines().count(), 201);
}

#[test]
fn sdr_reports_linear_benchmark() {
    let csv = stdout(&jscc(&["sdr", "--codec", "linear", "--snr-db", "10", "--samples", "100000"]));
    let sdr: f64 = column(&csv, "sdr_db")[0].parse().unwrap();
    assert!((sdr - 10.0).abs() < 0.15, "{sdr}");
    assert_eq!(column(&csv, "family"), ["linear"]);
}

#[test]
fn bounds_mark_divergence_below_threshold() {
    let csv = stdout(&jscc(&["bounds", "--snr-db", "3,6.5", "--codec", "repetition", "--alpha", "3", "--r", "0", "--v", "0"]));
    let upper = column(&csv, "j_upper_linear");
    assert_eq!(upper[0], "diverges");
    assert_ne!(upper[1], "diverges");
    // OPTA for two uses per sample crosses alpha = 3 at 3.01 dB
    assert_eq!(column(&csv, "j_lower").iter().filter(|v| **v == "diverges").count(), 1);
}

#[test]
fn fig4_preset_diverges_only_at_low_snr() {
    let csv = stdout(&jscc(&["preset", "fig4", "--horizon", "300", "--trials", "3"]));
    let snr = column(&csv, "snr_db");
    let closed = column(&csv, "j_closed_form");
    assert_eq!(csv.lines().count(), 1 + 2 * 300);
    for (s, j) in snr.iter().zip(&closed) {
        let s: f64 = s.parse().unwrap();
        if s < 4.0 {
            assert_eq!(*j, "diverges");
        } else {
            let j: f64 = j.parse().unwrap();
            assert!((j - 62.305).abs() < 1e-3);
        }
    }
}
