//! Integration tests driving the built binary: exit-code contract, report
//! and CSV outputs, golden table output, sweep determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn freqleak(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freqleak"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn run_a2_recovers_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = freqleak(
        &[
            "run",
            "--attack",
            "a2",
            "--secret",
            "0xDEADBEEF",
            "--seed",
            "7",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("recovered"));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["scenario"], "a2");
    assert_eq!(report["seed"], 7);
    assert_eq!(report["bit_error_rate"], 0.0);
    assert_eq!(report["secret_sent_hex"], "deadbeef");
    assert_eq!(report["recovered_hex"], "deadbeef");
    assert_eq!(report["recovered_matches_secret"], true);
    assert_eq!(report["direct_access_blocked"], true);
    assert_eq!(report["trace_files"][0], "cpu_clk.csv");

    let csv = fs::read_to_string(dir.path().join("cpu_clk.csv")).unwrap();
    assert!(csv.starts_with("clock,start_ns,duration_ns,freq_hz,gate\n"));
    assert!(csv.contains("cpu_clk,"));
}

#[test]
fn fully_lossy_channel_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = freqleak(
        &["run", "--attack", "a1", "--set", "dropout_prob=1.0"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(stdout(&out).contains("lost"));
}

#[test]
fn unknown_attack_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = freqleak(&["run", "--attack", "a9"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_parameter_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = freqleak(
        &["run", "--attack", "a2", "--set", "one_dwell=100"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unknown parameter"));
}

#[test]
fn table1_output_is_golden_and_stable() {
    let dir = tempfile::tempdir().unwrap();
    let expected = "frequency_mhz  cycles_for_1  cycles_for_0  peak_bandwidth_mbps\n\
                    250            10            5             50\n\
                    250            3             2             125\n\
                    100            10            5             20\n\
                    100            3             2             50\n\
                    all four rows match the expected bandwidths\n";
    let first = freqleak(&["table1"], dir.path());
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(stdout(&first), expected);
    let second = freqleak(&["table1"], dir.path());
    assert_eq!(stdout(&second), stdout(&first));
}

#[test]
fn sweep_writes_monotone_csv_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("tempo.sweep");
    fs::write(
        &spec,
        "scenario = a2\nrepetitions = 2\nseed = 11\ngrid.half_bit_iterations = 100,200,400\n",
    )
    .unwrap();

    let out = freqleak(
        &["sweep", "--spec", spec.to_str().unwrap(), "--out", "first"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("first/sweep.csv")).unwrap();
    assert!(csv.starts_with("half_bit_iterations,bits_sent,bit_errors,ber,bandwidth_bps\n"));

    let rates: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(rates.len(), 3);
    assert!(rates[0] > rates[1] && rates[1] > rates[2], "{rates:?}");

    let again = freqleak(
        &["sweep", "--spec", spec.to_str().unwrap(), "--out", "second"],
        dir.path(),
    );
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(
        fs::read(dir.path().join("first/sweep.csv")).unwrap(),
        fs::read(dir.path().join("second/sweep.csv")).unwrap()
    );
}

#[test]
fn malformed_sweep_spec_exits_one_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("empty.sweep");
    fs::write(&spec, "scenario = a2\n").unwrap();
    let out = freqleak(&["sweep", "--spec", spec.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));

    fs::write(&spec, "scenario = a2\nnot a key value line\n").unwrap();
    let out = freqleak(&["sweep", "--spec", spec.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));
}

#[test]
fn sweep_accepts_fixed_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("burst.sweep");
    fs::write(&spec, "scenario = a3\ngrid.cycles_for_zero = 2,5\n").unwrap();
    let out = freqleak(
        &[
            "sweep",
            "--spec",
            spec.to_str().unwrap(),
            "--set",
            "gap_cycles=0",
            "--set",
            "cycles_for_one=3",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    // Zero gap and a 3/2-cycle alphabet: the first point reaches the fastest
    // configuration's neighborhood.
    let first_rate: f64 = csv
        .lines()
        .nth(1)
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(first_rate > 100e6, "{csv}");
}

#[test]
fn export_trace_writes_gate_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let out = freqleak(&["export-trace", "--attack", "a3"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for clock in ["fclk0", "fclk1"] {
        let csv = fs::read_to_string(dir.path().join(format!("{clock}.csv"))).unwrap();
        assert!(csv.starts_with("clock,start_ns,duration_ns,freq_hz,gate\n"));
        assert!(csv.contains(",run\n"));
    }
    // The data clock alternates run and off rows; the reference runs once.
    let data = fs::read_to_string(dir.path().join("fclk0.csv")).unwrap();
    assert!(data.contains(",off\n"));
    let reference = fs::read_to_string(dir.path().join("fclk1.csv")).unwrap();
    assert_eq!(reference.lines().count(), 2);
}

#[test]
fn secret_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let secret_path = dir.path().join("secret.bin");
    fs::write(&secret_path, b"attack at dawn").unwrap();
    let out = freqleak(
        &[
            "run",
            "--attack",
            "a4",
            "--secret-file",
            secret_path.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["recovered_hex"], hex::encode(b"attack at dawn"));
}
