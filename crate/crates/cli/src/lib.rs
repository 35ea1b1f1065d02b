//! Command-line front end for the covert-channel simulator.
//!
//! Exit codes are a stable contract: 0 success, 1 usage or configuration
//! error, 2 channel failure (the receiver did not recover the secret, or a
//! self-check mismatched).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use freqleak::attacks::{
    apply_override, default_scenario, run_attack, AttackId, AttackReport, DEFAULT_SECRET,
};
use freqleak::harness::{run_sweep, sweep_csv, table1_peak_bandwidth, SweepSpec, TABLE1_ROWS};
use freqleak::soc::FrequencyHz;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHANNEL: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "freqleak",
    about = "Simulate DVFS frequency-modulation covert channels on a TrustZone SoC",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one attack end to end; write report JSON and trace CSVs.
    Run(RunArgs),
    /// Run a parameter sweep from a spec file; write a results CSV.
    Sweep(SweepArgs),
    /// Print the burst-channel peak-bandwidth table and verify it.
    Table1,
    /// Run an attack's transmitter and export only the clock trace CSVs.
    ExportTrace(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Attack path: a1, a2, a3 or a4.
    #[arg(long)]
    pub attack: AttackId,
    /// Secret as a hex string (0x...). Defaults to the built-in 16-byte one.
    #[arg(long)]
    pub secret: Option<String>,
    /// Read the secret from a file instead.
    #[arg(long, conflicts_with = "secret")]
    pub secret_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory for report and trace files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Parameter override, repeatable: --set key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Sweep spec file (scenario, seed, repetitions, grid.<param> lines).
    #[arg(long)]
    pub spec: PathBuf,
    /// Override the spec's base seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Fixed parameter override applied to every run: --set key=value.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

/// Dispatch a parsed command line. Returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Table1 => {
            let (text, code) = render_table1(table1_peak_bandwidth);
            print!("{text}");
            code
        }
        Command::ExportTrace(args) => cmd_export_trace(&args),
    }
}

fn usage_error(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn build_scenario(args: &RunArgs) -> Result<freqleak::attacks::AttackScenario, String> {
    let mut scenario = default_scenario(args.attack);
    scenario.seed = args.seed;
    scenario.secret = parse_secret(args)?;
    for kv in &args.set {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| format!("--set needs key=value, got '{kv}'"))?;
        apply_override(&mut scenario, key.trim(), value.trim())?;
    }
    if let Some(noise) = scenario.noise.as_mut() {
        noise.seed = args.seed;
    }
    Ok(scenario)
}

fn parse_secret(args: &RunArgs) -> Result<Vec<u8>, String> {
    match (&args.secret, &args.secret_file) {
        (Some(text), None) => {
            let digits = text
                .strip_prefix("0x")
                .or_else(|| text.strip_prefix("0X"))
                .ok_or_else(|| format!("secret '{text}' must be hex starting with 0x"))?;
            let bytes = hex::decode(digits).map_err(|e| format!("bad hex secret: {e}"))?;
            if bytes.is_empty() {
                return Err("the secret must be at least one byte".into());
            }
            Ok(bytes)
        }
        (None, Some(path)) => {
            fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
        }
        (None, None) => Ok(DEFAULT_SECRET.to_vec()),
        (Some(_), Some(_)) => unreachable!("clap rejects the conflict"),
    }
}

fn write_traces(report: &AttackReport, out: &Path) -> Result<(), String> {
    for trace in &report.traces {
        let path = out.join(trace.file_name());
        fs::write(&path, trace.to_csv())
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> i32 {
    let scenario = match build_scenario(args) {
        Ok(s) => s,
        Err(e) => return usage_error(&e),
    };
    let report = match run_attack(&scenario) {
        Ok(r) => r,
        Err(e) => return usage_error(&e.to_string()),
    };
    if let Err(e) = fs::create_dir_all(&args.out) {
        return usage_error(&format!("cannot create {}: {e}", args.out.display()));
    }
    let report_path = args.out.join("report.json");
    let mut json = report.to_document().to_json();
    json.push('\n');
    if let Err(e) = fs::write(&report_path, json) {
        return usage_error(&format!("cannot write {}: {e}", report_path.display()));
    }
    if let Err(e) = write_traces(&report, &args.out) {
        return usage_error(&e);
    }

    let verdict = match &report.payload_recovered {
        Ok(_) if report.recovered_ok() => "recovered",
        Ok(_) => "garbled",
        Err(_) => "lost",
    };
    println!(
        "{}: {} | ber {:.6} | bandwidth {:.1} bps | report {}",
        scenario.id,
        verdict,
        report.bit_error_rate,
        report.bandwidth_bps,
        report_path.display()
    );
    if report.recovered_ok() {
        EXIT_OK
    } else {
        EXIT_CHANNEL
    }
}

fn cmd_export_trace(args: &RunArgs) -> i32 {
    let scenario = match build_scenario(args) {
        Ok(s) => s,
        Err(e) => return usage_error(&e),
    };
    let report = match run_attack(&scenario) {
        Ok(r) => r,
        Err(e) => return usage_error(&e.to_string()),
    };
    if let Err(e) = fs::create_dir_all(&args.out) {
        return usage_error(&format!("cannot create {}: {e}", args.out.display()));
    }
    if let Err(e) = write_traces(&report, &args.out) {
        return usage_error(&e);
    }
    for trace in &report.traces {
        println!("{}", args.out.join(trace.file_name()).display());
    }
    EXIT_OK
}

fn cmd_sweep(args: &SweepArgs) -> i32 {
    let text = match fs::read_to_string(&args.spec) {
        Ok(t) => t,
        Err(e) => return usage_error(&format!("cannot read {}: {e}", args.spec.display())),
    };
    let mut spec = match SweepSpec::parse(&text) {
        Ok(s) => s,
        Err(e) => return usage_error(&format!("{}: {e}", args.spec.display())),
    };
    if let Some(seed) = args.seed {
        spec.base_seed = seed;
    }
    for kv in &args.set {
        let Some((key, value)) = kv.split_once('=') else {
            return usage_error(&format!("--set needs key=value, got '{kv}'"));
        };
        spec.fixed.push((key.trim().into(), value.trim().into()));
    }
    let rows = match run_sweep(&spec) {
        Ok(r) => r,
        Err(e) => return usage_error(&e.to_string()),
    };
    if let Err(e) = fs::create_dir_all(&args.out) {
        return usage_error(&format!("cannot create {}: {e}", args.out.display()));
    }
    let path = args.out.join("sweep.csv");
    if let Err(e) = fs::write(&path, sweep_csv(&spec, &rows)) {
        return usage_error(&format!("cannot write {}: {e}", path.display()));
    }
    println!("{} points -> {}", rows.len(), path.display());
    EXIT_OK
}

/// Render the peak-bandwidth table using `formula` and check it against the
/// expected values. Exposed with a pluggable formula so tests can verify
/// the check actually fails on a wrong one.
pub fn render_table1(formula: fn(FrequencyHz, u64) -> f64) -> (String, i32) {
    let mut out = String::from("frequency_mhz  cycles_for_1  cycles_for_0  peak_bandwidth_mbps\n");
    let mut all_match = true;
    for (mhz, ones, zeros, expect_mbps) in TABLE1_ROWS {
        let got = formula(FrequencyHz::from_mhz(mhz), zeros);
        all_match &= got == expect_mbps as f64 * 1e6;
        out.push_str(&format!(
            "{:<15}{:<14}{:<14}{:.0}\n",
            mhz,
            ones,
            zeros,
            got / 1e6
        ));
    }
    if all_match {
        out.push_str("all four rows match the expected bandwidths\n");
        (out, EXIT_OK)
    } else {
        out.push_str("MISMATCH against the expected bandwidths\n");
        (out, EXIT_CHANNEL)
    }
}
