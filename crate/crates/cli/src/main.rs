//! `mpchan` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 unreadable or
//! malformed input file, 3 singular conversion, 4 non-passive network,
//! 5 other numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mpchan::channel::ChannelError;
use mpchan::estimate_sc::EstimateError;
use mpchan::experiments::{
    render, run_sweep_threads, ExperimentConfig, ExperimentError, Format, SweepAxis, SweepKind, SweepResult,
};
use mpchan::matrixkit::LinalgError;
use mpchan::netparams::{check_passivity, read_touchstone, write_touchstone, NetParamsError, ParamKind};
use mpchan::rate::RateError;

#[derive(Parser)]
#[command(name = "mpchan", version, about = "Coupled-array MIMO channel estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    S,
    Z,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Convert a Touchstone file between S and Z parameters.
    Convert {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        to: Kind,
        /// Reference impedance in ohms.
        #[arg(long, value_parser = positive_ohms)]
        zref: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check that a Touchstone network is passive.
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Evaluate a configuration at a single axis point and print JSON.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Axis value; the first grid value when omitted.
        #[arg(long)]
        at: Option<f64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run a configured sweep and write CSV or JSON.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutFormat,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Mean achievable rates (perfect CSI, AA, AB) of a configuration at one power.
    Rate {
        #[arg(long)]
        config: PathBuf,
        /// Transmit power in dBm; the configured link power when omitted.
        #[arg(long)]
        power_dbm: Option<f64>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn positive_ohms(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("reference impedance must be positive, got {v}"))
    }
}

/// Error carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

fn linalg_code(e: &LinalgError) -> u8 {
    match e {
        LinalgError::Singular { .. } => 3,
        _ => 5,
    }
}

fn channel_code(e: &ChannelError) -> u8 {
    match e {
        ChannelError::NonPassivePort { .. } | ChannelError::NonPassiveArray => 4,
        ChannelError::SingularTermination { .. } => 3,
        ChannelError::Linalg(l) => linalg_code(l),
        _ => 5,
    }
}

fn netparams_code(e: &NetParamsError) -> u8 {
    match e {
        NetParamsError::Syntax { .. }
        | NetParamsError::UnsupportedFormat(_)
        | NetParamsError::NonMonotoneFrequency { .. }
        | NetParamsError::Io { .. } => 2,
        NetParamsError::OutOfBand { .. } => 1,
        NetParamsError::SingularConversion { .. } => 3,
        NetParamsError::Linalg(l) => linalg_code(l),
        _ => 5,
    }
}

fn experiment_code(e: &ExperimentError) -> u8 {
    match e {
        ExperimentError::Config { .. } => 1,
        ExperimentError::Io(_) => 2,
        ExperimentError::NetParams(n) => netparams_code(n),
        ExperimentError::Channel(c) => channel_code(c),
        ExperimentError::Estimate(EstimateError::Channel(c)) => channel_code(c),
        ExperimentError::Estimate(EstimateError::Linalg(l)) => linalg_code(l),
        ExperimentError::Rate(RateError::Linalg(l)) | ExperimentError::Linalg(l) => linalg_code(l),
        _ => 5,
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Failure::new(experiment_code(&e), e.to_string())
    }
}

impl From<NetParamsError> for Failure {
    fn from(e: NetParamsError) -> Self {
        Failure::new(netparams_code(&e), e.to_string())
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    if !path.exists() {
        return Err(Failure::new(2, format!("cannot read {}: no such file", path.display())));
    }
    Ok(ExperimentConfig::from_file(path)?)
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::new(2, format!("cannot write {}: {e}", path.display())))
}

fn convert(input: &Path, to: Kind, zref: f64, out: &Path) -> Result<(), Failure> {
    let params = read_touchstone(input)?;
    let kind = match to {
        Kind::S => ParamKind::Scattering,
        Kind::Z => ParamKind::Impedance,
    };
    let converted = params.convert(kind, zref)?;
    write_file(out, &write_touchstone(&converted))
}

fn validate(input: &Path) -> Result<(), Failure> {
    let params = read_touchstone(input)?;
    let s = match params.kind() {
        ParamKind::Scattering => params,
        ParamKind::Impedance => params.to_kind(ParamKind::Scattering)?,
    };
    let report = check_passivity(&s)?;
    println!("ports: {}", s.n_ports());
    println!("points: {}", report.frequencies.len());
    println!("max singular value: {:.12e}", report.max_singular[report.worst_index]);
    println!("worst frequency: {:.12e} Hz", report.worst_frequency);
    println!("passive: {}", if report.passive { "yes" } else { "no" });
    if report.passive {
        Ok(())
    } else {
        Err(Failure::new(4, format!("network is not passive at {:.6e} Hz", report.worst_frequency)))
    }
}

fn run(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<SweepResult, Failure> {
    if threads == Some(0) {
        return Err(Failure::new(1, "--threads must be at least 1"));
    }
    Ok(run_sweep_threads(cfg, threads, &|p| eprintln!("{p}"))?)
}

fn single_point(mut cfg: ExperimentConfig, at: Option<f64>) -> Result<ExperimentConfig, Failure> {
    if cfg.kind != SweepKind::PowerVsSubcarrier {
        let first = cfg.sweep.resolve()?[0];
        cfg.sweep = SweepAxis { values: Some(vec![at.unwrap_or(first)]), ..SweepAxis::default() };
    }
    Ok(cfg)
}

fn point_json(result: &SweepResult) -> String {
    let mut map = serde_json::Map::new();
    map.insert(result.axis_name.clone(), result.axis[0].into());
    for s in &result.series {
        map.insert(s.name.clone(), s.values[0].into());
    }
    map.insert("unit".into(), result.unit.clone().into());
    serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("JSON map serializes")
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Convert { input, to, zref, out } => convert(&input, to, zref, &out),
        Command::Validate { input } => validate(&input),
        Command::Simulate { config, at, threads } => {
            let cfg = single_point(load_config(&config)?, at)?;
            let result = run(&cfg, threads)?;
            if cfg.kind == SweepKind::PowerVsSubcarrier {
                println!("{}", render(&result, Format::Json)?.trim_end());
            } else {
                println!("{}", point_json(&result));
            }
            Ok(())
        }
        Command::Sweep { config, out, format, threads } => {
            let cfg = load_config(&config)?;
            let result = run(&cfg, threads)?;
            write_file(&out, &render(&result, format.into())?)
        }
        Command::Rate { config, power_dbm, threads } => {
            let mut cfg = load_config(&config)?;
            let p = power_dbm.unwrap_or(cfg.link.power_dbm);
            cfg.kind = SweepKind::RateVsPower;
            cfg.sweep = SweepAxis { values: Some(vec![p]), ..SweepAxis::default() };
            let result = run(&cfg, threads)?;
            println!("{}", point_json(&result));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
