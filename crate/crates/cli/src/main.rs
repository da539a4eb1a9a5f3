//! `jrc`: drive the joint radar-communication baseband from the shell.
//!
//! Every subcommand reads a configuration (`--config paper-defaults` or a
//! TOML path) and writes only below `--out-dir`.
//!
//! Exit codes: 0 success, 1 failed run or violated stage contract, 2 usage
//! error, 3 unreadable or invalid configuration, 4 malformed IQ input.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "jrc", version, about = "MIMO OFDM joint radar-communication baseband")]
struct Cli {
    /// `paper-defaults` or a path to a configuration document.
    #[arg(long, global = true)]
    config: Option<String>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Every file a subcommand writes goes here.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Repeat for more log output on stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build DATA or NDP frames and write the per-chain TX capture.
    Tx(TxArgs),
    /// Pass a TX capture through the radar or communication channel.
    Simulate(SimulateArgs),
    /// Image and detect every NDP frame of a radar capture.
    Radar(RadarArgs),
    /// Decode a single-chain communication capture.
    Rx(RxArgs),
    /// tx, simulate, radar and rx end to end.
    Loopback(LoopbackArgs),
    /// Path-loss sweep over distance with a fitted exponent.
    SweepDistance(SweepDistanceArgs),
    /// Radar SNR against target bearing.
    SweepAngle(SweepAngleArgs),
    /// Two targets at equal range behind leakage and clutter.
    TwoTarget(TwoTargetArgs),
    /// Background capture and removal on a cluttered scene.
    SiCapture(SiCaptureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Link {
    Radar,
    Comm,
}

#[derive(Debug, Args)]
struct TxArgs {
    /// Emit NDP sounding frames instead of DATA.
    #[arg(long)]
    ndp: bool,
    #[arg(long, default_value_t = 1)]
    frames: usize,
    /// Length of the seeded random payloads.
    #[arg(long, default_value_t = 500)]
    payload_len: usize,
    /// Send this file as the payload of every frame.
    #[arg(long)]
    payload: Option<PathBuf>,
    /// Take payloads from datagrams on this address, one frame each.
    #[arg(long)]
    udp: Option<String>,
    /// Give up waiting for datagrams after this long.
    #[arg(long, default_value_t = 5000)]
    udp_timeout_ms: u64,
    /// Index into BPSK-1/2, BPSK-3/4, QPSK-1/2, QPSK-3/4, 16QAM-1/2, 16QAM-3/4.
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..6))]
    mcs: Option<u8>,
    /// Channel feedback for MRT steering; identity when absent.
    #[arg(long)]
    feedback: Option<PathBuf>,
    #[arg(long, default_value = "tx")]
    out_stem: String,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = Link::Radar)]
    link: Link,
    /// Capture stem inside the output directory.
    #[arg(long, default_value = "tx")]
    input: String,
    /// Scene document; a unit target at 6 m and 0 degrees by default.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Communication link distance, m.
    #[arg(long, default_value_t = 1.0)]
    distance: f64,
    /// Defaults to `rx` for radar and `comm` for the communication link.
    #[arg(long)]
    out_stem: Option<String>,
}

#[derive(Debug, Args)]
struct RadarArgs {
    #[arg(long, default_value = "rx")]
    input: String,
    /// Leading frames used as background capture and not reported.
    #[arg(long, default_value_t = 0)]
    capture_frames: usize,
}

#[derive(Debug, Args)]
struct RxArgs {
    /// Chain-0 IQ file; defaults to `comm.ch0.cf32` in the output directory.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Samples handed to the stream decoder at a time.
    #[arg(long, default_value_t = 4096)]
    chunk: usize,
    /// Forward CRC-valid payloads to this datagram address.
    #[arg(long)]
    udp_out: Option<String>,
}

#[derive(Debug, Args)]
struct LoopbackArgs {
    #[arg(long, default_value_t = 20)]
    frames: usize,
    #[arg(long, default_value_t = 500)]
    payload_len: usize,
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..6))]
    mcs: Option<u8>,
    /// Per-subcarrier SNR of one chain at the receiver.
    #[arg(long, default_value_t = 25.0)]
    snr_db: f64,
    #[arg(long, default_value_t = 0.0)]
    cfo_hz: f64,
    /// Radar scene; two unit targets at 6 m and +-10 degrees by default.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Largest packet error rate that still counts as success.
    #[arg(long, default_value_t = 0.0)]
    max_per: f64,
}

#[derive(Debug, Args)]
struct SweepDistanceArgs {
    #[arg(long, value_enum, default_value_t = Link::Radar)]
    link: Link,
    /// Defaults to 3 m for radar and 3.5 m for the communication link.
    #[arg(long)]
    from: Option<f64>,
    /// Defaults to 12 m for radar and 12.5 m for the communication link.
    #[arg(long)]
    to: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    step: f64,
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    #[arg(long, default_value_t = 1e-5)]
    noise_power: f64,
    #[arg(long, default_value_t = jrc_core::analysis::D0_M)]
    d0: f64,
}

#[derive(Debug, Args)]
struct SweepAngleArgs {
    #[arg(long, default_value_t = -40.0, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, default_value_t = 40.0, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = 5.0)]
    step: f64,
    #[arg(long, default_value_t = 6.0)]
    range: f64,
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 1e-5)]
    noise_power: f64,
    /// Element taper with this two-way 3 dB field of view; omnidirectional
    /// when absent.
    #[arg(long)]
    fov_deg: Option<f64>,
}

#[derive(Debug, Args)]
struct TwoTargetArgs {
    /// Target bearings are +-this many degrees.
    #[arg(long, default_value_t = 10.0)]
    angle: f64,
    #[arg(long, default_value_t = 6.0)]
    range: f64,
}

#[derive(Debug, Args)]
struct SiCaptureArgs {
    /// Background frames averaged; the configured window by default.
    #[arg(long)]
    frames: Option<usize>,
    /// Leakage and clutter level over the target return, dB.
    #[arg(long, default_value_t = 40.0)]
    above_db: f64,
    #[arg(long, default_value_t = 6.0)]
    range: f64,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    angle: f64,
}

/// Failure classes with their own exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Config,
    MalformedIq,
}

impl std::fmt::Display for Class {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Class::Config => "configuration",
            Class::MalformedIq => "malformed IQ input",
        })
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Class>() {
        Some(Class::Config) => 3,
        Some(Class::MalformedIq) => 4,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    // clap rejects required global arguments, so the check lives here
    let Some(config) = cli.config.clone() else {
        let e = Cli::command().error(clap::error::ErrorKind::MissingRequiredArgument, "--config <CONFIG> is required");
        let _ = e.print();
        return ExitCode::from(e.exit_code() as u8);
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(cli, &config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
