//! `netra` command line.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 missing file, 3 invalid
//! configuration or input, 4 frame integrity failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::alerting::{decode_payload, encode_payload, Alert};
use crate::classify::{Label, Priority};
use crate::error::{NetraError, Result};
use crate::sim::{self, fixtures, ReportFile, Scenario, REPORT_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_MISSING: i32 = 2;
pub const EXIT_INVALID: i32 = 3;
pub const EXIT_INTEGRITY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "netra", version, about = "Railway intrusion pipeline simulator")]
pub struct Cli {
    /// Log level for diagnostics on stderr.
    #[arg(long, global = true, env = "NETRA_LOG", default_value = "warn")]
    pub log_level: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Versioned JSON.
    Machine,
    /// Plain-text tables.
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replay one scenario and write its report.
    Run(RunArgs),
    /// Replay a scenario at several camera thresholds.
    Sweep(SweepArgs),
    /// Encode or decode a 31-byte alert frame.
    #[command(subcommand)]
    Codec(CodecCommand),
    /// Write the constructed fixture files.
    #[command(subcommand)]
    Fixture(FixtureCommand),
    /// Render a saved report as tables.
    #[command(subcommand)]
    Report(ReportCommand),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, env = "NETRA_SEED")]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "machine")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Thresholds; defaults to the scenario's `[sweep] tau`.
    #[arg(long, value_delimiter = ',')]
    pub tau: Vec<f64>,
    /// Prepend PIR-only and binary reference rows.
    #[arg(long)]
    pub baselines: bool,
}

#[derive(Debug, Subcommand)]
pub enum CodecCommand {
    /// Print the hex frame for an alert.
    Encode(EncodeArgs),
    /// Print the fields of a hex frame.
    Decode { hex: String },
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long)]
    pub label: String,
    #[arg(long)]
    pub priority: String,
    #[arg(long)]
    pub ips: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub lat: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub lon: f64,
    #[arg(long)]
    pub timestamp_ms: u64,
}

#[derive(Debug, Subcommand)]
pub enum FixtureCommand {
    Generate {
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    Render { path: PathBuf },
}

/// Map an error to the process exit code.
pub fn exit_code(err: &NetraError) -> i32 {
    match err {
        NetraError::Io { kind, .. } if *kind == std::io::ErrorKind::NotFound => EXIT_MISSING,
        NetraError::Integrity { .. }
        | NetraError::Length { .. }
        | NetraError::Version(_)
        | NetraError::Malformed(_) => EXIT_INTEGRITY,
        NetraError::Config { .. }
        | NetraError::Parse { .. }
        | NetraError::InvalidSample(_)
        | NetraError::InvalidAlert(_)
        | NetraError::InvalidDetection(_)
        | NetraError::CalibrationArity { .. }
        | NetraError::CalibrationIncomplete { .. } => EXIT_INVALID,
        NetraError::Undefined(_) | NetraError::Io { .. } => EXIT_FAILURE,
    }
}

/// `key=value` dump printed by `codec decode`.
pub fn format_alert(a: &Alert) -> String {
    format!(
        "alert_id={:016x}\nlabel={}\npriority={}\nips={}\nlat={}\nlon={}\ntimestamp_ms={}\n",
        a.alert_id,
        a.label.as_str(),
        a.priority.as_str(),
        a.ips,
        a.lat,
        a.lon,
        a.timestamp_ms
    )
}

fn emit(out: Option<&Path>, body: &str, stdout: &mut dyn std::io::Write) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, body).map_err(|e| NetraError::io(p, e)),
        None => stdout
            .write_all(body.as_bytes())
            .map_err(|e| NetraError::io(Path::new("<stdout>"), e)),
    }
}

fn check_out(out: Option<&Path>) -> Result<()> {
    if let Some(dir) = out.and_then(Path::parent).filter(|d| !d.as_os_str().is_empty()) {
        if !dir.is_dir() {
            return Err(NetraError::Io {
                path: dir.display().to_string(),
                kind: std::io::ErrorKind::NotFound,
                msg: "output directory does not exist".into(),
            });
        }
    }
    Ok(())
}

fn render(file: &ReportFile, format: Format) -> String {
    match format {
        Format::Machine => file.to_json(),
        Format::Table => file.render(),
    }
}

fn cmd_run(args: &RunArgs, stdout: &mut dyn std::io::Write) -> Result<()> {
    let c = &args.common;
    check_out(c.out.as_deref())?;
    let scenario = Scenario::load(&c.scenario, c.seed)?;
    let report = sim::run(&scenario)?;
    log::info!(
        "{}: {} events, {} activations, {} alerts delivered",
        report.scenario,
        report.n_events,
        report.camera_activations,
        report.alerts.delivered
    );
    emit(c.out.as_deref(), &render(&ReportFile::run(report), c.format), stdout)
}

fn cmd_sweep(args: &SweepArgs, stdout: &mut dyn std::io::Write) -> Result<()> {
    let c = &args.common;
    check_out(c.out.as_deref())?;
    let scenario = Scenario::load(&c.scenario, c.seed)?;
    let taus = if args.tau.is_empty() {
        scenario.sweep.clone().unwrap_or_default()
    } else {
        args.tau.clone()
    };
    let mut points = if args.baselines {
        sim::baselines(&scenario)?
    } else {
        Vec::new()
    };
    points.extend(sim::sweep(&scenario, &taus)?);
    let file = ReportFile::sweep(points);
    emit(c.out.as_deref(), &render(&file, c.format), stdout)?;
    if c.out.is_some() && c.format == Format::Machine {
        stdout
            .write_all(file.render().as_bytes())
            .map_err(|e| NetraError::io(Path::new("<stdout>"), e))?;
    }
    Ok(())
}

fn cmd_codec(cmd: &CodecCommand, stdout: &mut dyn std::io::Write) -> Result<()> {
    let text = match cmd {
        CodecCommand::Encode(a) => {
            let label = Label::parse(&a.label)
                .ok_or_else(|| NetraError::InvalidAlert(format!("unknown label `{}`", a.label)))?;
            let priority = Priority::parse(&a.priority).ok_or_else(|| {
                NetraError::InvalidAlert(format!("unknown priority `{}`", a.priority))
            })?;
            let alert = Alert::new(label, priority, a.ips, a.lat, a.lon, a.timestamp_ms)?;
            format!("{}\n", hex::encode(encode_payload(&alert)?))
        }
        CodecCommand::Decode { hex: h } => {
            let bytes = hex::decode(h.trim())
                .map_err(|e| NetraError::Malformed(format!("bad hex input: {e}")))?;
            format_alert(&decode_payload(&bytes)?)
        }
    };
    emit(None, &text, stdout)
}

fn cmd_report(cmd: &ReportCommand, stdout: &mut dyn std::io::Write) -> Result<()> {
    let ReportCommand::Render { path } = cmd;
    let text = std::fs::read_to_string(path).map_err(|e| NetraError::io(path, e))?;
    let file: ReportFile = serde_json::from_str(&text).map_err(|e| NetraError::Parse {
        line: e.line(),
        msg: e.to_string(),
    })?;
    if file.version() != REPORT_VERSION {
        return Err(NetraError::config(
            "report_version",
            format!("unsupported report version {}", file.version()),
        ));
    }
    emit(None, &file.render(), stdout)
}

fn dispatch(cli: &Cli, stdout: &mut dyn std::io::Write) -> Result<()> {
    match &cli.command {
        Command::Run(a) => cmd_run(a, stdout),
        Command::Sweep(a) => cmd_sweep(a, stdout),
        Command::Codec(c) => cmd_codec(c, stdout),
        Command::Fixture(FixtureCommand::Generate { out_dir }) => {
            for p in fixtures::write_all(out_dir)? {
                log::info!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Report(c) => cmd_report(c, stdout),
    }
}

/// Parse arguments, run the command, return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INVALID,
            };
        }
    };
    let _ = env_logger::Builder::new()
        .parse_filters(&cli.log_level)
        .target(env_logger::Target::Stderr)
        .try_init();
    let mut stdout = std::io::stdout().lock();
    match dispatch(&cli, &mut stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("netra: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        let missing = NetraError::Io {
            path: "x".into(),
            kind: std::io::ErrorKind::NotFound,
            msg: String::new(),
        };
        assert_eq!(exit_code(&missing), EXIT_MISSING);
        assert_eq!(exit_code(&NetraError::config("a", "b")), EXIT_INVALID);
        assert_eq!(
            exit_code(&NetraError::Integrity {
                expected: 1,
                found: 2
            }),
            EXIT_INTEGRITY
        );
    }

    #[test]
    fn parses_sweep_list() {
        let cli = Cli::try_parse_from(["netra", "sweep", "--scenario", "s.scn", "--tau", "0.45,0.65"]).unwrap();
        match cli.command {
            Command::Sweep(a) => assert_eq!(a.tau, vec![0.45, 0.65]),
            other => panic!("{other:?}"),
        }
    }
}
