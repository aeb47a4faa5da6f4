//! The `sounder` command line: every stage reads and writes files in one
//! working directory, so stages can be run one by one or chained by
//! `pipeline`.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Arg, ArgAction, ArgMatches, Command};

use sounder_core::channel::estimate_channel;
use sounder_core::impairment::simulate;
use sounder_core::io::config::KEYS;
use sounder_core::io::csv::{export_pdp, export_signal, export_spectrum};
use sounder_core::io::plot::{export_plot, PlotScale};
use sounder_core::io::trace::{format_report, read_trace, write_trace};
use sounder_core::io::truth::{write_truth, TruthRecord};
use sounder_core::io::{read_iq, write_iq, RunConfig};
use sounder_core::restoration::restore;
use sounder_core::testsignal::{build_sounding_signal, zadoff_chu_at};
use sounder_core::Error;

pub const CONFIG_FILE: &str = "config.txt";
pub const TEST_SIGNAL: &str = "x_test.iq";
pub const RECORDING: &str = "x_rec.iq";
pub const TRUTH: &str = "truth.txt";
pub const RESTORED: &str = "x_lin.iq";
pub const RESTORED_PLOT: &str = "x_lin.svg";
pub const TRACE: &str = "trace.txt";
pub const STATE: &str = "state.txt";
pub const TRANSFER_FUNCTION: &str = "h_freq.csv";
pub const IMPULSE_RESPONSE: &str = "h_time.csv";
pub const IMPULSE_PLOT: &str = "h_time.svg";
pub const PDP: &str = "pdp.csv";
pub const REPORT: &str = "report.txt";

/// Marks errors that are the caller's fault: bad flags, missing inputs.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn flag_name(key: &str) -> String {
    key.replace('_', "-")
}

fn command() -> Command {
    let mut cmd = Command::new("sounder")
        .about("Channel sounding with impaired software defined radios")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("dir")
                .long("dir")
                .global(true)
                .default_value(".")
                .value_parser(clap::value_parser!(PathBuf))
                .help("Working directory for all input and output files"),
        )
        .arg(
            Arg::new("config")
                .long("config")
                .global(true)
                .value_parser(clap::value_parser!(PathBuf))
                .help("key=value configuration file"),
        );
    for key in KEYS {
        cmd = cmd.arg(
            Arg::new(*key)
                .long(flag_name(key))
                .global(true)
                .action(ArgAction::Set)
                .allow_negative_numbers(true)
                .value_name("VALUE")
                .help_heading("Configuration"),
        );
    }
    cmd.subcommand(Command::new("generate").about(format!("Write the sounding signal to {TEST_SIGNAL}")))
        .subcommand(Command::new("simulate").about(format!("Impair {TEST_SIGNAL} into {RECORDING} and {TRUTH}")))
        .subcommand(Command::new("restore").about(format!("Restore {RECORDING} into {RESTORED} and {TRACE}")))
        .subcommand(Command::new("estimate").about(format!("Estimate the channel from {RESTORED}")))
        .subcommand(Command::new("report").about(format!("Print the iteration trace in {TRACE}")))
        .subcommand(Command::new("pipeline").about("generate, simulate, restore, estimate and report"))
}

/// Defaults, then the config file, then flags.
pub fn resolve_config(file: Option<&Path>, flags: &[(&str, String)]) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = file {
        if !path.is_file() {
            return Err(Usage(format!("config file {} not found", path.display())).into());
        }
        cfg.apply_file(path).map_err(|e| Usage(e.to_string()))?;
    }
    for (key, value) in flags {
        cfg.set(key, value).map_err(|e| Usage(format!("--{}: {e}", flag_name(key))))?;
    }
    cfg.validate().map_err(|e| Usage(e.to_string()))?;
    Ok(cfg)
}

fn input(dir: &Path, name: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    if path.is_file() {
        Ok(path)
    } else {
        Err(Usage(format!("missing input file {}", path.display())).into())
    }
}

pub fn generate(dir: &Path, cfg: &RunConfig) -> Result<()> {
    let x = build_sounding_signal(&cfg.signal, cfg.sample_rate)?;
    write_iq(&dir.join(TEST_SIGNAL), &x, Some(cfg.carrier_freq))?;
    fs::write(dir.join(CONFIG_FILE), cfg.to_text())?;
    Ok(())
}

pub fn simulate_stage(dir: &Path, cfg: &RunConfig) -> Result<()> {
    let x = read_iq(&input(dir, TEST_SIGNAL)?, None)?;
    let (rec, truth) = simulate(&x, &cfg.impairment)?;
    write_iq(&dir.join(RECORDING), &rec, Some(cfg.carrier_freq))?;
    write_truth(&dir.join(TRUTH), &TruthRecord::from(&truth))?;
    Ok(())
}

pub fn restore_stage(dir: &Path, cfg: &RunConfig) -> Result<()> {
    let x_test = read_iq(&input(dir, TEST_SIGNAL)?, None)?;
    let x_rec = read_iq(&input(dir, RECORDING)?, None)?;
    let out = restore(&x_rec, &x_test, &cfg.restoration)?;
    let s = &out.state;
    write_iq(&dir.join(RESTORED), &s.x_lin, Some(cfg.carrier_freq))?;
    write_trace(&dir.join(TRACE), &out.trace)?;
    export_plot(&dir.join(RESTORED_PLOT), &s.x_lin, PlotScale::Linear)?;
    let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    let state = format!(
        "f_hat={:.12e}\nphi_hat={:.12e}\na_gain={:.12e},{:.12e}\nb_zero={:.12e},{:.12e}\n\
         gain_vs_test={:.12e},{:.12e}\nperiod_starts={}\noutliers={}\n\
         block_season={}\nblock_kernel={}\nblock_duration={}\n",
        s.f_hat,
        s.phi_hat,
        s.a_gain.re,
        s.a_gain.im,
        s.b_zero.re,
        s.b_zero.im,
        s.gain_vs_test.re,
        s.gain_vs_test.im,
        list(&s.period_starts),
        list(&s.outliers),
        s.block_season,
        s.block_kernel,
        s.block_duration,
    );
    fs::write(dir.join(STATE), state)?;
    Ok(())
}

pub fn estimate_stage(dir: &Path, cfg: &RunConfig) -> Result<()> {
    let x_lin = read_iq(&input(dir, RESTORED)?, None)?;
    let zc = zadoff_chu_at(cfg.signal.n_zc, cfg.signal.root, x_lin.sample_rate())?;
    let est = estimate_channel(&x_lin, &zc, cfg.window_attenuation_db, cfg.pad_factor)?;
    export_spectrum(&dir.join(TRANSFER_FUNCTION), &est.h_freq)?;
    export_signal(&dir.join(IMPULSE_RESPONSE), &est.h_time)?;
    export_pdp(&dir.join(PDP), &est.power_delay_profile()?)?;
    export_plot(&dir.join(IMPULSE_PLOT), &est.h_time, PlotScale::Db { range_db: 80.0 })?;
    Ok(())
}

pub fn report_stage(dir: &Path) -> Result<String> {
    let trace = read_trace(&input(dir, TRACE)?)?;
    let report = format_report(&trace);
    fs::write(dir.join(REPORT), &report)?;
    Ok(report)
}

fn dispatch(m: &ArgMatches) -> Result<()> {
    let (name, sub) = m.subcommand().ok_or_else(|| anyhow!("no subcommand"))?;
    let dir = sub.get_one::<PathBuf>("dir").expect("defaulted").clone();
    if !dir.is_dir() {
        return Err(Usage(format!("directory {} does not exist", dir.display())).into());
    }
    let flags: Vec<(&str, String)> = KEYS
        .iter()
        .filter_map(|k| sub.get_one::<String>(k).map(|v| (*k, v.clone())))
        .collect();
    let cfg = resolve_config(sub.get_one::<PathBuf>("config").map(PathBuf::as_path), &flags)?;
    match name {
        "generate" => generate(&dir, &cfg).context("generate"),
        "simulate" => simulate_stage(&dir, &cfg).context("simulate"),
        "restore" => restore_stage(&dir, &cfg).context("restore"),
        "estimate" => estimate_stage(&dir, &cfg).context("estimate"),
        "report" => report_stage(&dir).map(|r| print!("{r}")).context("report"),
        "pipeline" => {
            generate(&dir, &cfg).context("generate")?;
            simulate_stage(&dir, &cfg).context("simulate")?;
            restore_stage(&dir, &cfg).context("restore")?;
            estimate_stage(&dir, &cfg).context("estimate")?;
            report_stage(&dir).map(|r| print!("{r}")).context("report")
        }
        other => Err(anyhow!("unknown subcommand {other}")),
    }
}

fn exit_code(e: &anyhow::Error) -> i32 {
    let usage = e.chain().any(|c| {
        c.is::<Usage>()
            || matches!(c.downcast_ref::<Error>(), Some(Error::Io(io)) if io.kind() == std::io::ErrorKind::NotFound)
    });
    if usage {
        2
    } else {
        1
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(&matches) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            exit_code(&e)
        }
    }
}
