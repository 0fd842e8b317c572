//! `fockscan`: batch pipelines of the fock-haloscope library.
//!
//! Exit codes: 0 success, 1 a verification failed, 2 configuration error,
//! 3 numerical guard tripped. Flags can also be set through `FOCKSCAN_*`
//! environment variables.

mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use fock_haloscope::gates::EdScheme;
use fock_haloscope::protocol::BackendChoice;
use fock_haloscope::table::SweepTable;

use crate::commands::{Outputs, RunInfo};
use crate::config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Library(fock_haloscope::Error),
    Io(String),
}

impl From<fock_haloscope::Error> for CliError {
    fn from(e: fock_haloscope::Error) -> Self {
        CliError::Library(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Library(e) if e.is_numerical_guard() => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Library(e) => write!(f, "{e}"),
            CliError::Io(msg) => write!(f, "output error: {msg}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fockscan", version, about = "Entangled-Fock-state haloscope simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true, env = "FOCKSCAN_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long, global = true, env = "FOCKSCAN_SEED")]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "FOCKSCAN_JOBS")]
    jobs: Option<usize>,
    /// Directory for `<command>.csv` and `<command>.json`; stdout otherwise.
    #[arg(long, global = true, env = "FOCKSCAN_OUT")]
    out: Option<PathBuf>,
    #[arg(long, global = true, env = "FOCKSCAN_BACKEND", value_enum)]
    backend: Option<BackendArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Auto,
    Full,
    Effective,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Linear,
    Binary,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the ED relations for each cavity count and scheme.
    ValidateGates {
        /// Comma-separated cavity counts.
        #[arg(long, value_delimiter = ',')]
        cavities: Vec<usize>,
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
    },
    /// Monte Carlo drive population against the closed form.
    McDm,
    /// Signal and background populations of one configuration.
    SimulateCycle,
    /// SNR against integration time with the optimum of each curve.
    SnrSweep,
    /// Scan-rate enhancement table with measured efficiencies.
    ScanRate,
    /// Excluded kinetic mixing over frequency and temperature.
    Exclusion,
    /// Frequency band covered within a time budget.
    Reach,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::ValidateGates { .. } => "validate-gates",
            Command::McDm => "mc-dm",
            Command::SimulateCycle => "simulate-cycle",
            Command::SnrSweep => "snr-sweep",
            Command::ScanRate => "scan-rate",
            Command::Exclusion => "exclusion",
            Command::Reach => "reach",
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None if matches!(cli.command, Command::ValidateGates { .. } | Command::McDm) => RunConfig::default(),
        None => return Err(CliError::Config(format!("{} needs --config", cli.command.name()))),
    };
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    if let Some(b) = cli.backend {
        config.backend = Some(match b {
            BackendArg::Auto => BackendChoice::Auto,
            BackendArg::Full => BackendChoice::Full,
            BackendArg::Effective => BackendChoice::Effective,
        });
    }
    Ok(config)
}

fn header(table: &SweepTable, command: &str, config: &RunConfig, run: &RunInfo) -> SweepTable {
    let mut stamped = SweepTable::new(&table.columns)
        .with_meta("tool", "fockscan")
        .with_meta("version", env!("CARGO_PKG_VERSION"))
        .with_meta("command", command)
        .with_meta("config_sha256", config.sha256())
        .with_meta("seed", config.seed.unwrap_or(0))
        .with_meta("primary_mode", 0);
    commands::stamp(&mut stamped, run);
    for (k, v) in &table.meta {
        stamped.set_meta(k.clone(), v);
    }
    stamped.set_meta("config", config.canonical());
    stamped.rows = table.rows.clone();
    stamped
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn emit(cli: &Cli, config: &RunConfig, outputs: &Outputs, run: &RunInfo) -> Result<(), CliError> {
    let command = cli.command.name();
    let csv = match &outputs.table {
        Some(table) => Some(header(table, command, config, run).to_csv_string()?),
        None => None,
    };
    let mut summary = outputs.summary.clone();
    if let Some(map) = summary.as_object_mut() {
        map.insert("command".into(), command.into());
        map.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        map.insert("config_sha256".into(), config.sha256().into());
    }
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n";
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            if let Some(csv) = csv {
                write_file(&dir.join(format!("{command}.csv")), csv.as_bytes())?;
            }
            write_file(&dir.join(format!("{command}.json")), json.as_bytes())?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            let text = csv.unwrap_or(json);
            stdout.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    let config = load_config(cli)?;
    let none = RunInfo { backends: vec![], dts: vec![] };
    let (outputs, run) = match &cli.command {
        Command::ValidateGates { cavities, scheme } => {
            let scheme = scheme.map(|s| match s {
                SchemeArg::Linear => EdScheme::Linear,
                SchemeArg::Binary => EdScheme::Binary,
            });
            (commands::validate_gates(&config, cavities, scheme)?, none)
        }
        Command::McDm => commands::mc_dm(&config, config.seed.unwrap_or(0))?,
        Command::SimulateCycle => commands::simulate_cycle(&config)?,
        Command::SnrSweep => commands::snr_sweep_command(&config)?,
        Command::ScanRate => commands::scan_rate_command(&config)?,
        Command::Exclusion => commands::exclusion_command(&config)?,
        Command::Reach => commands::reach_command(&config)?,
    };
    emit(cli, &config, &outputs, &run)?;
    Ok(outputs.verified)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("fockscan: verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("fockscan: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
