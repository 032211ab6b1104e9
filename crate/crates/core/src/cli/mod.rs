//! Command-line front end.
//!
//! Every command reads one JSON config, writes its tables and plots into
//! the output directory, and finishes with a `manifest.json` holding the
//! resolved config and a SHA-256 of every file it wrote.

pub mod commands;
pub mod config;
pub mod plot;
pub mod table;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Error;
use config::{ConfigError, RunConfig};
use table::ResultTable;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "TOPOROUTER_WORKERS";
pub const DEFAULT_OUT_DIR: &str = "toporouter-out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Eigenvalues and zero-mode density versus theta.
    Spectrum,
    /// Zero mode at one theta, with the closed-form cross-check.
    Zeromode,
    /// Minimal zero-mode gap versus hop placement or lattice size.
    GapScan,
    /// Adiabatic ramp from theta = 0 to pi.
    Evolve,
    /// Fidelity over a (ramp speed x disorder strength x seed) grid.
    Sweep,
    /// Driven-dissipative steady state versus detuning.
    Detect,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Zeromode => "zeromode",
            Command::GapScan => "gap-scan",
            Command::Evolve => "evolve",
            Command::Sweep => "sweep",
            Command::Detect => "detect",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "toporouter", version, about = "Zero-mode routing on an SSH lattice with long-range hopping")]
pub struct Args {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Base seed (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (overrides the config and the environment).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Compute(#[from] Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(ConfigError::Io { .. }) | CliError::Io { .. } => EXIT_IO,
            CliError::Config(_) | CliError::Invalid(_) => EXIT_CONFIG,
            CliError::Compute(e) if e.is_numeric() => EXIT_NUMERIC,
            CliError::Compute(_) => EXIT_CONFIG,
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: serde_json::Value,
    pub outputs: Vec<OutputRecord>,
    pub results: serde_json::Value,
}

/// Files written by one command run.
pub struct Outputs {
    dir: PathBuf,
    records: Vec<OutputRecord>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))?;
        Ok(Self { dir: dir.to_path_buf(), records: Vec::new() })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))?;
        self.records.push(OutputRecord { file: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn write_table(&mut self, name: &str, table: &ResultTable) -> Result<(), CliError> {
        self.write_bytes(name, &table.to_bytes())
    }

    pub fn write_svg(&mut self, name: &str, svg: &str) -> Result<(), CliError> {
        self.write_bytes(name, svg.as_bytes())
    }

    fn finish(self, manifest_base: Manifest) -> Result<Vec<OutputRecord>, CliError> {
        let manifest = Manifest { outputs: self.records.clone(), ..manifest_base };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text).map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))?;
        Ok(self.records)
    }
}

fn env_workers() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Invalid(format!("{WORKERS_ENV}={v:?} is not a worker count"))),
        Err(_) => Ok(None),
    }
}

/// Applies flag overrides and fills in the worker count and output path.
pub fn resolve(args: &Args, mut config: RunConfig) -> Result<RunConfig, CliError> {
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(out) = &args.out {
        config.out = Some(out.clone());
    }
    if config.out.is_none() {
        config.out = Some(PathBuf::from(DEFAULT_OUT_DIR));
    }
    let workers = match args.workers.or(config.workers) {
        Some(w) => w,
        None => env_workers()?.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
    };
    if workers == 0 {
        return Err(CliError::Invalid("worker count must be at least 1".into()));
    }
    config.workers = Some(workers);
    Ok(config)
}

/// Runs one command with an already-resolved config.
pub fn execute(command: Command, config: &RunConfig) -> Result<Vec<OutputRecord>, CliError> {
    let workers = config.workers.unwrap_or(1);
    let dir = config.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Invalid(format!("cannot start {workers} workers: {e}")))?;
    let mut outputs = Outputs::create(&dir)?;
    let results = pool.install(|| commands::run(command, config, &mut outputs))?;
    outputs.finish(Manifest {
        tool: "toporouter",
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        seed: config.seed,
        config: config.to_json(),
        outputs: Vec::new(),
        results,
    })
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run_from<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = RunConfig::from_path(&args.config)
        .map_err(CliError::from)
        .and_then(|c| resolve(&args, c))
        .and_then(|c| execute(args.command, &c));
    match outcome {
        Ok(records) => {
            for r in records {
                println!("{}  {}", r.sha256, r.file);
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("toporouter {}: error: {e}", args.command.name());
            if let CliError::Compute(err) = &e {
                let mut source = std::error::Error::source(err);
                while let Some(s) = source {
                    eprintln!("  caused by: {s}");
                    source = s.source();
                }
            }
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_mapping() {
        assert_eq!(CliError::Invalid("x".into()).exit_code(), EXIT_CONFIG);
        assert_eq!(CliError::Compute(Error::InvalidCellCount(3)).exit_code(), EXIT_CONFIG);
        let drift = Error::NormDrift { drift: 1.0, limit: 1e-6, dt: 0.5 };
        assert_eq!(CliError::Compute(drift).exit_code(), EXIT_NUMERIC);
    }

    #[test]
    fn flags_override_config() {
        let args =
            Args::try_parse_from(["toporouter", "evolve", "--config", "c.json", "--seed", "9", "--workers", "3"])
                .unwrap();
        let c = resolve(&args, RunConfig { seed: 1, workers: Some(8), ..RunConfig::default() }).unwrap();
        assert_eq!((c.seed, c.workers), (9, Some(3)));
        assert_eq!(c.out.as_deref(), Some(Path::new(DEFAULT_OUT_DIR)));
        let args = Args::try_parse_from(["toporouter", "evolve", "--config", "c.json", "--workers", "0"]).unwrap();
        assert!(resolve(&args, RunConfig::default()).is_err());
    }

    #[test]
    fn digest_is_lowercase_hex() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
