//! Command-line orchestration for `diskcert`.
//!
//! Every command computes its outputs in memory and returns them as a
//! [`CommandOutput`]; [`write_outputs`] then stages each file under a
//! temporary name and renames it into place, so a failed run leaves no
//! partial files behind.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;

pub use commands::{CommandOutput, Outcome, SUITES};
pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "diskcert", version, about = "Uniqueness certificates for p-growth energies on the unit disk")]
pub struct Cli {
    /// JSON run configuration; defaults apply when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Mode threshold of the Poincaré and Fourier suites.
    #[arg(long = "N", global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub p: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Per-mode L² mass table of a field or of the configured map.
    Decompose,
    /// Certificate integers l, n, m, n*, m* of the configured candidate.
    Certify,
    /// Normalized weak Euler-Lagrange residual.
    Residual,
    /// Run a verification suite.
    Verify { suite: String },
    /// Energy of the configured map.
    Energy,
    /// Recover, integrate and check the pressure.
    Pressure,
    /// Generate one flow or band variation.
    Variation,
}

impl Cli {
    /// The config file (or defaults) with command-line overrides applied.
    pub fn resolve_config(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.trials {
            cfg.trials = Some(t);
        }
        if let Some(n) = self.n {
            cfg.lab.n = n;
        }
        if let Some(p) = self.p {
            cfg.p = p;
        }
        Ok(cfg)
    }
}

pub fn run_command(command: &Command, cfg: &RunConfig) -> Result<CommandOutput> {
    match command {
        Command::Decompose => commands::cmd_decompose(cfg),
        Command::Certify => commands::cmd_certify(cfg),
        Command::Residual => commands::cmd_residual(cfg),
        Command::Verify { suite } => commands::cmd_verify(cfg, suite),
        Command::Energy => commands::cmd_energy(cfg),
        Command::Pressure => commands::cmd_pressure(cfg),
        Command::Variation => commands::cmd_variation(cfg),
    }
}

/// Stages every file as `.<name>.tmp` and renames once all are written.
pub fn write_outputs(dir: &Path, out: &CommandOutput) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut staged = Vec::with_capacity(out.files.len());
    for (name, bytes) in &out.files {
        let tmp = dir.join(format!(".{name}.tmp"));
        let res = fs::File::create(&tmp).and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        });
        if let Err(e) = res {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(e).with_context(|| format!("writing {}", tmp.display()));
        }
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, dest) in &staged {
        fs::rename(tmp, dest).with_context(|| format!("renaming into {}", dest.display()))?;
    }
    Ok(())
}

/// Parses, runs and writes; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let run = || -> Result<Outcome> {
        let cfg = cli.resolve_config()?;
        let out = run_command(&cli.command, &cfg)?;
        write_outputs(&cli.out, &out)?;
        Ok(out.outcome)
    };
    match run() {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
