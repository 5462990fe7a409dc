use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use efftemp_cli::commands::{self, Done};
use efftemp_cli::config;
use efftemp_cli::pipeline::cache_dir;
use efftemp_cli::CliResult;

/// Effective-temperature diagnostics for variational quantum states.
///
/// Spectra are cached under $EFFTEMP_CACHE_DIR (default ./.efftemp-cache).
/// Exit codes: 0 success, 2 invalid configuration, 3 numerical failure
/// (partial outputs kept), 4 integrity failure.
#[derive(Parser)]
#[command(name = "efftemp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset, layered under the config file; repeatable.
    #[arg(long = "preset")]
    presets: Vec<String>,
    /// Overrides run.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides run.out.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact diagonalization into the spectrum cache.
    Ed(Common),
    /// One training run.
    Train(Common),
    /// One training run per β of the grid, plus β* detection.
    #[command(name = "ites-sweep")]
    ItesSweep {
        #[command(flatten)]
        common: Common,
        /// Concurrent runs.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Consolidated tables over run and sweep directories.
    Report {
        /// Run or sweep directories.
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Analytic gradient against central finite differences.
    Gradcheck(Common),
}

fn run(cli: Cli) -> CliResult<Done> {
    let cache = cache_dir();
    match cli.command {
        Command::Ed(c) => {
            let model = config::load_model(c.config.as_deref(), &c.presets)?;
            commands::cmd_ed(&model, &cache, c.out.as_deref())
        }
        Command::Train(c) => {
            let cfg = commands::load_config(c.config.as_deref(), &c.presets, c.seed)?;
            let out = commands::output_dir(&cfg, c.out.as_deref())?;
            Ok(commands::cmd_train(&cfg, &cache, &out)?.0)
        }
        Command::ItesSweep { common: c, jobs } => {
            let cfg = commands::load_config(c.config.as_deref(), &c.presets, c.seed)?;
            let out = commands::output_dir(&cfg, c.out.as_deref())?;
            commands::cmd_sweep(&cfg, &cache, &out, jobs)
        }
        Command::Report { inputs, out } => Ok(commands::cmd_report(&inputs, &out, &cache)?.0),
        Command::Gradcheck(c) => {
            let cfg = commands::load_config(c.config.as_deref(), &c.presets, c.seed)?;
            commands::cmd_gradcheck(&cfg, &cache, c.out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(done) => {
            print!("{}", done.stdout);
            ExitCode::from(done.exit as u8)
        }
        Err(e) => {
            eprintln!("efftemp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
