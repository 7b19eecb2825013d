use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use clwr::commands::{self, Command};
use clwr::{Override, RunConfig};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Riemann solvers and a finite volume scheme for LWR traffic with a
/// non-local exit capacity.
#[derive(Parser)]
#[command(
    name = "clwr",
    version,
    after_help = "Any argument of the form --section.key=value overrides that entry of the config file.\n\
                  CLWR_OUT, when set, replaces output.dir."
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML config file; defaults reproduce the capacity-drop reference setup.
    #[arg(short, long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify a Riemann datum and write the constrained solutions.
    Riemann {
        #[command(flatten)]
        common: Common,
        /// Write every admissible solution instead of the extreme ones.
        #[arg(long)]
        enumerate: bool,
    },
    /// Run the finite volume scheme and write snapshots.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Distance between the two extreme solvers, or between two scheme runs.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Paired runs over a list of lower capacity levels, with a log-log fit.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (overrides, rest): (Vec<String>, Vec<String>) = std::env::args().partition(|a| Override::looks_like(a));
    let cli = Cli::parse_from(rest);
    match execute(cli, &overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { EXIT_CONFIG } else { EXIT_NUMERICAL })
        }
    }
}

fn execute(cli: Cli, raw_overrides: &[String]) -> clwr::Result<()> {
    let mut overrides = raw_overrides
        .iter()
        .map(|a| Override::parse(a))
        .collect::<clwr::Result<Vec<_>>>()?;
    let (command, common) = match cli.command {
        Cmd::Riemann { common, enumerate } => {
            if enumerate {
                overrides.push(Override::parse("riemann.enumerate=true")?);
            }
            (Command::Riemann, common)
        }
        Cmd::Simulate { common } => (Command::Simulate, common),
        Cmd::Compare { common } => (Command::Compare, common),
        Cmd::Sweep { common, jobs } => {
            if let Some(j) = jobs {
                overrides.push(Override::parse(&format!("sweep.jobs={j}"))?);
            }
            (Command::Sweep, common)
        }
    };
    let config = match &common.config {
        Some(path) => RunConfig::from_file(path, &overrides)?,
        None => RunConfig::load("", &overrides)?,
    };
    let out = commands::output_dir(&config);
    let outcome = commands::run(command, &config, &out)?;
    // a closed pipe on stdout is not an error of the run
    let mut stdout = std::io::stdout().lock();
    for line in &outcome.summary {
        let _ = writeln!(stdout, "{line}");
    }
    for f in &outcome.files {
        let _ = writeln!(stdout, "wrote {}", f.display());
    }
    Ok(())
}
