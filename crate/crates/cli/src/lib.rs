//! `twostage` command-line front end.

pub mod config;
pub mod error;
pub mod estimate;
pub mod figures;
pub mod output;
pub mod simulate;
pub mod svg;
pub mod synth;
pub mod verify;

use std::fmt::Display;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::output::OutDir;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "twostage", version, about = "Two-stage (screen, then hire) pipeline analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// `key = value` config file
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// RNG seed; overrides the config `seed` key
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form figure data (ids or `all`)
    Figures {
        #[arg(required = true)]
        ids: Vec<String>,
        /// Also write an SVG line chart per figure
        #[arg(long)]
        svg: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Agent-based policy benchmark
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Per-job θ/δ estimates from applicant scores
    Estimate {
        input: PathBuf,
        /// Also write counterfactual shares per job
        #[arg(long)]
        counterfactual: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Synthetic applicant-score file
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Numerical identities, monotonicity checks and the hire-share regression
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

fn open(common: &Common) -> CliResult<(Config, u64, OutDir)> {
    let cfg = Config::load(common.config.as_deref())?;
    let seed = cfg.seed(common.seed, DEFAULT_SEED)?;
    let out = OutDir::open(&common.out)?;
    Ok((cfg, seed, out))
}

// a closed pipe (e.g. `| head`) is not an error
fn say(line: impl Display) {
    let _ = writeln!(std::io::stdout(), "{line}");
}

fn report(files: &[PathBuf]) {
    for f in files {
        say(format!("wrote {}", f.display()));
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Figures { ids, svg, common } => {
            let ids = figures::resolve_ids(&ids)?;
            let (cfg, seed, out) = open(&common)?;
            report(&figures::run(&ids, &cfg, seed, &out, svg)?);
        }
        Command::Simulate { common } => {
            let (cfg, seed, out) = open(&common)?;
            let (files, summary) = simulate::run(&cfg, seed, &out)?;
            for row in &summary.rows {
                say(format!("{:<22} p_s {:<22} p_h {}", row[0], row[2], row[3]));
            }
            report(&files);
        }
        Command::Estimate { input, counterfactual, common } => {
            let (cfg, seed, out) = open(&common)?;
            let (files, agg) = estimate::run(&input, &cfg, seed, &out, counterfactual)?;
            let delta = agg.delta_bar.map(|d| d.to_string()).unwrap_or_else(|| "n/a".into());
            say(format!("theta_bar {} delta_bar {delta} over {} jobs", agg.theta_bar, agg.jobs));
            report(&files);
        }
        Command::Synth { common } => {
            let (cfg, seed, out) = open(&common)?;
            report(&synth::run(&cfg, seed, &out)?);
        }
        Command::Verify { common } => {
            let (cfg, seed, out) = open(&common)?;
            let outcome = verify::run(&cfg, seed, &out)?;
            for c in &outcome.checks {
                say(format!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
            }
            report(&outcome.files);
            let failed = outcome.checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(CliError::Verify(format!("{failed} of {} checks failed", outcome.checks.len())));
            }
        }
    }
    Ok(())
}
