//! Command-line entry point.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use super::config::ExperimentConfig;
use super::{best_bands, output, plot, run_experiment};
use crate::error::{Error, Result};

/// Environment variable consulted when neither `--out` nor the config names
/// an output directory.
pub const OUT_ENV: &str = "SEMIBANDIT_OUT";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "semibandit", version, about = "Semiparametric contextual bandit simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the sweep described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the built-in nine-environment experiment.
    Paper {
        #[command(flatten)]
        overrides: Overrides,
        /// Replications per cell.
        #[arg(long)]
        reps: Option<usize>,
    },
    /// Re-render figures from an existing agg.csv.
    Plot {
        #[arg(long)]
        agg: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parse and check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Overrides {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<PathBuf> {
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(p) = self.parallelism {
            cfg.parallelism = p;
        }
        if let Some(t) = self.horizon {
            cfg.horizon = t;
        }
        let out = self
            .out
            .clone()
            .or_else(|| cfg.output_dir.clone())
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .ok_or_else(|| {
                Error::config(format!("no output directory: pass --out, set output_dir, or set {OUT_ENV}"))
            })?;
        cfg.output_dir = Some(out.clone());
        cfg.validate()?;
        Ok(out)
    }
}

fn execute(mut cfg: ExperimentConfig, overrides: &Overrides) -> Result<i32> {
    let out = overrides.apply(&mut cfg)?;
    let report = run_experiment(&cfg, &out)?;
    println!("policy\tn_arms\tdim\tsetting\tbest_gamma\tmedian_RT");
    for r in &report.summary {
        println!(
            "{}\t{}\t{}\t{}\t{}\t{:.2}",
            r.policy, r.n_arms, r.dim, r.setting, r.best_gamma, r.median_rt
        );
    }
    if report.failures.is_empty() {
        println!("results written to {}", out.display());
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "{} episodes failed; see {}",
            report.failures.len(),
            out.join(output::FAILURES_FILE).display()
        );
        Ok(EXIT_RUNTIME)
    }
}

fn replot(agg: &Path, out: &Path) -> Result<i32> {
    let bands = output::read_agg(agg)?;
    let paths = plot::render_figures(&best_bands(&bands), out)?;
    for p in paths {
        println!("{}", p.display());
    }
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run { config, overrides } => execute(ExperimentConfig::from_path(&config)?, &overrides),
        Command::Paper { overrides, reps } => {
            let mut cfg = ExperimentConfig::paper();
            if let Some(r) = reps {
                cfg.n_reps = r;
            }
            execute(cfg, &overrides)
        }
        Command::Plot { agg, out } => replot(&agg, &out),
        Command::Validate { config } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            println!("{}: ok ({} episodes)", config.display(), cfg.n_cells());
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit status.
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
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_configuration() {
                EXIT_CONFIG
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_flag_exits_one() {
        assert_eq!(main_with_args(["semibandit", "validate", "--bogus"]), EXIT_CONFIG);
        assert_eq!(main_with_args(["semibandit"]), EXIT_CONFIG);
    }

    #[test]
    fn missing_config_file_is_a_config_error() {
        assert_eq!(
            main_with_args(["semibandit", "validate", "--config", "/nonexistent/x.toml"]),
            EXIT_CONFIG
        );
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(main_with_args(["semibandit", "--help"]), EXIT_OK);
    }
}
