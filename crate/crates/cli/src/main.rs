//! `chdbc`: structure-preserving Cahn–Hilliard runs from flat config files.

use anyhow::{Context, Result};
use chdbc_cli::commands;
use chdbc_cli::config::{parse_config, RunConfig};
use chdbc_cli::csvio::fmt_f64;
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "chdbc", about = "structure-preserving Cahn-Hilliard solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured simulation and write trace/ledger/snapshot CSVs.
    Run { cfg: PathBuf },
    /// Report a-priori bounds and the unique-solvability margins.
    Conditions { cfg: PathBuf },
    /// Run a refinement ladder and write the order-report CSV.
    Convergence {
        cfg: PathBuf,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Run two configs side by side and report the final-state difference.
    Compare {
        cfg_a: PathBuf,
        cfg_b: PathBuf,
        #[arg(long, default_value = "compare.csv")]
        out: String,
    },
}

fn load(path: &PathBuf) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    parse_config(&text).with_context(|| format!("parsing {}", path.display()))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { cfg } => {
            let cfg = load(&cfg)?;
            let trace = commands::run_command(&cfg)?;
            let last = trace.records.last().expect("at least the initial record");
            println!(
                "ran {} steps; mass {} energy {}",
                last.step,
                fmt_f64(last.mass),
                fmt_f64(last.energy_jd)
            );
        }
        Command::Conditions { cfg } => {
            let cfg = load(&cfg)?;
            let summary = commands::conditions_command(&cfg)?;
            print!("{}", commands::conditions_text(&summary));
        }
        Command::Convergence { cfg, levels } => {
            let cfg = load(&cfg)?;
            let report = commands::convergence_command(&cfg, levels)?;
            for (i, (&k, &e)) in report.ks.iter().zip(&report.errors).enumerate() {
                let order = report
                    .orders
                    .get(i)
                    .and_then(|o| o.map(|v| fmt_f64(v)))
                    .unwrap_or_else(|| "-".into());
                println!("K = {k:6}  error = {}  order = {order}", fmt_f64(e));
            }
        }
        Command::Compare { cfg_a, cfg_b, out } => {
            let a = load(&cfg_a)?;
            let b = load(&cfg_b)?;
            let summary = commands::compare_command(&a, &b, &out)?;
            println!("final max-norm difference = {}", fmt_f64(summary.final_diff));
        }
    }
    Ok(())
}
