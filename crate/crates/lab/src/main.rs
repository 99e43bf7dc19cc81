use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use rmt_lab::experiments::descriptions;
use rmt_lab::probes::{self, MapGrid};
use rmt_lab::{runner, LabError};

#[derive(Parser)]
#[command(name = "rmt-lab", version, about = "Monte Carlo laboratory for generalized Wigner matrices")]
struct Cli {
    /// Worker threads (0 = one per logical core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment of a config file; exit 0 iff all pass flags hold.
    Run {
        config: PathBuf,
        /// Output directory for the manifest, JSON reports and CSV tables.
        #[arg(long)]
        out: PathBuf,
    },
    /// List experiment kinds with their config fields.
    List,
    /// Semicircle reference quantities.
    Sc {
        #[command(subcommand)]
        command: ScCommand,
    },
    /// Stability parameters of a variance profile.
    Stability {
        #[command(subcommand)]
        command: StabilityCommand,
    },
    /// Resolvent diagnostics on one GOE sample.
    Resolvent {
        #[command(subcommand)]
        command: ResolventCommand,
    },
}

#[derive(Subcommand)]
enum ScCommand {
    /// Print m, rho, kappa and theta at z = E + i eta as JSON.
    Eval(PointArgs),
}

#[derive(Args)]
struct PointArgs {
    #[arg(long, allow_negative_numbers = true)]
    e: f64,
    #[arg(long)]
    eta: f64,
}

#[derive(Subcommand)]
enum StabilityCommand {
    /// Write Gamma, Gamma-tilde and the domain thresholds over an (E, eta) grid as CSV.
    Map {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, allow_negative_numbers = true, default_value_t = -3.0)]
        e_min: f64,
        #[arg(long, allow_negative_numbers = true, default_value_t = 3.0)]
        e_max: f64,
        #[arg(long, default_value_t = 61)]
        e_count: usize,
        #[arg(long, default_value_t = 20)]
        eta_count: usize,
    },
}

#[derive(Subcommand)]
enum ResolventCommand {
    /// Print Lambda, Theta, Pi and the worst self-consistent residual as JSON.
    Probe {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        #[command(flatten)]
        point: PointArgs,
    },
}

fn exit_for(err: &anyhow::Error) -> ExitCode {
    match err.downcast_ref::<LabError>() {
        Some(e) if e.is_config() => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run { config, out } => {
            let outcome = runner::run_config(&config, &out, cli.threads)?;
            for report in &outcome.reports {
                for flag in &report.pass_flags {
                    println!(
                        "{} {}/{} value={:.6e} margin={:.6e}",
                        if flag.passed { "PASS" } else { "FAIL" },
                        report.name,
                        flag.name,
                        flag.value,
                        flag.margin
                    );
                }
            }
            Ok(outcome.all_passed())
        }
        Command::List => {
            for d in descriptions() {
                println!("{}", d.kind.tag());
                println!("    fields: {}", d.fields);
                println!("    {}", d.summary);
            }
            Ok(true)
        }
        Command::Sc { command: ScCommand::Eval(p) } => {
            print_json(&probes::sc_eval(p.e, p.eta)?)?;
            Ok(true)
        }
        Command::Stability {
            command:
                StabilityCommand::Map {
                    profile,
                    gamma,
                    out,
                    e_min,
                    e_max,
                    e_count,
                    eta_count,
                },
        } => {
            let grid = MapGrid {
                e_min,
                e_max,
                e_count,
                eta_count,
            };
            let table = probes::stability_map_file(&profile, gamma, grid)?;
            table
                .write_csv(&out)
                .with_context(|| format!("writing {}", out.display()))?;
            Ok(true)
        }
        Command::Resolvent {
            command: ResolventCommand::Probe { n, seed, point },
        } => {
            print_json(&probes::resolvent_probe(n, seed, point.e, point.eta)?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            exit_for(&err)
        }
    }
}
