use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use envmap_cli::{cmd_replay, cmd_report, cmd_run, parse_config, parse_override, OUTPUT_DIR_ENV};
use envmap_core::CellIndex;

#[derive(Parser)]
#[command(name = "envmap", version, about = "Environment-agent MAP-Elites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a search and write snapshots under the output directory.
    Run {
        /// Flat key=value config file.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Override any config key; may be repeated.
        #[arg(short = 's', long = "set", value_name = "KEY=VALUE", value_parser = parse_override)]
        set: Vec<(String, String)>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(short, long, env = OUTPUT_DIR_ENV)]
        output_dir: Option<PathBuf>,
        #[arg(short, long)]
        quiet: bool,
    },
    /// Summary statistics, histograms and images for a finished run.
    Report {
        run_dir: PathBuf,
        /// Defaults to <RUN_DIR>/report.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Re-simulate the pair stored in one cell of a snapshot.
    Replay {
        snapshot: PathBuf,
        row: usize,
        col: usize,
        /// Per-step trace CSV.
        #[arg(short, long)]
        trace: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            mut set,
            mode,
            seed,
            iterations,
            batch_size,
            workers,
            output_dir,
            quiet,
        } => {
            // shorthands apply before --set so explicit keys win
            let shorthands = [
                ("mode", mode),
                ("seed", seed.map(|v| v.to_string())),
                ("iterations", iterations.map(|v| v.to_string())),
                ("batch_size", batch_size.map(|v| v.to_string())),
                ("workers", workers.map(|v| v.to_string())),
            ];
            let mut overrides: Vec<(String, String)> = shorthands
                .into_iter()
                .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
                .collect();
            overrides.append(&mut set);
            let cfg = parse_config(config.as_deref(), output_dir.as_deref(), &overrides)?;
            let mut print = |line: &str| eprintln!("{line}");
            let result = cmd_run(&cfg, if quiet { None } else { Some(&mut print) })?;
            let last = result.log.last().expect("log has the bootstrap row");
            println!(
                "finished after {} iterations: {} cells occupied, max fitness {:.2}, {} found, {} solved",
                last.iteration,
                last.occupancy,
                last.max_fitness,
                result.recorders.found.len(),
                result.recorders.solved.len()
            );
        }
        Command::Report { run_dir, out } => {
            let r = cmd_report(&run_dir, out.as_deref())?;
            println!(
                "snapshot {}: reference coverage {:.4}, mean fitness {:.2}, average map fitness {:.4}, {} found, {} solved",
                r.snapshot_iteration,
                r.stats.coverage,
                r.stats.mean_fitness,
                r.stats.average_map_fitness,
                r.stats.found_count,
                r.stats.solved_count
            );
            for f in r.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Replay {
            snapshot,
            row,
            col,
            trace,
        } => {
            let r = cmd_replay(&snapshot, CellIndex::new(row, col), trace.as_deref())?;
            println!(
                "stored fitness {}, replayed fitness {}, {} steps{}",
                r.pair.fitness,
                r.result.fitness,
                r.result.steps_used,
                if r.result.killed_by_line { ", caught by the kill line" } else { "" }
            );
        }
    }
    Ok(())
}
