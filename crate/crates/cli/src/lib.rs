//! Batch front end: configuration layering, runs with snapshotting, replay
//! of stored pairs and post-hoc reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use envmap_core::analysis::summarize;
use envmap_core::genome::decode;
use envmap_core::io::{self, SnapshotWriter};
use envmap_core::physics::{evaluate_traced, write_trace_csv, EvalResult, TraceRow};
use envmap_core::search::{IterationReport, RunObserver};
use envmap_core::{CellIndex, Pair, RunConfig, RunResult, RunStats};

pub mod render;

/// Environment variable that overrides the output directory.
pub const OUTPUT_DIR_ENV: &str = "ENVMAP_OUTPUT_DIR";

/// Layers defaults, then the config file, then the output-directory
/// environment override, then `key=value` flags.
pub fn parse_config(
    file: Option<&Path>,
    env_output_dir: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = file {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        cfg.apply_text(&text)
            .with_context(|| format!("in config file {}", path.display()))?;
    }
    if let Some(dir) = env_output_dir {
        cfg.output_dir = Some(dir.to_path_buf());
    }
    for (k, v) in overrides {
        cfg.set(k, v)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Splits a `key=value` flag.
pub fn parse_override(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| format!("expected key=value, got `{s}`"))
}

struct Progress<'a> {
    inner: SnapshotWriter,
    started: Instant,
    report: Option<&'a mut dyn FnMut(&str)>,
}

impl RunObserver for Progress<'_> {
    fn on_iteration(&mut self, r: &IterationReport<'_>) -> envmap_core::Result<()> {
        self.inner.on_iteration(r)?;
        if let Some(out) = self.report.as_mut() {
            let s = r.stats;
            out(&format!(
                "iter {:>5}  occupied {:>3}  mean {:>7.2}  max {:>7.2}  found {:>4}  solved {:>3}  {:.0}s",
                s.iteration,
                s.occupancy,
                s.mean_fitness,
                s.max_fitness,
                r.recorders.found.len(),
                r.recorders.solved.len(),
                self.started.elapsed().as_secs_f64()
            ));
        }
        Ok(())
    }

    fn on_finish(&mut self, result: &RunResult) -> envmap_core::Result<()> {
        self.inner.on_finish(result)
    }
}

/// Runs a search and writes its snapshots, log and analysis under the
/// configured output directory. `progress` receives one line per iteration.
pub fn cmd_run(cfg: &RunConfig, progress: Option<&mut dyn FnMut(&str)>) -> Result<RunResult> {
    let dir = cfg
        .output_dir
        .clone()
        .ok_or_else(|| anyhow!("invalid config value for `output_dir`: an output directory is required"))?;
    cfg.validate()?;
    let mut obs = Progress {
        inner: SnapshotWriter::new(&dir, cfg)?,
        started: Instant::now(),
        report: progress,
    };
    Ok(envmap_core::run(cfg, &mut obs)?)
}

#[derive(Clone, Debug)]
pub struct Replay {
    pub pair: Pair,
    pub result: EvalResult,
    pub trace: Vec<TraceRow>,
}

/// Re-simulates the pair stored at `cell` of a snapshot. The simulator
/// settings come from the run's config echo two levels up, when present.
pub fn cmd_replay(snapshot: &Path, cell: CellIndex, trace_out: Option<&Path>) -> Result<Replay> {
    let snap = io::read_snapshot(snapshot)?;
    let pair = snap
        .get(cell)
        .ok_or_else(|| anyhow!("cell ({}, {}) is empty in snapshot {}", cell.row, cell.col, snapshot.display()))?
        .clone();
    let cfg = match snapshot.parent().and_then(Path::parent) {
        Some(run_dir) if run_dir.join(io::CONFIG_FILE).is_file() => io::read_config(run_dir)?,
        _ => RunConfig::default(),
    };
    let (result, trace) = evaluate_traced(&decode(&pair.genome), &pair.terrain, &cfg.sim)?;
    if let Some(path) = trace_out {
        let file = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        write_trace_csv(std::io::BufWriter::new(file), &trace)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(Replay { pair, result, trace })
}

#[derive(Clone, Debug)]
pub struct Report {
    pub stats: RunStats,
    pub snapshot_iteration: u64,
    pub files: Vec<PathBuf>,
}

/// Summary statistics, difficulty histograms and images for a finished run,
/// written to `out` (default `<run>/report`).
pub fn cmd_report(run_dir: &Path, out: Option<&Path>) -> Result<Report> {
    if !run_dir.is_dir() {
        bail!("run directory {} does not exist", run_dir.display());
    }
    let cfg = io::read_config(run_dir)?;
    let snapshot = io::latest_snapshot(run_dir)?;
    let snap = io::read_snapshot(&snapshot)?;
    let log = io::read_log(&run_dir.join(io::LOG_FILE))?;
    let recorders = io::read_analysis(run_dir, &cfg)?;
    let stats = summarize(&recorders.reference, &recorders.found, &recorders.solved);

    let out = out.map_or_else(|| run_dir.join("report"), Path::to_path_buf);
    fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut files = Vec::new();
    let mut emit = |name: &str| {
        let p = out.join(name);
        files.push(p.clone());
        p
    };

    io::write_stats(&emit("stats.csv"), &stats)?;
    io::write_histogram(&emit("difficulty_found.csv"), &stats.found_difficulty)?;
    io::write_histogram(&emit("difficulty_solved.csv"), &stats.solved_difficulty)?;

    let grid: Vec<Option<f64>> = (0..cfg.grid_size * cfg.grid_size)
        .map(|i| {
            snap.get(CellIndex::new(i / cfg.grid_size, i % cfg.grid_size))
                .map(|p| p.fitness)
        })
        .collect();
    render::fitness_grid(&grid, cfg.grid_size, 16).save(emit("archive.png"))?;
    render::fitness_grid(&recorders.reference.fitness_grid(), cfg.reference_grid_size, 4)
        .save(emit("reference.png"))?;
    render::histogram(&stats.found_difficulty).save(emit("difficulty_found.png"))?;
    render::histogram(&stats.solved_difficulty).save(emit("difficulty_solved.png"))?;
    let coverage: Vec<f64> = log.iter().map(|s| s.coverage).collect();
    render::line_chart(&coverage).save(emit("coverage.png"))?;

    Ok(Report {
        stats,
        snapshot_iteration: snap.iteration,
        files,
    })
}
