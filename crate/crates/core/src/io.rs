//! On-disk run layout.
//!
//! ```text
//! <run>/config.txt                      effective configuration, key=value
//! <run>/log.csv                         one row per iteration (0 = bootstrap)
//! <run>/snapshots/iter_NNNNNN/archive.csv
//! <run>/snapshots/iter_NNNNNN/cppn/rRR_cCC.json
//! <run>/snapshots/iter_NNNNNN/autoencoder.json   (dynamic mode)
//! <run>/analysis/reference.csv          reference map, CPPNs inline as JSON
//! <run>/analysis/found.csv, solved.csv  environment lists
//! <run>/analysis/found/NNNNN.json, solved/NNNNN.json   terrain heights
//! ```
//!
//! Floats are written in shortest round-trip form, so everything read back
//! is bit-identical to what was written.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::analysis::{difficulty, EnvironmentArchive, Recorders, ReferenceMap, RunStats};
use crate::archive::{Archive, Pair};
use crate::autoencoder::Mlp;
use crate::config::RunConfig;
use crate::cppn::Cppn;
use crate::descriptors::{static_descriptor, CellIndex, Descriptor};
use crate::error::{Error, Result};
use crate::genome::Genome;
use crate::search::{IterationReport, IterationStats, RunObserver, RunResult};
use crate::terrain::{generate_terrain, Terrain};

pub const CONFIG_FILE: &str = "config.txt";
pub const LOG_FILE: &str = "log.csv";
pub const SNAPSHOTS_DIR: &str = "snapshots";
pub const ARCHIVE_FILE: &str = "archive.csv";
pub const CPPN_DIR: &str = "cppn";
pub const AUTOENCODER_FILE: &str = "autoencoder.json";
pub const ANALYSIS_DIR: &str = "analysis";
pub const REFERENCE_FILE: &str = "reference.csv";
pub const FOUND: &str = "found";
pub const SOLVED: &str = "solved";

pub fn snapshot_dir(run_dir: &Path, iteration: u64) -> PathBuf {
    run_dir.join(SNAPSHOTS_DIR).join(format!("iter_{iteration:06}"))
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn write_file(p: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(p, contents).map_err(|e| Error::io(p, e))
}

fn read_file(p: &Path, what: &'static str) -> Result<String> {
    match fs::read_to_string(p) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::Missing {
            what,
            path: p.to_path_buf(),
        }),
        Err(e) => Err(Error::io(p, e)),
    }
}

fn parse_err(what: &'static str, path: &Path, reason: impl ToString) -> Error {
    Error::Parse {
        what,
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>, header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let csv_err = |e: csv::Error| parse_err("csv output", path, e);
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| parse_err("csv output", path, e))?;
    write_file(path, bytes)
}

fn read_csv<T: DeserializeOwned>(path: &Path, what: &'static str) -> Result<Vec<T>> {
    let text = read_file(path, what)?;
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| parse_err(what, path, format!("record {}: {e}", i + 1))))
        .collect()
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data always serializes")
}

fn read_json<T: DeserializeOwned>(path: &Path, what: &'static str) -> Result<T> {
    let text = read_file(path, what)?;
    serde_json::from_str(&text).map_err(|e| parse_err(what, path, e))
}

fn parse_cppn(json: &str, what: &'static str, path: &Path) -> Result<Cppn> {
    let c: Cppn = serde_json::from_str(json).map_err(|e| parse_err(what, path, e))?;
    c.validate().map_err(|e| parse_err(what, path, e))?;
    Ok(c)
}

pub fn write_config(run_dir: &Path, cfg: &RunConfig) -> Result<()> {
    create_dir(run_dir)?;
    write_file(&run_dir.join(CONFIG_FILE), cfg.to_text())
}

pub fn read_config(run_dir: &Path) -> Result<RunConfig> {
    let path = run_dir.join(CONFIG_FILE);
    RunConfig::from_text(&read_file(&path, "run config")?)
}

#[derive(Serialize, Deserialize)]
struct LogRow {
    iteration: u64,
    evaluations: usize,
    occupancy: usize,
    coverage: f64,
    mean_fitness: f64,
    max_fitness: f64,
    inserted: usize,
    replaced: usize,
    occupancy_before_rebin: Option<usize>,
}

const LOG_HEADER: &[&str] = &[
    "iteration",
    "evaluations",
    "occupancy",
    "coverage",
    "mean_fitness",
    "max_fitness",
    "inserted",
    "replaced",
    "occupancy_before_rebin",
];

pub fn write_log(path: &Path, log: &[IterationStats]) -> Result<()> {
    let rows = log.iter().map(|s| LogRow {
        iteration: s.iteration,
        evaluations: s.evaluations,
        occupancy: s.occupancy,
        coverage: s.coverage,
        mean_fitness: s.mean_fitness,
        max_fitness: s.max_fitness,
        inserted: s.inserted,
        replaced: s.replaced,
        occupancy_before_rebin: s.occupancy_before_rebin,
    });
    write_csv(path, rows, LOG_HEADER)
}

pub fn read_log(path: &Path) -> Result<Vec<IterationStats>> {
    let rows: Vec<LogRow> = read_csv(path, "run log")?;
    Ok(rows
        .into_iter()
        .map(|r| IterationStats {
            iteration: r.iteration,
            evaluations: r.evaluations,
            occupancy: r.occupancy,
            coverage: r.coverage,
            mean_fitness: r.mean_fitness,
            max_fitness: r.max_fitness,
            inserted: r.inserted,
            replaced: r.replaced,
            occupancy_before_rebin: r.occupancy_before_rebin,
        })
        .collect())
}

#[derive(Serialize, Deserialize)]
struct ArchiveRow {
    row: usize,
    col: usize,
    fitness: f64,
    d1: f64,
    d2: f64,
    genome: Genome,
    cppn: String,
}

const ARCHIVE_HEADER: &[&str] = &["row", "col", "fitness", "d1", "d2", "genome", "cppn"];

/// A map snapshot as read back from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub iteration: u64,
    /// Occupied cells in row-major order.
    pub entries: Vec<(CellIndex, Pair)>,
    pub autoencoder: Option<Mlp>,
}

impl Snapshot {
    pub fn get(&self, cell: CellIndex) -> Option<&Pair> {
        self.entries.iter().find(|(c, _)| *c == cell).map(|(_, p)| p)
    }

    pub fn fitness_by_cell(&self) -> BTreeMap<CellIndex, f64> {
        self.entries.iter().map(|(c, p)| (*c, p.fitness)).collect()
    }

    pub fn occupancy(&self) -> usize {
        self.entries.len()
    }
}

pub fn write_snapshot(dir: &Path, archive: &Archive, ae: Option<&Mlp>) -> Result<()> {
    let cppn_dir = dir.join(CPPN_DIR);
    create_dir(&cppn_dir)?;
    let mut rows = Vec::with_capacity(archive.occupancy());
    for (cell, p) in archive.iter() {
        let name = format!("r{:02}_c{:02}.json", cell.row, cell.col);
        write_file(&cppn_dir.join(&name), to_json(&p.cppn))?;
        rows.push(ArchiveRow {
            row: cell.row,
            col: cell.col,
            fitness: p.fitness,
            d1: p.descriptor.d1,
            d2: p.descriptor.d2,
            genome: p.genome,
            cppn: format!("{CPPN_DIR}/{name}"),
        });
    }
    write_csv(&dir.join(ARCHIVE_FILE), rows, ARCHIVE_HEADER)?;
    if let Some(ae) = ae {
        write_file(&dir.join(AUTOENCODER_FILE), to_json(ae))?;
    }
    Ok(())
}

fn iteration_of(dir: &Path) -> Option<u64> {
    dir.file_name()?.to_str()?.strip_prefix("iter_")?.parse().ok()
}

pub fn read_snapshot(dir: &Path) -> Result<Snapshot> {
    let archive_path = dir.join(ARCHIVE_FILE);
    if !archive_path.is_file() {
        return Err(Error::Missing {
            what: "snapshot",
            path: dir.to_path_buf(),
        });
    }
    let iteration = iteration_of(dir).ok_or_else(|| parse_err("snapshot directory name", dir, "expected iter_NNNNNN"))?;
    let rows: Vec<ArchiveRow> = read_csv(&archive_path, "archive csv")?;
    let mut entries = Vec::with_capacity(rows.len());
    for r in rows {
        let cppn_path = dir.join(&r.cppn);
        let cppn = parse_cppn(&read_file(&cppn_path, "cppn file")?, "cppn file", &cppn_path)?;
        let terrain = generate_terrain(&cppn);
        let pair = Pair {
            genome: r.genome,
            cppn,
            terrain,
            fitness: r.fitness,
            descriptor: Descriptor::new(r.d1, r.d2),
        };
        entries.push((CellIndex::new(r.row, r.col), pair));
    }
    let ae_path = dir.join(AUTOENCODER_FILE);
    let autoencoder = if ae_path.is_file() {
        let ae: Mlp = read_json(&ae_path, "autoencoder checkpoint")?;
        ae.validate().map_err(|e| parse_err("autoencoder checkpoint", &ae_path, e))?;
        Some(ae)
    } else {
        None
    };
    Ok(Snapshot {
        iteration,
        entries,
        autoencoder,
    })
}

/// Snapshot directories of a run, ordered by iteration.
pub fn list_snapshots(run_dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let root = run_dir.join(SNAPSHOTS_DIR);
    let listing = match fs::read_dir(&root) {
        Ok(l) => l,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            return Err(Error::Missing {
                what: "snapshots directory",
                path: root,
            })
        }
        Err(e) => return Err(Error::io(&root, e)),
    };
    let mut out = Vec::new();
    for entry in listing {
        let path = entry.map_err(|e| Error::io(&root, e))?.path();
        if let Some(i) = iteration_of(&path).filter(|_| path.is_dir()) {
            out.push((i, path));
        }
    }
    out.sort();
    Ok(out)
}

pub fn latest_snapshot(run_dir: &Path) -> Result<PathBuf> {
    list_snapshots(run_dir)?
        .pop()
        .map(|(_, p)| p)
        .ok_or_else(|| Error::Missing {
            what: "snapshot",
            path: run_dir.join(SNAPSHOTS_DIR),
        })
}

#[derive(Serialize, Deserialize)]
struct ReferenceRow {
    row: usize,
    col: usize,
    fitness: f64,
    genome: Genome,
    cppn: String,
}

pub fn write_reference(path: &Path, r: &ReferenceMap) -> Result<()> {
    let rows = r.iter().map(|(c, p)| ReferenceRow {
        row: c.row,
        col: c.col,
        fitness: p.fitness,
        genome: p.genome,
        cppn: to_json(&p.cppn),
    });
    write_csv(path, rows, &["row", "col", "fitness", "genome", "cppn"])
}

pub fn read_reference(path: &Path, size: usize) -> Result<ReferenceMap> {
    let rows: Vec<ReferenceRow> = read_csv(path, "reference map csv")?;
    let mut map = ReferenceMap::new(size);
    for r in rows {
        let cppn = parse_cppn(&r.cppn, "reference map csv", path)?;
        let terrain = generate_terrain(&cppn);
        let descriptor = static_descriptor(&terrain);
        map.update(&Pair {
            genome: r.genome,
            cppn,
            terrain,
            fitness: r.fitness,
            descriptor,
        });
        if map.get(CellIndex::new(r.row, r.col)).is_none() {
            return Err(parse_err(
                "reference map csv",
                path,
                format!("pair does not belong to cell ({}, {})", r.row, r.col),
            ));
        }
    }
    Ok(map)
}

#[derive(Serialize, Deserialize)]
struct EnvironmentRow {
    index: usize,
    terrain_file: String,
    genome: Genome,
    fitness: f64,
    difficulty: i32,
}

/// Writes `<dir>/<name>.csv` and one terrain file per entry under
/// `<dir>/<name>/`.
pub fn write_environments(dir: &Path, name: &str, a: &EnvironmentArchive) -> Result<()> {
    let terrain_dir = dir.join(name);
    create_dir(&terrain_dir)?;
    let mut rows = Vec::with_capacity(a.len());
    for (i, e) in a.entries().iter().enumerate() {
        let file = format!("{name}/{i:05}.json");
        write_file(&dir.join(&file), to_json(&e.terrain))?;
        rows.push(EnvironmentRow {
            index: i,
            terrain_file: file,
            genome: e.genome,
            fitness: e.fitness,
            difficulty: difficulty(&e.terrain),
        });
    }
    write_csv(
        &dir.join(format!("{name}.csv")),
        rows,
        &["index", "terrain_file", "genome", "fitness", "difficulty"],
    )
}

/// Reads entries written by [`write_environments`] into `into`, which
/// supplies the radius and fitness threshold.
pub fn read_environments(dir: &Path, name: &str, mut into: EnvironmentArchive) -> Result<EnvironmentArchive> {
    let csv_path = dir.join(format!("{name}.csv"));
    let rows: Vec<EnvironmentRow> = read_csv(&csv_path, "environment list csv")?;
    for r in rows {
        let terrain: Terrain = read_json(&dir.join(&r.terrain_file), "terrain file")?;
        if difficulty(&terrain) != r.difficulty {
            return Err(parse_err(
                "environment list csv",
                &csv_path,
                format!("difficulty of entry {} does not match its terrain", r.index),
            ));
        }
        into.push_raw(terrain, r.genome, r.fitness);
    }
    Ok(into)
}

pub fn write_histogram(path: &Path, h: &BTreeMap<i32, usize>) -> Result<()> {
    write_csv(path, h.iter(), &["difficulty", "count"])
}

pub fn read_histogram(path: &Path) -> Result<BTreeMap<i32, usize>> {
    let rows: Vec<(i32, usize)> = read_csv(path, "histogram csv")?;
    Ok(rows.into_iter().collect())
}

pub fn write_stats(path: &Path, s: &RunStats) -> Result<()> {
    let rows = [
        ("coverage", s.coverage),
        ("mean_fitness", s.mean_fitness),
        ("average_map_fitness", s.average_map_fitness),
        ("found_count", s.found_count as f64),
        ("solved_count", s.solved_count as f64),
    ];
    write_csv(path, rows, &["metric", "value"])
}

pub fn write_analysis(run_dir: &Path, r: &Recorders) -> Result<()> {
    let dir = run_dir.join(ANALYSIS_DIR);
    create_dir(&dir)?;
    write_reference(&dir.join(REFERENCE_FILE), &r.reference)?;
    write_environments(&dir, FOUND, &r.found)?;
    write_environments(&dir, SOLVED, &r.solved)
}

pub fn read_analysis(run_dir: &Path, cfg: &RunConfig) -> Result<Recorders> {
    let dir = run_dir.join(ANALYSIS_DIR);
    Ok(Recorders {
        reference: read_reference(&dir.join(REFERENCE_FILE), cfg.reference_grid_size)?,
        found: read_environments(&dir, FOUND, EnvironmentArchive::found(cfg.found_radius))?,
        solved: read_environments(
            &dir,
            SOLVED,
            EnvironmentArchive::solved(cfg.solved_radius, cfg.solved_threshold),
        )?,
    })
}

/// Writes the config echo up front, a snapshot at iteration 0 and every
/// `snapshot_interval` iterations, and the final snapshot, log and analysis
/// when the run ends.
pub struct SnapshotWriter {
    run_dir: PathBuf,
    interval: u64,
    last_written: Option<u64>,
}

impl SnapshotWriter {
    pub fn new(run_dir: impl Into<PathBuf>, cfg: &RunConfig) -> Result<Self> {
        let run_dir = run_dir.into();
        write_config(&run_dir, cfg)?;
        Ok(Self {
            run_dir,
            interval: cfg.snapshot_interval,
            last_written: None,
        })
    }

    pub fn run_dir(&self) -> &Path {
        &self.run_dir
    }
}

impl RunObserver for SnapshotWriter {
    fn on_iteration(&mut self, report: &IterationReport<'_>) -> Result<()> {
        let i = report.stats.iteration;
        let due = i.is_multiple_of(self.interval);
        if due {
            write_snapshot(&snapshot_dir(&self.run_dir, i), report.archive, report.autoencoder)?;
            self.last_written = Some(i);
        }
        Ok(())
    }

    fn on_finish(&mut self, result: &RunResult) -> Result<()> {
        let last = result.log.last().map_or(0, |s| s.iteration);
        if self.last_written != Some(last) {
            write_snapshot(
                &snapshot_dir(&self.run_dir, last),
                &result.archive,
                result.autoencoder.as_ref(),
            )?;
            self.last_written = Some(last);
        }
        write_log(&self.run_dir.join(LOG_FILE), &result.log)?;
        write_analysis(&self.run_dir, &result.recorders)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Mode;
    use crate::rng::{stream, Stream};

    fn small_config() -> RunConfig {
        RunConfig {
            iterations: Some(2),
            wall_clock_secs: None,
            bootstrap_size: 12,
            batch_size: 8,
            workers: 1,
            snapshot_interval: 1,
            ..RunConfig::default()
        }
    }

    #[test]
    fn run_artifacts_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config();
        let mut w = SnapshotWriter::new(dir.path(), &cfg).unwrap();
        let result = crate::search::run(&cfg, &mut w).unwrap();

        assert_eq!(read_config(dir.path()).unwrap(), cfg);
        assert_eq!(read_log(&dir.path().join(LOG_FILE)).unwrap(), result.log);
        let snaps = list_snapshots(dir.path()).unwrap();
        assert_eq!(snaps.iter().map(|s| s.0).collect::<Vec<_>>(), vec![0, 1, 2]);

        let s = read_snapshot(&snaps[2].1).unwrap();
        let stored: Vec<_> = result.archive.iter().map(|(c, p)| (c, p.clone())).collect();
        assert_eq!(s.entries, stored);
        assert_eq!(s.iteration, 2);

        let r = read_analysis(dir.path(), &cfg).unwrap();
        assert_eq!(r, result.recorders);
    }

    #[test]
    fn autoencoder_checkpoint_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let ae = Mlp::new(&mut stream(1, Stream::AutoencoderInit, 0, 0));
        let snap = snapshot_dir(dir.path(), 7);
        write_snapshot(&snap, &Archive::new(25, Mode::Dynamic), Some(&ae)).unwrap();
        let s = read_snapshot(&snap).unwrap();
        assert_eq!(s.autoencoder.as_ref(), Some(&ae));
        assert!(s.entries.is_empty());
    }

    #[test]
    fn distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(list_snapshots(dir.path()), Err(Error::Missing { .. })));
        let snap = snapshot_dir(dir.path(), 0);
        assert!(matches!(read_snapshot(&snap), Err(Error::Missing { what: "snapshot", .. })));
        fs::create_dir_all(&snap).unwrap();
        fs::write(snap.join(ARCHIVE_FILE), "row,col\n1,x\n").unwrap();
        assert!(matches!(read_snapshot(&snap), Err(Error::Parse { .. })));
        assert!(matches!(latest_snapshot(&dir.path().join("nowhere")), Err(Error::Missing { .. })));
    }

    #[test]
    fn histogram_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let h: BTreeMap<i32, usize> = [(-3, 2), (0, 5), (6, 1)].into_iter().collect();
        let p = dir.path().join("h.csv");
        write_histogram(&p, &h).unwrap();
        assert_eq!(read_histogram(&p).unwrap(), h);
    }
}
