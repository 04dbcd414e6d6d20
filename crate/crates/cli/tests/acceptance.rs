//! Acceptance suite: one line per criterion, non-zero exit on any failure.
//!
//! Run with `cargo test -p envmap-cli --test acceptance`. A subset can be
//! selected by passing criterion numbers, e.g. `-- 4 5 6`.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use envmap_cli::cmd_replay;
use envmap_core::analysis::difficulty;
use envmap_core::archive::{mutate_pair, Candidate, InsertOutcome};
use envmap_core::autoencoder::{Mlp, TrainParams};
use envmap_core::config::Mode;
use envmap_core::cppn::{Cppn, CppnMutation};
use envmap_core::descriptors::{CellIndex, Descriptor};
use envmap_core::genome::{decode, Genome, Shape};
use envmap_core::io;
use envmap_core::rng::{stream, Stream};
use envmap_core::search::{IterationReport, RunObserver};
use envmap_core::terrain::{generate_terrain, Terrain};
use envmap_core::{Archive, RunConfig};
use ndarray::Array2;
use rand::Rng;

type Outcome = Result<String, String>;
type Check = fn(&Path) -> Outcome;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {{
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)+));
        }
    }};
}

fn base_config(dir: &Path, seed: u64, iterations: u64, batch: usize) -> RunConfig {
    RunConfig {
        seed,
        iterations: Some(iterations),
        wall_clock_secs: None,
        batch_size: batch,
        output_dir: Some(dir.to_path_buf()),
        ..RunConfig::default()
    }
}

fn run(cfg: &RunConfig) -> envmap_core::RunResult {
    envmap_cli::cmd_run(cfg, None).expect("run succeeds")
}

/// Every archive CSV and CPPN file of every snapshot, keyed by relative path.
fn snapshot_bytes(run_dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    for (_, snap) in io::list_snapshots(run_dir).unwrap() {
        let mut files = vec![snap.join(io::ARCHIVE_FILE)];
        for e in fs::read_dir(snap.join(io::CPPN_DIR)).unwrap() {
            files.push(e.unwrap().path());
        }
        for f in files {
            let rel = f.strip_prefix(run_dir).unwrap().to_path_buf();
            out.insert(rel, fs::read(&f).unwrap());
        }
    }
    out
}

fn criterion_1(scratch: &Path) -> Outcome {
    let started = Instant::now();
    let a = scratch.join("c1a");
    let b = scratch.join("c1b");
    for dir in [&a, &b] {
        let mut cfg = base_config(dir, 17, 20, 50);
        cfg.snapshot_interval = 5;
        run(&cfg);
    }
    let (x, y) = (snapshot_bytes(&a), snapshot_bytes(&b));
    ensure!(x.keys().any(|k| k.ends_with(io::ARCHIVE_FILE)), "no archive CSVs written");
    ensure!(x == y, "archive snapshots differ between identical runs");
    let csvs = x.keys().filter(|k| k.ends_with(io::ARCHIVE_FILE)).count();
    Ok(format!(
        "{csvs} archive CSVs and {} CPPN files byte-identical ({:.0}s)",
        x.len() - csvs,
        started.elapsed().as_secs_f64()
    ))
}

fn criterion_2(scratch: &Path) -> Outcome {
    let dir = scratch.join("c2");
    let mut cfg = base_config(&dir, 3, 100, 100);
    cfg.snapshot_interval = 1;
    run(&cfg);
    let snaps = io::list_snapshots(&dir).unwrap();
    ensure!(snaps.len() == 101, "expected 101 snapshots, found {}", snaps.len());
    let mut prev: Option<BTreeMap<CellIndex, f64>> = None;
    for (i, path) in &snaps {
        let grid = io::read_snapshot(path).unwrap().fitness_by_cell();
        if let Some(p) = &prev {
            ensure!(grid.len() >= p.len(), "coverage fell at snapshot {i}: {} -> {}", p.len(), grid.len());
            for (cell, f) in p {
                let now = grid.get(cell).copied();
                ensure!(now.is_some_and(|g| g >= *f), "cell {cell:?} went from {f} to {now:?} at snapshot {i}");
            }
        }
        prev = Some(grid);
    }
    let first = io::read_snapshot(&snaps[0].1).unwrap().occupancy();
    Ok(format!(
        "101 snapshots read back, occupancy {first} -> {}",
        prev.unwrap().len()
    ))
}

#[derive(Default)]
struct RebinWatch {
    grids: Vec<BTreeMap<CellIndex, f64>>,
    before: Vec<Option<BTreeMap<CellIndex, f64>>>,
}

fn grid_of(a: &Archive) -> BTreeMap<CellIndex, f64> {
    a.iter().map(|(c, p)| (c, p.fitness)).collect()
}

impl RunObserver for RebinWatch {
    fn on_iteration(&mut self, r: &IterationReport<'_>) -> envmap_core::Result<()> {
        self.grids.push(grid_of(r.archive));
        self.before.push(r.before_rebin.map(grid_of));
        Ok(())
    }
}

fn elitist(prev: &BTreeMap<CellIndex, f64>, next: &BTreeMap<CellIndex, f64>) -> bool {
    prev.iter().all(|(c, f)| next.get(c).is_some_and(|g| g >= f))
}

/// Several seeds, since a single short dynamic run often never fills a cell
/// that a retrain can merge away.
fn criterion_3(scratch: &Path) -> Outcome {
    let mut drops = Vec::new();
    for seed in 0..5 {
        let mut cfg = base_config(&scratch.join(format!("c3_{seed}")), seed, 100, 100);
        cfg.mode = Mode::Dynamic;
        cfg.retrain_interval = 10;
        let mut w = RebinWatch::default();
        envmap_core::run(&cfg, &mut w).map_err(|e| e.to_string())?;
        let mut retrains = 0;
        for i in 1..w.grids.len() {
            match &w.before[i] {
                Some(before) => {
                    retrains += 1;
                    ensure!(
                        elitist(&w.grids[i - 1], before),
                        "seed {seed}: elitism broken before retrain at iteration {i}"
                    );
                    ensure!(
                        w.grids[i].len() <= before.len(),
                        "seed {seed}: occupancy rose across retrain at iteration {i}: {} -> {}",
                        before.len(),
                        w.grids[i].len()
                    );
                    if w.grids[i].len() < before.len() {
                        drops.push(format!("seed {seed} iteration {i}: {} -> {}", before.len(), w.grids[i].len()));
                    }
                }
                None => ensure!(
                    elitist(&w.grids[i - 1], &w.grids[i]),
                    "seed {seed}: elitism broken at iteration {i}"
                ),
            }
        }
        ensure!(retrains == 10, "seed {seed}: expected 10 retrains, saw {retrains}");
    }
    ensure!(!drops.is_empty(), "no retrain across 5 seeds reduced occupancy");
    Ok(format!("50 retrains checked; occupancy drops at {}", drops.join(", ")))
}

fn pair_at(fitness: f64, d1: f64, d2: f64) -> envmap_core::Pair {
    Candidate::new(Genome::zeros(), Cppn::flat()).into_pair(fitness, Descriptor::new(d1, d2))
}

fn criterion_4(_: &Path) -> Outcome {
    use InsertOutcome::*;
    let mut a = Archive::new(25, Mode::Static);
    let cell = CellIndex::new(3, 4);
    ensure!(a.try_insert(pair_at(99.0, 3.2, 4.1), 100.0).unwrap() == RejectedThreshold, "99 into empty cell");
    ensure!(a.try_insert(pair_at(100.0, 3.2, 4.1), 100.0).unwrap() == RejectedThreshold, "exactly 100 into empty cell");
    ensure!(a.occupancy() == 0, "rejected pairs were stored");
    ensure!(a.try_insert(pair_at(150.0, 3.2, 4.1), 100.0).unwrap() == InsertedEmpty, "150 into empty cell");
    ensure!(a.try_insert(pair_at(120.0, 3.9, 4.9), 100.0).unwrap() == RejectedWorse, "120 against 150");
    ensure!(a.try_insert(pair_at(150.0, 3.5, 4.5), 100.0).unwrap() == RejectedWorse, "tie against 150");
    ensure!(
        a.get(cell).unwrap().descriptor == Descriptor::new(3.2, 4.1),
        "tie did not keep the incumbent"
    );
    ensure!(a.try_insert(pair_at(180.0, 3.5, 4.5), 100.0).unwrap() == Replaced, "180 against 150");
    ensure!(a.get(cell).unwrap().fitness == 180.0, "replacement not stored");
    ensure!(a.occupancy() == 1, "one cell expected");
    Ok("threshold, replacement and tie rules hold".into())
}

/// Heights built from `(length, step)` runs starting at `start`; any
/// remaining units repeat the last height.
fn shaped(start: f64, lead: usize, runs: &[(usize, f64)]) -> Terrain {
    let mut h = vec![start; lead + 1];
    for &(len, step) in runs {
        for _ in 0..len {
            let next = h.last().unwrap() + step;
            h.push(next);
        }
    }
    h.resize(200, *h.last().unwrap());
    Terrain::new(h).unwrap()
}

fn criterion_5(_: &Path) -> Outcome {
    let sawtooth = Terrain::new((0..200).map(|i| if i % 2 == 0 { 0.0 } else { 0.1 }).collect()).unwrap();
    // values worked out by hand from the hill table
    let corpus: Vec<(&str, Terrain, i32)> = vec![
        ("flat", Terrain::flat(0.0), 0),
        ("10 units at +0.1", shaped(0.0, 50, &[(10, 0.1)]), 6),
        ("5 units at -0.5", shaped(5.0, 50, &[(5, -0.5)]), -3),
        ("single +3 step", shaped(0.0, 99, &[(1, 3.0)]), 6),
        ("tent of four +0.5 then four -0.5", shaped(2.0, 30, &[(4, 0.5), (4, -0.5)]), 3),
        ("sawtooth of +-0.1", sawtooth, 101),
        ("ramp up 0.1 everywhere", shaped(0.0, 0, &[(199, 0.1)]), 6),
        ("ramp down 0.1 everywhere", shaped(19.9, 0, &[(199, -0.1)]), -3),
        ("three +2.5 cliffs", shaped(0.0, 60, &[(3, 2.5)]), 6),
        (
            "six +0.05, flat, two -1.0, flat, nine +0.3",
            shaped(10.0, 20, &[(6, 0.05), (10, 0.0), (2, -1.0), (10, 0.0), (9, 0.3)]),
            10,
        ),
    ];
    for (name, t, want) in &corpus {
        let got = difficulty(t);
        ensure!(got == *want, "{name}: expected {want}, got {got}");
    }
    Ok(format!("{} oracle terrains match", corpus.len()))
}

fn criterion_6(_: &Path) -> Outcome {
    let mut rng = stream(2024, Stream::Bootstrap, 0, 0);
    let mut largest = 0;
    for n in 0..100_000 {
        let g = Genome::random(&mut rng);
        let c = catch_unwind(|| decode(&g)).map_err(|_| format!("decode panicked on {g}"))?;
        c.check_invariants().map_err(|e| format!("genome {n} ({g}): {e}"))?;
        ensure!(matches!(c.root().module.shape, Shape::Rectangle { .. }), "root is not a rectangle for {g}");
        ensure!(c.len() <= 17, "{} nodes for {g}", c.len());
        for (i, node) in c.nodes.iter().enumerate() {
            ensure!(
                !node.module.shape.is_circle() || c.children(i).next().is_none(),
                "circle with children for {g}"
            );
        }
        largest = largest.max(c.len());
    }
    Ok(format!("100000 genomes decoded, largest creature {largest} modules"))
}

fn criterion_7(_: &Path) -> Outcome {
    // convergence on one fixed terrain
    let params = CppnMutation::default();
    let mut rng = stream(7, Stream::Offspring, 0, 0);
    let mut c = Cppn::flat();
    for _ in 0..12 {
        c = c.mutate(&mut rng, &params);
    }
    let t = generate_terrain(&c);
    let mut net = Mlp::new(&mut stream(7, Stream::AutoencoderInit, 0, 0));
    let before = net.reconstruction_error(&t);
    let train = TrainParams { epochs: 500, ..TrainParams::default() };
    net.train(std::slice::from_ref(&t), &train, &mut stream(7, Stream::AutoencoderTrain, 0, 0))
        .map_err(|e| e.to_string())?;
    let after = net.reconstruction_error(&t);
    ensure!(after < 0.05 * before, "reconstruction error {before} -> {after}");

    // gradient check
    let mut rng = stream(8, Stream::AutoencoderInit, 0, 0);
    let toy = Mlp::with_sizes(&[6, 4, 3, 4, 6], &mut rng);
    let x = Array2::from_shape_fn((4, 6), |_| rng.random::<f64>());
    let (_, grads) = toy.loss_and_gradients(x.view());
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let rel = |a: f64, n: f64| (a - n).abs() / a.abs().max(n.abs()).max(1e-7);
    for l in 0..toy.weights().len() {
        for (idx, &a) in grads.weights[l].indexed_iter() {
            let (mut p, mut m) = (toy.clone(), toy.clone());
            p.weights_mut()[l][idx] += h;
            m.weights_mut()[l][idx] -= h;
            worst = worst.max(rel(a, (p.loss(x.view()) - m.loss(x.view())) / (2.0 * h)));
        }
        for (i, &a) in grads.biases[l].indexed_iter() {
            let (mut p, mut m) = (toy.clone(), toy.clone());
            p.biases_mut()[l][i] += h;
            m.biases_mut()[l][i] -= h;
            worst = worst.max(rel(a, (p.loss(x.view()) - m.loss(x.view())) / (2.0 * h)));
        }
    }
    ensure!(worst < 1e-4, "worst relative gradient error {worst:e}");
    Ok(format!(
        "error {before:.4} -> {after:.3e} ({:.4}%), worst gradient error {worst:.1e}",
        100.0 * after / before
    ))
}

fn criterion_8(_: &Path) -> Outcome {
    let mut rng = stream(99, Stream::Bootstrap, 0, 0);
    let parent = Candidate::new(Genome::random(&mut rng), Cppn::flat().mutate(&mut rng, &CppnMutation::default()))
        .into_pair(0.0, Descriptor::new(0.0, 0.0));
    let cfg = RunConfig::default();
    let n = 10_000;
    let (mut flips, mut env) = (0u64, 0u64);
    for i in 0..n {
        let mut r = stream(99, Stream::Offspring, 1, i);
        let child = mutate_pair(&parent, &mut r, cfg.bit_flip_prob, cfg.env_mutation_prob, &cfg.cppn);
        flips += u64::from(child.genome.hamming(&parent.genome));
        env += u64::from(child.env_mutated);
    }
    let mean = flips as f64 / n as f64;
    let rate = env as f64 / n as f64;
    ensure!((mean - 14.4).abs() <= 1.0, "mean bit flips {mean}");
    ensure!((rate - 0.2).abs() <= 0.03, "environment mutation rate {rate}");
    Ok(format!("mean flips {mean:.3}, environment rate {rate:.4}"))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn criterion_9(scratch: &Path) -> Outcome {
    let started = Instant::now();
    let (mut cov0, mut cov1, mut max0, mut max1) = (vec![], vec![], vec![], vec![]);
    for seed in 0..5 {
        let mut cfg = base_config(&scratch.join(format!("c9_{seed}")), seed, 300, 100);
        cfg.snapshot_interval = 100;
        let r = run(&cfg);
        cov0.push(r.bootstrap.coverage());
        cov1.push(r.archive.coverage());
        max0.push(r.bootstrap.max_fitness().unwrap_or(0.0));
        max1.push(r.archive.max_fitness().unwrap_or(0.0));
    }
    let (c0, c1, m0, m1) = (median(cov0), median(cov1), median(max0), median(max1));
    ensure!(c1 > c0, "median coverage {c0} -> {c1}");
    ensure!(m1 > m0, "median max fitness {m0} -> {m1}");
    Ok(format!(
        "median coverage {c0:.4} -> {c1:.4}, median max fitness {m0:.2} -> {m1:.2} ({:.0}s)",
        started.elapsed().as_secs_f64()
    ))
}

fn criterion_10(scratch: &Path) -> Outcome {
    let dir = scratch.join("c10");
    let mut cfg = base_config(&dir, 11, 30, 60);
    cfg.snapshot_interval = 10;
    run(&cfg);
    let mut replayed = 0;
    for (_, snap) in io::list_snapshots(&dir).unwrap() {
        let s = io::read_snapshot(&snap).unwrap();
        for (cell, p) in &s.entries {
            let r = cmd_replay(&snap, *cell, None).map_err(|e| e.to_string())?;
            ensure!(
                r.result.fitness.to_bits() == p.fitness.to_bits(),
                "cell {cell:?} in {}: stored {} replayed {}",
                snap.display(),
                p.fitness,
                r.result.fitness
            );
            let moved = r.trace.last().expect("trace has rows").root_x - r.trace[0].root_x;
            let expected = if moved.is_finite() { moved.clamp(0.0, 220.0) } else { 0.0 };
            ensure!(
                expected.to_bits() == p.fitness.to_bits(),
                "trace displacement disagrees with fitness in cell {cell:?}"
            );
            replayed += 1;
        }
    }
    Ok(format!("{replayed} stored pairs replayed bit-exactly"))
}

fn main() {
    let criteria: [(&str, Check); 10] = [
        ("determinism", criterion_1),
        ("elitism and coverage monotonicity", criterion_2),
        ("dynamic re-binning", criterion_3),
        ("insertion rules", criterion_4),
        ("difficulty oracle", criterion_5),
        ("decode totality", criterion_6),
        ("autoencoder convergence and gradients", criterion_7),
        ("mutation statistics", criterion_8),
        ("search progress", criterion_9),
        ("replay round-trip", criterion_10),
    ];
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let scratch = tempfile::tempdir().expect("temporary directory");
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(|| check(scratch.path())))
            .unwrap_or_else(|e| {
                Err(e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panicked".into()))
            });
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
