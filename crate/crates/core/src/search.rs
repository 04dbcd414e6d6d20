//! The environment-agent MAP-Elites loop.
//!
//! Each iteration draws a batch from the archive as it stood at the start of
//! the iteration, mutates and evaluates every offspring on the worker pool,
//! then feeds the results to the recorders and the archive one by one in
//! batch order. Every random draw comes from a stream keyed by the master
//! seed, the iteration and the batch index, so the outcome does not depend
//! on the number of workers.

use std::time::Instant;

use rayon::prelude::*;

use crate::analysis::Recorders;
use crate::archive::{mutate_pair, random_candidate, Archive, Candidate, InsertOutcome, Pair};
use crate::autoencoder::Mlp;
use crate::config::{Mode, RunConfig};
use crate::descriptors::{dynamic_descriptor, static_descriptor, Descriptor};
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

#[derive(Clone, Debug, PartialEq)]
pub struct IterationStats {
    /// 0 is the bootstrap.
    pub iteration: u64,
    pub evaluations: usize,
    pub occupancy: usize,
    pub coverage: f64,
    pub mean_fitness: f64,
    pub max_fitness: f64,
    pub inserted: usize,
    pub replaced: usize,
    /// Occupancy just before re-binning, on retrain iterations.
    pub occupancy_before_rebin: Option<usize>,
}

pub struct IterationReport<'a> {
    pub stats: &'a IterationStats,
    pub archive: &'a Archive,
    /// The archive after insertions but before re-binning, on retrain
    /// iterations.
    pub before_rebin: Option<&'a Archive>,
    pub recorders: &'a Recorders,
    pub autoencoder: Option<&'a Mlp>,
}

/// Hooks called from the orchestration thread.
pub trait RunObserver {
    fn on_iteration(&mut self, _report: &IterationReport<'_>) -> Result<()> {
        Ok(())
    }

    fn on_finish(&mut self, _result: &RunResult) -> Result<()> {
        Ok(())
    }
}

impl RunObserver for () {}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub archive: Archive,
    pub bootstrap: Archive,
    pub recorders: Recorders,
    pub autoencoder: Option<Mlp>,
    pub log: Vec<IterationStats>,
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))
}

fn descriptor_for(mode: Mode, ae: Option<&Mlp>, c: &Candidate) -> Descriptor {
    match (mode, ae) {
        (Mode::Dynamic, Some(ae)) => dynamic_descriptor(&c.cppn, &c.terrain, ae),
        _ => static_descriptor(&c.terrain),
    }
}

/// Evaluates candidates concurrently, returning pairs in input order.
fn assess(
    pool: &rayon::ThreadPool,
    candidates: Vec<Candidate>,
    cfg: &RunConfig,
    ae: Option<&Mlp>,
) -> Vec<Pair> {
    pool.install(|| {
        candidates
            .into_par_iter()
            .map(|c| {
                let fitness = c.fitness(&cfg.sim);
                let d = descriptor_for(cfg.mode, ae, &c);
                c.into_pair(fitness, d)
            })
            .collect()
    })
}

/// The initial random pairs: each a fresh agent on a single mutation of the
/// flat terrain.
pub fn bootstrap_candidates(cfg: &RunConfig) -> Vec<Candidate> {
    (0..cfg.bootstrap_size as u64)
        .map(|i| random_candidate(&mut stream(cfg.seed, Stream::Bootstrap, 0, i), &cfg.cppn))
        .collect()
}

/// Evaluates and places the bootstrap pairs; no fitness threshold applies.
/// Returns the archive and the evaluated pairs in creation order.
pub fn bootstrap(cfg: &RunConfig, ae: Option<&Mlp>) -> Result<(Archive, Vec<Pair>)> {
    let pool = pool(cfg.workers)?;
    bootstrap_with(&pool, bootstrap_candidates(cfg), cfg, ae)
}

fn bootstrap_with(
    pool: &rayon::ThreadPool,
    candidates: Vec<Candidate>,
    cfg: &RunConfig,
    ae: Option<&Mlp>,
) -> Result<(Archive, Vec<Pair>)> {
    let pairs = assess(pool, candidates, cfg, ae);
    let mut archive = Archive::new(cfg.grid_size, cfg.mode);
    for p in &pairs {
        archive.place(p.clone())?;
    }
    Ok((archive, pairs))
}

fn stats(iteration: u64, evaluations: usize, archive: &Archive) -> IterationStats {
    IterationStats {
        iteration,
        evaluations,
        occupancy: archive.occupancy(),
        coverage: archive.coverage(),
        mean_fitness: archive.mean_fitness().unwrap_or(0.0),
        max_fitness: archive.max_fitness().unwrap_or(0.0),
        inserted: 0,
        replaced: 0,
        occupancy_before_rebin: None,
    }
}

pub fn run(cfg: &RunConfig, observer: &mut dyn RunObserver) -> Result<RunResult> {
    cfg.validate()?;
    let started = Instant::now();
    let pool = pool(cfg.workers)?;
    let mut recorders = Recorders::new(
        cfg.reference_grid_size,
        cfg.found_radius,
        cfg.solved_radius,
        cfg.solved_threshold,
    );

    let candidates = bootstrap_candidates(cfg);
    let mut ae = match cfg.mode {
        Mode::Static => None,
        Mode::Dynamic => {
            let mut net = Mlp::new(&mut stream(cfg.seed, Stream::AutoencoderInit, 0, 0));
            let terrains: Vec<_> = candidates.iter().map(|c| c.terrain.clone()).collect();
            net.train(
                &terrains,
                &cfg.autoencoder,
                &mut stream(cfg.seed, Stream::AutoencoderTrain, 0, 0),
            )?;
            Some(net)
        }
    };

    let (mut archive, pairs) = bootstrap_with(&pool, candidates, cfg, ae.as_ref())?;
    for p in &pairs {
        recorders.observe(p);
    }
    let bootstrap_archive = archive.clone();
    let mut log = vec![stats(0, pairs.len(), &archive)];
    observer.on_iteration(&IterationReport {
        stats: &log[0],
        archive: &archive,
        before_rebin: None,
        recorders: &recorders,
        autoencoder: ae.as_ref(),
    })?;

    let mut iteration = 0u64;
    loop {
        if cfg.iterations.is_some_and(|n| iteration >= n) {
            break;
        }
        if cfg
            .wall_clock_secs
            .is_some_and(|s| started.elapsed().as_secs_f64() >= s)
        {
            break;
        }
        iteration += 1;

        let parents = archive.select_batch(
            cfg.batch_size,
            &mut stream(cfg.seed, Stream::Select, iteration, 0),
        )?;
        let offspring = pool.install(|| {
            parents
                .par_iter()
                .enumerate()
                .map(|(i, p)| {
                    let mut rng = stream(cfg.seed, Stream::Offspring, iteration, i as u64);
                    mutate_pair(p, &mut rng, cfg.bit_flip_prob, cfg.env_mutation_prob, &cfg.cppn)
                })
                .collect::<Vec<_>>()
        });
        let evaluated = assess(&pool, offspring, cfg, ae.as_ref());

        let (mut inserted, mut replaced) = (0, 0);
        for p in evaluated.iter() {
            recorders.observe(p);
            match archive.try_insert(p.clone(), cfg.insert_threshold)? {
                InsertOutcome::InsertedEmpty => inserted += 1,
                InsertOutcome::Replaced => replaced += 1,
                _ => {}
            }
        }
        archive.iteration = iteration;

        let mut before_rebin = None;
        if cfg.mode == Mode::Dynamic && iteration.is_multiple_of(cfg.retrain_interval) {
            let net = ae.as_mut().expect("dynamic mode has an autoencoder");
            let terrains: Vec<_> = archive.iter().map(|(_, p)| p.terrain.clone()).collect();
            net.train(
                &terrains,
                &cfg.autoencoder,
                &mut stream(cfg.seed, Stream::AutoencoderTrain, iteration, 0),
            )?;
            let net = &*net;
            let rebinned = pool.install(|| {
                let fresh: Vec<Descriptor> = archive
                    .iter()
                    .collect::<Vec<_>>()
                    .par_iter()
                    .map(|(_, p)| dynamic_descriptor(&p.cppn, &p.terrain, net))
                    .collect();
                let mut next = fresh.into_iter();
                archive.rebin(|_| next.next().expect("one descriptor per stored pair"))
            })?;
            before_rebin = Some(std::mem::replace(&mut archive, rebinned));
        }

        let mut s = stats(iteration, evaluated.len(), &archive);
        s.inserted = inserted;
        s.replaced = replaced;
        s.occupancy_before_rebin = before_rebin.as_ref().map(Archive::occupancy);
        log.push(s);
        observer.on_iteration(&IterationReport {
            stats: log.last().unwrap(),
            archive: &archive,
            before_rebin: before_rebin.as_ref(),
            recorders: &recorders,
            autoencoder: ae.as_ref(),
        })?;
    }

    let result = RunResult {
        archive,
        bootstrap: bootstrap_archive,
        recorders,
        autoencoder: ae,
        log,
    };
    observer.on_finish(&result)?;
    Ok(result)
}
