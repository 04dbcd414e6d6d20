use std::collections::BTreeMap;

use envmap_core::config::{Mode, RunConfig};
use envmap_core::descriptors::CellIndex;
use envmap_core::search::{run, IterationReport, RunObserver};
use envmap_core::Result;

fn config(mode: Mode, iterations: u64, workers: usize) -> RunConfig {
    RunConfig {
        mode,
        seed: 4,
        iterations: Some(iterations),
        wall_clock_secs: None,
        bootstrap_size: 60,
        batch_size: 30,
        workers,
        ..RunConfig::default()
    }
}

#[test]
fn serial_and_parallel_runs_agree() {
    let a = run(&config(Mode::Static, 6, 1), &mut ()).unwrap();
    let b = run(&config(Mode::Static, 6, 3), &mut ()).unwrap();
    assert_eq!(a.archive, b.archive);
    assert_eq!(a.recorders, b.recorders);
    assert_eq!(a.log, b.log);
}

#[test]
fn zero_iterations_is_the_bootstrap() {
    let r = run(&config(Mode::Static, 0, 1), &mut ()).unwrap();
    assert_eq!(r.archive, r.bootstrap);
    assert_eq!(r.log.len(), 1);
    assert!(r.archive.occupancy() >= 1 && r.archive.occupancy() <= 60);
    assert!(r.autoencoder.is_none());
}

#[test]
fn invalid_config_fails_before_work() {
    let mut cfg = config(Mode::Dynamic, 3, 1);
    cfg.retrain_interval = 0;
    assert!(run(&cfg, &mut ()).is_err());
}

#[derive(Default)]
struct Watch {
    grids: Vec<BTreeMap<CellIndex, f64>>,
    before_rebin: Vec<Option<BTreeMap<CellIndex, f64>>>,
}

fn grid(a: &envmap_core::Archive) -> BTreeMap<CellIndex, f64> {
    a.iter().map(|(c, p)| (c, p.fitness)).collect()
}

impl RunObserver for Watch {
    fn on_iteration(&mut self, r: &IterationReport<'_>) -> Result<()> {
        self.grids.push(grid(r.archive));
        self.before_rebin.push(r.before_rebin.map(grid));
        Ok(())
    }
}

fn elitist(prev: &BTreeMap<CellIndex, f64>, next: &BTreeMap<CellIndex, f64>) -> bool {
    prev.iter().all(|(c, f)| next.get(c).is_some_and(|g| g >= f))
}

#[test]
fn static_runs_are_elitist_every_iteration() {
    let mut w = Watch::default();
    let r = run(&config(Mode::Static, 8, 1), &mut w).unwrap();
    assert_eq!(w.grids.len(), 9);
    for pair in w.grids.windows(2) {
        assert!(elitist(&pair[0], &pair[1]));
    }
    // low-fitness pairs can only live in cells first filled at bootstrap
    for (c, p) in r.archive.iter() {
        assert!(p.fitness > 100.0 || r.bootstrap.get(c).is_some());
    }
}

#[test]
fn dynamic_rebin_never_adds_cells() {
    let mut cfg = config(Mode::Dynamic, 6, 1);
    cfg.retrain_interval = 3;
    cfg.autoencoder.epochs = 5;
    let mut w = Watch::default();
    let r = run(&cfg, &mut w).unwrap();
    assert!(r.autoencoder.is_some());
    let mut retrains = 0;
    for i in 1..w.grids.len() {
        match &w.before_rebin[i] {
            Some(before) => {
                retrains += 1;
                assert!(elitist(&w.grids[i - 1], before));
                assert!(w.grids[i].len() <= before.len());
            }
            None => assert!(elitist(&w.grids[i - 1], &w.grids[i])),
        }
    }
    assert_eq!(retrains, 2);
}
