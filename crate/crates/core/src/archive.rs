//! The elitist (terrain, agent) grid.

use rand::Rng;

use crate::config::Mode;
use crate::cppn::{Cppn, CppnMutation};
use crate::descriptors::{bin, BinMode, CellIndex, Descriptor};
use crate::error::{Error, Result};
use crate::genome::{decode, Genome};
use crate::physics::{evaluate, SimConfig};
use crate::terrain::{generate_terrain, Terrain};

/// One environment, one agent, and the agent's score on it.
#[derive(Clone, Debug, PartialEq)]
pub struct Pair {
    pub genome: Genome,
    pub cppn: Cppn,
    /// Always `generate_terrain(&cppn)`.
    pub terrain: Terrain,
    pub fitness: f64,
    pub descriptor: Descriptor,
}

/// An unevaluated offspring.
#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub genome: Genome,
    pub cppn: Cppn,
    pub terrain: Terrain,
    pub env_mutated: bool,
}

impl Candidate {
    pub fn new(genome: Genome, cppn: Cppn) -> Self {
        let terrain = generate_terrain(&cppn);
        Self {
            genome,
            cppn,
            terrain,
            env_mutated: false,
        }
    }

    pub fn fitness(&self, sim: &SimConfig) -> f64 {
        evaluate(&decode(&self.genome), &self.terrain, sim).fitness
    }

    pub fn into_pair(self, fitness: f64, descriptor: Descriptor) -> Pair {
        Pair {
            genome: self.genome,
            cppn: self.cppn,
            terrain: self.terrain,
            fitness,
            descriptor,
        }
    }
}

/// A fresh random agent on a single mutation of the flat terrain.
pub fn random_candidate<R: Rng + ?Sized>(rng: &mut R, cppn: &CppnMutation) -> Candidate {
    let env = Cppn::flat().mutate(rng, cppn);
    let genome = Genome::random(rng);
    Candidate::new(genome, env)
}

/// Always flips agent bits; mutates the environment with probability
/// `env_prob`.
pub fn mutate_pair<R: Rng + ?Sized>(
    p: &Pair,
    rng: &mut R,
    bit_flip: f64,
    env_prob: f64,
    cppn: &CppnMutation,
) -> Candidate {
    let genome = p.genome.mutate(rng, bit_flip);
    if rng.random_bool(env_prob) {
        let mut c = Candidate::new(genome, p.cppn.mutate(rng, cppn));
        c.env_mutated = true;
        c
    } else {
        Candidate {
            genome,
            cppn: p.cppn.clone(),
            terrain: p.terrain.clone(),
            env_mutated: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InsertOutcome {
    InsertedEmpty,
    Replaced,
    RejectedThreshold,
    RejectedWorse,
}

impl InsertOutcome {
    pub fn stored(self) -> bool {
        matches!(self, InsertOutcome::InsertedEmpty | InsertOutcome::Replaced)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Archive {
    cells: Vec<Option<Pair>>,
    size: usize,
    mode: Mode,
    pub iteration: u64,
}

impl Archive {
    pub fn new(size: usize, mode: Mode) -> Self {
        Self {
            cells: vec![None; size * size],
            size,
            mode,
            iteration: 0,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    fn bin_mode(&self) -> BinMode {
        match self.mode {
            Mode::Static => BinMode::Static,
            Mode::Dynamic => BinMode::Dynamic,
        }
    }

    pub fn cell_of(&self, d: &Descriptor) -> Result<CellIndex> {
        bin(d, self.size, self.bin_mode())
    }

    fn slot(&self, cell: CellIndex) -> usize {
        cell.row * self.size + cell.col
    }

    pub fn get(&self, cell: CellIndex) -> Option<&Pair> {
        self.cells.get(self.slot(cell)).and_then(Option::as_ref)
    }

    /// Occupied cells in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (CellIndex, &Pair)> + '_ {
        self.cells.iter().enumerate().filter_map(|(i, c)| {
            c.as_ref()
                .map(|p| (CellIndex::new(i / self.size, i % self.size), p))
        })
    }

    pub fn occupancy(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn coverage(&self) -> f64 {
        self.occupancy() as f64 / self.cells.len() as f64
    }

    pub fn max_fitness(&self) -> Option<f64> {
        self.iter().map(|(_, p)| p.fitness).reduce(f64::max)
    }

    pub fn mean_fitness(&self) -> Option<f64> {
        let n = self.occupancy();
        (n > 0).then(|| self.iter().map(|(_, p)| p.fitness).sum::<f64>() / n as f64)
    }

    /// Keeps the fitter pair without any threshold (bootstrap placement).
    pub fn place(&mut self, pair: Pair) -> Result<InsertOutcome> {
        self.insert_with(pair, f64::NEG_INFINITY)
    }

    /// Empty cell: stored iff fitness exceeds `threshold`. Occupied cell:
    /// replaced iff strictly fitter than the incumbent.
    pub fn try_insert(&mut self, pair: Pair, threshold: f64) -> Result<InsertOutcome> {
        self.insert_with(pair, threshold)
    }

    fn insert_with(&mut self, pair: Pair, threshold: f64) -> Result<InsertOutcome> {
        let cell = self.cell_of(&pair.descriptor)?;
        let slot = self.slot(cell);
        let outcome = match &self.cells[slot] {
            None if pair.fitness > threshold => InsertOutcome::InsertedEmpty,
            None => InsertOutcome::RejectedThreshold,
            Some(inc) if pair.fitness > inc.fitness => InsertOutcome::Replaced,
            Some(_) => InsertOutcome::RejectedWorse,
        };
        if outcome.stored() {
            self.cells[slot] = Some(pair);
        }
        Ok(outcome)
    }

    /// `n` uniform draws with replacement over occupied cells.
    pub fn select_batch<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<Pair>> {
        let occupied: Vec<&Pair> = self.iter().map(|(_, p)| p).collect();
        if occupied.is_empty() {
            return Err(Error::EmptyArchive);
        }
        Ok((0..n)
            .map(|_| occupied[rng.random_range(0..occupied.len())].clone())
            .collect())
    }

    /// Recomputes every stored descriptor and re-places the pairs into a
    /// fresh grid, keeping the fitter pair on collisions (the earlier pair in
    /// row-major order wins ties).
    pub fn rebin(&self, mut descriptor: impl FnMut(&Pair) -> Descriptor) -> Result<Archive> {
        let mut fresh = Archive::new(self.size, self.mode);
        fresh.iteration = self.iteration;
        for (_, p) in self.iter() {
            let mut moved = p.clone();
            moved.descriptor = descriptor(p);
            fresh.place(moved)?;
        }
        Ok(fresh)
    }
}
