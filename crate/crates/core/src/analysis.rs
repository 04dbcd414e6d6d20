//! Recorders that watch every evaluated pair, and the hill-based terrain
//! difficulty estimate.

use std::collections::BTreeMap;

use crate::archive::Pair;
use crate::descriptors::{bin, static_descriptor, BinMode, CellIndex};
use crate::genome::Genome;
use crate::terrain::{within_distance, Terrain};

/// High-resolution grid over the static descriptors that keeps the fittest
/// pair ever seen per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceMap {
    size: usize,
    cells: Vec<Option<Pair>>,
}

impl ReferenceMap {
    pub fn new(size: usize) -> Self {
        Self {
            size,
            cells: vec![None; size * size],
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Records `p` if its cell is empty or it beats the stored fitness.
    pub fn update(&mut self, p: &Pair) -> bool {
        let d = static_descriptor(&p.terrain);
        let Ok(cell) = bin(&d, self.size, BinMode::Reference) else {
            return false;
        };
        let slot = &mut self.cells[cell.row * self.size + cell.col];
        if slot.as_ref().is_some_and(|q| q.fitness >= p.fitness) {
            return false;
        }
        *slot = Some(p.clone());
        true
    }

    pub fn get(&self, cell: CellIndex) -> Option<&Pair> {
        self.cells
            .get(cell.row * self.size + cell.col)
            .and_then(Option::as_ref)
    }

    pub fn iter(&self) -> impl Iterator<Item = (CellIndex, &Pair)> + '_ {
        self.cells.iter().enumerate().filter_map(|(i, c)| {
            c.as_ref()
                .map(|p| (CellIndex::new(i / self.size, i % self.size), p))
        })
    }

    pub fn occupancy(&self) -> usize {
        self.cells.iter().flatten().count()
    }

    /// Per-cell fitness, `None` for empty cells, row-major.
    pub fn fitness_grid(&self) -> Vec<Option<f64>> {
        self.cells
            .iter()
            .map(|c| c.as_ref().map(|p| p.fitness))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArchivedEnvironment {
    pub terrain: Terrain,
    pub genome: Genome,
    pub fitness: f64,
    height_sum: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordOutcome {
    Recorded,
    TooSimilar,
    NotSolved,
}

/// A list of mutually dissimilar terrains: every stored pair of terrains is
/// at least `radius` apart in summed absolute height difference.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvironmentArchive {
    radius: f64,
    /// Pairs must score strictly above this to be recorded.
    min_fitness: Option<f64>,
    entries: Vec<ArchivedEnvironment>,
}

pub type FoundArchive = EnvironmentArchive;
pub type SolvedArchive = EnvironmentArchive;

impl EnvironmentArchive {
    pub fn new(radius: f64, min_fitness: Option<f64>) -> Self {
        Self {
            radius,
            min_fitness,
            entries: Vec::new(),
        }
    }

    pub fn found(radius: f64) -> FoundArchive {
        Self::new(radius, None)
    }

    pub fn solved(radius: f64, threshold: f64) -> SolvedArchive {
        Self::new(radius, Some(threshold))
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn entries(&self) -> &[ArchivedEnvironment] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_novel(&self, terrain: &Terrain) -> bool {
        let sum: f64 = terrain.heights().iter().sum();
        // |sum(a) - sum(b)| is a lower bound on the L1 distance
        !self.entries.iter().any(|e| {
            (e.height_sum - sum).abs() < self.radius && within_distance(&e.terrain, terrain, self.radius)
        })
    }

    pub fn record(&mut self, p: &Pair) -> RecordOutcome {
        if self.min_fitness.is_some_and(|m| p.fitness <= m) {
            return RecordOutcome::NotSolved;
        }
        if !self.is_novel(&p.terrain) {
            return RecordOutcome::TooSimilar;
        }
        self.entries.push(ArchivedEnvironment {
            terrain: p.terrain.clone(),
            genome: p.genome,
            fitness: p.fitness,
            height_sum: p.terrain.heights().iter().sum(),
        });
        RecordOutcome::Recorded
    }

    pub(crate) fn push_raw(&mut self, terrain: Terrain, genome: Genome, fitness: f64) {
        let height_sum = terrain.heights().iter().sum();
        self.entries.push(ArchivedEnvironment {
            terrain,
            genome,
            fitness,
            height_sum,
        });
    }
}

/// Reference map plus found and solved environment lists.
#[derive(Clone, Debug, PartialEq)]
pub struct Recorders {
    pub reference: ReferenceMap,
    pub found: FoundArchive,
    pub solved: SolvedArchive,
}

impl Recorders {
    pub fn new(reference_size: usize, found_radius: f64, solved_radius: f64, solved_threshold: f64) -> Self {
        Self {
            reference: ReferenceMap::new(reference_size),
            found: EnvironmentArchive::found(found_radius),
            solved: EnvironmentArchive::solved(solved_radius, solved_threshold),
        }
    }

    pub fn observe(&mut self, p: &Pair) {
        self.reference.update(p);
        self.found.record(p);
        self.solved.record(p);
    }
}

/// Hill value by length bucket (1-3, 4-8, >8) and steepness category
/// (<-2.4, <-0.24, <-0.024, flat, >0.024, >0.24, >2.4).
pub const HILL_VALUES: [[i32; 7]; 3] = [
    [-3, -2, -1, 0, 2, 4, 6],
    [-4, -3, -2, 0, 4, 6, 8],
    [-5, -4, -3, 0, 6, 8, 10],
];

/// Steepness category index into the columns of [`HILL_VALUES`]. The flat
/// band `[-0.024, 0.024]` is closed; the other bands are closed on the side
/// nearer zero, which keeps `category(-x) == 6 - category(x)`.
pub fn steepness_category(x: f64) -> usize {
    if x < -2.4 {
        0
    } else if x < -0.24 {
        1
    } else if x < -0.024 {
        2
    } else if x <= 0.024 {
        3
    } else if x <= 0.24 {
        4
    } else if x <= 2.4 {
        5
    } else {
        6
    }
}

pub fn length_bucket(len: usize) -> usize {
    match len {
        0..=3 => 0,
        4..=8 => 1,
        _ => 2,
    }
}

/// Maximal runs of equal steepness category as `(category, length)`.
pub fn hills(t: &Terrain) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for w in t.heights().windows(2) {
        let c = steepness_category(w[1] - w[0]);
        match out.last_mut() {
            Some((last, len)) if *last == c => *len += 1,
            _ => out.push((c, 1)),
        }
    }
    out
}

/// Sum of hill values over all hills of the terrain.
pub fn difficulty(t: &Terrain) -> i32 {
    hills(t)
        .into_iter()
        .map(|(c, len)| HILL_VALUES[length_bucket(len)][c])
        .sum()
}

/// Counts of values grouped into bins `[k*w, (k+1)*w)`, keyed by the bin's
/// lower edge.
pub fn histogram(values: impl IntoIterator<Item = i32>, bin_width: i32) -> BTreeMap<i32, usize> {
    assert!(bin_width > 0);
    let mut h = BTreeMap::new();
    for v in values {
        *h.entry(v.div_euclid(bin_width) * bin_width).or_insert(0) += 1;
    }
    h
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunStats {
    /// Occupied fraction of the reference map.
    pub coverage: f64,
    /// Mean fitness of the pairs present in the reference map.
    pub mean_fitness: f64,
    /// Sum of reference-map fitness divided by the number of cells.
    pub average_map_fitness: f64,
    pub found_count: usize,
    pub solved_count: usize,
    pub found_difficulty: BTreeMap<i32, usize>,
    pub solved_difficulty: BTreeMap<i32, usize>,
}

pub fn summarize(r: &ReferenceMap, f: &FoundArchive, s: &SolvedArchive) -> RunStats {
    let cells = (r.size() * r.size()) as f64;
    let n = r.occupancy();
    let total: f64 = r.iter().map(|(_, p)| p.fitness).sum();
    let diff = |a: &EnvironmentArchive| histogram(a.entries().iter().map(|e| difficulty(&e.terrain)), 1);
    RunStats {
        coverage: n as f64 / cells,
        mean_fitness: if n > 0 { total / n as f64 } else { 0.0 },
        average_map_fitness: total / cells,
        found_count: f.len(),
        solved_count: s.len(),
        found_difficulty: diff(f),
        solved_difficulty: diff(s),
    }
}
