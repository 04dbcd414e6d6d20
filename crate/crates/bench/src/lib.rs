//! Shared fixtures for the benchmarks.

use envmap_core::cppn::{Cppn, CppnMutation};
use envmap_core::genome::Genome;
use envmap_core::rng::{stream, SimRng, Stream};
use envmap_core::terrain::{generate_terrain, Terrain};

pub fn rng(seed: u64) -> SimRng {
    stream(seed, Stream::Bootstrap, 0, 0)
}

/// A CPPN after `steps` successive mutations of the flat base.
pub fn evolved_cppn(seed: u64, steps: usize) -> Cppn {
    let params = CppnMutation::default();
    let mut r = rng(seed);
    (0..steps).fold(Cppn::flat(), |c, _| c.mutate(&mut r, &params))
}

/// Random genomes paired with moderately evolved terrains.
pub fn pairs(n: u64) -> Vec<(Genome, Terrain)> {
    (0..n)
        .map(|i| {
            let g = Genome::random(&mut rng(1000 + i));
            (g, generate_terrain(&evolved_cppn(i, 4)))
        })
        .collect()
}
