//! Co-evolution of terrains and modular 2D creatures in a MAP-Elites grid.
//!
//! Terrains are produced by small CPPN graphs evaluated along the course,
//! creatures are decoded from fixed 288-bit genomes, and a deterministic
//! impulse-based simulator scores each (terrain, creature) pair. The search
//! keeps one elite pair per cell of a 25x25 grid whose axes are either
//! handcrafted terrain features (static mode) or CPPN size and autoencoder
//! reconstruction error (dynamic mode).

pub mod analysis;
pub mod archive;
pub mod autoencoder;
pub mod config;
pub mod cppn;
pub mod descriptors;
pub mod error;
pub mod genome;
pub mod io;
pub mod physics;
pub mod rng;
pub mod search;
pub mod terrain;

pub use analysis::{difficulty, FoundArchive, Recorders, ReferenceMap, RunStats, SolvedArchive};
pub use archive::{Archive, InsertOutcome, Pair};
pub use autoencoder::Mlp;
pub use config::{Mode, RunConfig};
pub use cppn::Cppn;
pub use descriptors::{CellIndex, Descriptor};
pub use error::{Error, Result};
pub use genome::{CreatureSpec, Genome};
pub use physics::{evaluate, EvalResult, SimConfig};
pub use search::{run, RunObserver, RunResult};
pub use terrain::{generate_terrain, terrain_distance, Terrain};
