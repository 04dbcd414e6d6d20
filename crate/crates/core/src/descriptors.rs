//! Behaviour descriptors and their binning into grid cells.

use serde::{Deserialize, Serialize};

use crate::autoencoder::Mlp;
use crate::cppn::Cppn;
use crate::error::{Error, Result};
use crate::terrain::Terrain;

pub const STEEPNESS_SCALE: f64 = 50.0;
pub const NOVELTY_SCALE: f64 = 5.0;
/// Node count of the flat base CPPN; dynamic rows start here.
pub const MIN_NODE_COUNT: f64 = 3.0;

/// Two already-scaled descriptor values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    pub d1: f64,
    pub d2: f64,
}

impl Descriptor {
    pub fn new(d1: f64, d2: f64) -> Self {
        Self { d1, d2 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellIndex {
    pub row: usize,
    pub col: usize,
}

impl CellIndex {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }
}

/// How a descriptor maps onto a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinMode {
    /// Unit-width bins of (max height, scaled steepness).
    Static,
    /// Node count offset by 3, unit-width bins of scaled novelty.
    Dynamic,
    /// Quarter-unit bins of the static descriptor.
    Reference,
}

/// Maximum height and 50 x mean absolute unit-to-unit slope. The step from
/// the startpad onto the first unit is not counted.
pub fn static_descriptor(t: &Terrain) -> Descriptor {
    let h = t.heights();
    let max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let steep = h.windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>() / (h.len() - 1) as f64;
    Descriptor::new(max, STEEPNESS_SCALE * steep)
}

/// CPPN node count and 5 x autoencoder reconstruction error.
pub fn dynamic_descriptor(c: &Cppn, t: &Terrain, ae: &Mlp) -> Descriptor {
    Descriptor::new(c.node_count() as f64, NOVELTY_SCALE * ae.reconstruction_error(t))
}

fn unit_bin(v: f64, cells: usize) -> usize {
    // float-to-int casts saturate, so huge values land in the top cell
    (v.floor().max(0.0) as usize).min(cells - 1)
}

pub fn bin(d: &Descriptor, cells: usize, mode: BinMode) -> Result<CellIndex> {
    if !d.d1.is_finite() || !d.d2.is_finite() {
        return Err(Error::NonFiniteDescriptor(d.d1, d.d2));
    }
    assert!(cells > 0, "grid must have at least one cell per side");
    Ok(match mode {
        BinMode::Static => CellIndex::new(unit_bin(d.d1, cells), unit_bin(d.d2, cells)),
        BinMode::Dynamic => CellIndex::new(unit_bin(d.d1 - MIN_NODE_COUNT, cells), unit_bin(d.d2, cells)),
        BinMode::Reference => CellIndex::new(unit_bin(4.0 * d.d1, cells), unit_bin(4.0 * d.d2, cells)),
    })
}
