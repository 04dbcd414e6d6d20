//! Course heightmaps.

use serde::{Deserialize, Serialize};

use crate::cppn::Cppn;
use crate::error::{Error, Result};

/// Number of height samples after the startpad.
pub const TERRAIN_UNITS: usize = 200;
/// Flat section the creature starts on.
pub const STARTPAD_LENGTH: f64 = 20.0;
pub const COURSE_LENGTH: f64 = 220.0;
pub const MAX_HEIGHT: f64 = 25.0;
/// Raw CPPN output is multiplied by this before clamping.
pub const HEIGHT_SCALE: f64 = 5.0;

/// 200 heights, one per unit after the startpad, each in `[0, 25]`.
///
/// Serializes as a plain JSON array of numbers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Terrain {
    heights: Vec<f64>,
}

impl Terrain {
    pub fn new(heights: Vec<f64>) -> Result<Self> {
        if heights.len() != TERRAIN_UNITS {
            return Err(Error::TerrainLength {
                expected: TERRAIN_UNITS,
                got: heights.len(),
            });
        }
        Ok(Self {
            heights: heights
                .into_iter()
                .map(|h| if h.is_nan() { 0.0 } else { h.clamp(0.0, MAX_HEIGHT) })
                .collect(),
        })
    }

    pub fn flat(height: f64) -> Self {
        Self::new(vec![height; TERRAIN_UNITS]).unwrap()
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }
}

impl TryFrom<Vec<f64>> for Terrain {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Terrain::new(v)
    }
}

impl From<Terrain> for Vec<f64> {
    fn from(t: Terrain) -> Self {
        t.heights
    }
}

/// Samples the CPPN at 200 evenly spaced positions in `[0, 1]`.
pub fn generate_terrain(cppn: &Cppn) -> Terrain {
    let net = cppn.compile();
    let last = (TERRAIN_UNITS - 1) as f64;
    let heights = (0..TERRAIN_UNITS)
        .map(|i| HEIGHT_SCALE * net.eval(i as f64 / last))
        .collect();
    Terrain::new(heights).expect("length is fixed")
}

/// Sum of per-unit absolute height differences.
pub fn terrain_distance(a: &Terrain, b: &Terrain) -> f64 {
    a.heights
        .iter()
        .zip(&b.heights)
        .map(|(x, y)| (x - y).abs())
        .sum()
}

/// True when `terrain_distance(a, b) < radius`, stopping early once the
/// partial sum reaches the radius.
pub fn within_distance(a: &Terrain, b: &Terrain, radius: f64) -> bool {
    let mut sum = 0.0;
    for (x, y) in a.heights.iter().zip(&b.heights) {
        sum += (x - y).abs();
        if sum >= radius {
            return false;
        }
    }
    true
}
