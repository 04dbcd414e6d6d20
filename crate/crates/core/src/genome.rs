//! 288-bit agent genomes and their decoding into creature trees.
//!
//! Bit layout (most significant bit first):
//!
//! | bits        | content                                               |
//! |-------------|-------------------------------------------------------|
//! | `0..48`     | four rectangle templates: width, height, angle (4 each) |
//! | `48..80`    | four circle templates: radius, angle (4 each)         |
//! | `80..176`   | eight controllers: amplitude, period, phase (4 each)  |
//! | `176..288`  | tree construction bits                                |
//!
//! Tree bits are scanned left to right against a stack of open connection
//! points. A `0` discards the top connection point. A `1` is followed by two
//! 3-bit numbers choosing a module template (0-3 rectangles, 4-7 circles)
//! and a controller; the new module is attached at the top connection point,
//! which is consumed, and a rectangle pushes its own three points.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const GENOME_BITS: usize = 288;
const GENOME_BYTES: usize = GENOME_BITS / 8;

const RECT_OFFSET: usize = 0;
const CIRCLE_OFFSET: usize = 48;
const CONTROLLER_OFFSET: usize = 80;
const TREE_OFFSET: usize = 176;

pub const MAX_MODULES: usize = 17;

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Genome {
    bytes: [u8; GENOME_BYTES],
}

impl Genome {
    pub fn zeros() -> Self {
        Self {
            bytes: [0; GENOME_BYTES],
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut bytes = [0; GENOME_BYTES];
        rng.fill(&mut bytes[..]);
        Self { bytes }
    }

    pub fn len(&self) -> usize {
        GENOME_BITS
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        (self.bytes[i / 8] >> (7 - i % 8)) & 1 == 1
    }

    pub fn set_bit(&mut self, i: usize, value: bool) {
        let mask = 1 << (7 - i % 8);
        if value {
            self.bytes[i / 8] |= mask;
        } else {
            self.bytes[i / 8] &= !mask;
        }
    }

    /// Reads `width` bits starting at `start` as an unsigned big-endian number.
    pub fn bits(&self, start: usize, width: usize) -> u32 {
        (start..start + width).fold(0, |acc, i| (acc << 1) | self.bit(i) as u32)
    }

    /// Flips each bit independently with probability `p`.
    pub fn mutate<R: Rng + ?Sized>(&self, rng: &mut R, p: f64) -> Genome {
        let mut child = *self;
        for i in 0..GENOME_BITS {
            if rng.random_bool(p) {
                child.set_bit(i, !child.bit(i));
            }
        }
        child
    }

    pub fn hamming(&self, other: &Genome) -> u32 {
        self.bytes
            .iter()
            .zip(&other.bytes)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    pub fn ones(&self) -> u32 {
        self.bytes.iter().map(|b| b.count_ones()).sum()
    }

    /// 72 lowercase hex digits.
    pub fn to_hex(&self) -> String {
        self.bytes.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.len() != GENOME_BYTES * 2 || !s.is_ascii() {
            return Err(Error::GenomeHex(format!(
                "expected {} hex digits, got {:?}",
                GENOME_BYTES * 2,
                s
            )));
        }
        let mut bytes = [0; GENOME_BYTES];
        for (i, byte) in bytes.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&s[2 * i..2 * i + 2], 16)
                .map_err(|e| Error::GenomeHex(format!("{s:?}: {e}")))?;
        }
        Ok(Self { bytes })
    }
}

impl fmt::Debug for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Genome({})", self.to_hex())
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for Genome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Genome::from_hex(s)
    }
}

impl Serialize for Genome {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Genome {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Genome::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Maps a 4-bit value linearly onto `[lo, hi]`.
pub fn field_from_bits(v: u32, (lo, hi): (f64, f64)) -> f64 {
    debug_assert!(v < 16);
    lo + (v as f64 / 15.0) * (hi - lo)
}

/// Value ranges for every decoded field.
#[derive(Clone, Debug, PartialEq)]
pub struct GenomeRanges {
    pub rect_size: (f64, f64),
    pub circle_radius: (f64, f64),
    pub attach_angle: (f64, f64),
    pub amplitude: (f64, f64),
    pub period: (f64, f64),
    pub phase: (f64, f64),
}

impl Default for GenomeRanges {
    fn default() -> Self {
        Self {
            rect_size: (0.25, 1.0),
            circle_radius: (0.15, 0.5),
            attach_angle: (-FRAC_PI_2, FRAC_PI_2),
            amplitude: (0.0, FRAC_PI_3),
            period: (10.0, 100.0),
            // sixteen evenly spaced phases covering [0, 2pi)
            phase: (0.0, 2.0 * PI * 15.0 / 16.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControllerSpec {
    /// Radians.
    pub amplitude: f64,
    /// Timesteps.
    pub period: f64,
    /// Radians.
    pub phase: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Shape {
    Rectangle { width: f64, height: f64 },
    Circle { radius: f64 },
}

impl Shape {
    pub fn is_circle(&self) -> bool {
        matches!(self, Shape::Circle { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModuleSpec {
    pub shape: Shape,
    /// Rotation relative to the outward direction of the parent's face.
    pub attach_angle: f64,
    pub controller: ControllerSpec,
}

/// Faces of a rectangle that accept children, in push order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Left,
    Top,
    Right,
}

impl Slot {
    pub const PUSH_ORDER: [Slot; 3] = [Slot::Left, Slot::Top, Slot::Right];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CreatureNode {
    pub module: ModuleSpec,
    /// Parent node index and the parent's face this module hangs from.
    pub parent: Option<(usize, Slot)>,
}

/// A creature tree stored in creation order; node 0 is the root rectangle.
#[derive(Clone, Debug, PartialEq)]
pub struct CreatureSpec {
    pub nodes: Vec<CreatureNode>,
}

impl CreatureSpec {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> &CreatureNode {
        &self.nodes[0]
    }

    pub fn children(&self, i: usize) -> impl Iterator<Item = (usize, Slot)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter_map(move |(j, n)| match n.parent {
                Some((p, slot)) if p == i => Some((j, slot)),
                _ => None,
            })
    }

    /// Checks root-rectangle, circle-leaf, fan-out and size invariants.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let Some(root) = self.nodes.first() else {
            return Err("no modules".into());
        };
        if root.module.shape.is_circle() || root.parent.is_some() {
            return Err("root must be a parentless rectangle".into());
        }
        if self.nodes.len() > MAX_MODULES {
            return Err(format!("{} modules exceeds {MAX_MODULES}", self.nodes.len()));
        }
        let mut used = std::collections::HashSet::new();
        for (i, node) in self.nodes.iter().enumerate().skip(1) {
            let Some((p, slot)) = node.parent else {
                return Err(format!("node {i} has no parent"));
            };
            if p >= i {
                return Err(format!("node {i} has parent {p} created after it"));
            }
            if self.nodes[p].module.shape.is_circle() {
                return Err(format!("circle node {p} has a child"));
            }
            if !used.insert((p, slot)) {
                return Err(format!("slot {slot:?} of node {p} used twice"));
            }
        }
        Ok(())
    }

    /// Same creature with every controller amplitude set to zero.
    pub fn motionless(&self) -> CreatureSpec {
        let mut c = self.clone();
        for n in &mut c.nodes {
            n.module.controller.amplitude = 0.0;
        }
        c
    }
}

struct Templates {
    modules: [(Shape, f64); 8],
    controllers: [ControllerSpec; 8],
}

fn templates(g: &Genome, r: &GenomeRanges) -> Templates {
    let rect = |k: usize| {
        let at = RECT_OFFSET + 12 * k;
        (
            Shape::Rectangle {
                width: field_from_bits(g.bits(at, 4), r.rect_size),
                height: field_from_bits(g.bits(at + 4, 4), r.rect_size),
            },
            field_from_bits(g.bits(at + 8, 4), r.attach_angle),
        )
    };
    let circle = |k: usize| {
        let at = CIRCLE_OFFSET + 8 * k;
        (
            Shape::Circle {
                radius: field_from_bits(g.bits(at, 4), r.circle_radius),
            },
            field_from_bits(g.bits(at + 4, 4), r.attach_angle),
        )
    };
    let controller = |k: usize| {
        let at = CONTROLLER_OFFSET + 12 * k;
        ControllerSpec {
            amplitude: field_from_bits(g.bits(at, 4), r.amplitude),
            period: field_from_bits(g.bits(at + 4, 4), r.period),
            phase: field_from_bits(g.bits(at + 8, 4), r.phase),
        }
    };
    Templates {
        modules: [
            rect(0),
            rect(1),
            rect(2),
            rect(3),
            circle(0),
            circle(1),
            circle(2),
            circle(3),
        ],
        controllers: std::array::from_fn(controller),
    }
}

/// Decodes with the default field ranges.
pub fn decode(g: &Genome) -> CreatureSpec {
    decode_with(g, &GenomeRanges::default())
}

/// Total: every genome yields a creature satisfying
/// [`CreatureSpec::check_invariants`].
pub fn decode_with(g: &Genome, ranges: &GenomeRanges) -> CreatureSpec {
    let t = templates(g, ranges);
    let instantiate = |m: usize, c: usize| {
        let (shape, attach_angle) = t.modules[m];
        ModuleSpec {
            shape,
            attach_angle,
            controller: t.controllers[c],
        }
    };

    let mut nodes = vec![CreatureNode {
        module: instantiate(0, 0),
        parent: None,
    }];
    let mut open: Vec<(usize, Slot)> = Slot::PUSH_ORDER.iter().map(|&s| (0, s)).collect();
    let mut i = TREE_OFFSET;
    while i < GENOME_BITS && !open.is_empty() {
        if !g.bit(i) {
            open.pop();
            i += 1;
            continue;
        }
        i += 1;
        if i + 6 > GENOME_BITS {
            break;
        }
        let module = g.bits(i, 3) as usize;
        let controller = g.bits(i + 3, 3) as usize;
        i += 6;
        let attach = open.pop().expect("checked non-empty");
        let index = nodes.len();
        let spec = instantiate(module, controller);
        nodes.push(CreatureNode {
            module: spec,
            parent: Some(attach),
        });
        if !spec.shape.is_circle() {
            open.extend(Slot::PUSH_ORDER.iter().map(|&s| (index, s)));
        }
    }
    CreatureSpec { nodes }
}
