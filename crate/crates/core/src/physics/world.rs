//! Sequential-impulse rigid-body solver for boxes and circles on a static
//! polyline, with motorized revolute joints.

use std::f64::consts::{FRAC_PI_2, PI};

use super::math::{closest_on_segment, Rot, Vec2};
use super::SimConfig;
use crate::error::{Error, Result};
use crate::genome::{ControllerSpec, CreatureSpec, Shape, Slot};
use crate::terrain::{Terrain, COURSE_LENGTH, STARTPAD_LENGTH};

const DENSITY: f64 = 1.0;
const BAUMGARTE: f64 = 0.2;
const SLOP: f64 = 0.005;
/// Cap on the velocity used to push bodies out of penetration.
const MAX_CORRECTION_SPEED: f64 = 3.0;
const SPAWN_CLEARANCE: f64 = 0.1;
pub const SPAWN_X: f64 = 10.0;
/// Flat run-off added on both sides of the course.
const RUNOFF: f64 = 60.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BodyShape {
    Box { hx: f64, hy: f64 },
    Circle { r: f64 },
}

#[derive(Clone, Debug)]
pub struct Body {
    pub pos: Vec2,
    pub angle: f64,
    pub vel: Vec2,
    pub omega: f64,
    pub shape: BodyShape,
    inv_mass: f64,
    inv_inertia: f64,
    rot: Rot,
}

impl Body {
    fn new(shape: BodyShape, pos: Vec2, angle: f64) -> Self {
        let (mass, inertia) = match shape {
            BodyShape::Box { hx, hy } => {
                let m = DENSITY * 4.0 * hx * hy;
                (m, m * (4.0 * hx * hx + 4.0 * hy * hy) / 12.0)
            }
            BodyShape::Circle { r } => {
                let m = DENSITY * PI * r * r;
                (m, 0.5 * m * r * r)
            }
        };
        Self {
            pos,
            angle,
            vel: Vec2::ZERO,
            omega: 0.0,
            shape,
            inv_mass: 1.0 / mass,
            inv_inertia: 1.0 / inertia,
            rot: Rot::new(angle),
        }
    }

    pub fn mass(&self) -> f64 {
        1.0 / self.inv_mass
    }

    pub fn vertices(&self) -> [Vec2; 4] {
        let BodyShape::Box { hx, hy } = self.shape else {
            return [self.pos; 4];
        };
        [
            Vec2::new(-hx, -hy),
            Vec2::new(hx, -hy),
            Vec2::new(hx, hy),
            Vec2::new(-hx, hy),
        ]
        .map(|v| self.pos + self.rot.apply(v))
    }

    fn aabb(&self) -> (Vec2, Vec2) {
        match self.shape {
            BodyShape::Circle { r } => (
                Vec2::new(self.pos.x - r, self.pos.y - r),
                Vec2::new(self.pos.x + r, self.pos.y + r),
            ),
            BodyShape::Box { hx, hy } => {
                let ex = (self.rot.c * hx).abs() + (self.rot.s * hy).abs();
                let ey = (self.rot.s * hx).abs() + (self.rot.c * hy).abs();
                (
                    Vec2::new(self.pos.x - ex, self.pos.y - ey),
                    Vec2::new(self.pos.x + ex, self.pos.y + ey),
                )
            }
        }
    }

    /// Lowest point the spawn clearance must respect.
    fn support_points(&self) -> Vec<Vec2> {
        match self.shape {
            BodyShape::Box { .. } => self.vertices().to_vec(),
            BodyShape::Circle { r } => (0..8)
                .map(|k| self.pos + Vec2::from_angle(k as f64 * PI / 4.0) * r)
                .collect(),
        }
    }

    #[inline]
    fn velocity_at(&self, r: Vec2) -> Vec2 {
        self.vel + r.perp_scaled(self.omega)
    }

    #[inline]
    fn apply_impulse(&mut self, p: Vec2, r: Vec2) {
        self.vel += p * self.inv_mass;
        self.omega += self.inv_inertia * r.cross(p);
    }

    fn translate(&mut self, d: Vec2) {
        self.pos += d;
    }

    fn is_finite(&self) -> bool {
        self.pos.is_finite() && self.vel.is_finite() && self.angle.is_finite() && self.omega.is_finite()
    }
}

/// The course surface as an x-monotone polyline.
#[derive(Clone, Debug)]
pub struct Ground {
    pts: Vec<Vec2>,
}

impl Ground {
    /// Flat at height 0 up to the end of the startpad, then one vertex per
    /// height sample at `x = 21, 22, ..., 220`, with flat run-off beyond.
    pub fn from_terrain(t: &Terrain) -> Self {
        let mut pts = Vec::with_capacity(t.heights().len() + 4);
        pts.push(Vec2::new(-RUNOFF, 0.0));
        pts.push(Vec2::new(STARTPAD_LENGTH, 0.0));
        for (i, &h) in t.heights().iter().enumerate() {
            pts.push(Vec2::new(STARTPAD_LENGTH + (i + 1) as f64, h));
        }
        let last = t.heights().last().copied().unwrap_or(0.0);
        pts.push(Vec2::new(COURSE_LENGTH + RUNOFF, last));
        Self { pts }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.pts
    }

    /// Index of the segment containing `x` (clamped to the ends).
    #[inline]
    fn segment_at(&self, x: f64) -> usize {
        let i = self.pts.partition_point(|p| p.x <= x);
        i.saturating_sub(1).min(self.pts.len() - 2)
    }

    pub fn height_at(&self, x: f64) -> f64 {
        let i = self.segment_at(x);
        let (a, b) = (self.pts[i], self.pts[i + 1]);
        let t = ((x - a.x) / (b.x - a.x)).clamp(0.0, 1.0);
        a.y + (b.y - a.y) * t
    }

    /// Segments whose x-extent touches `[lo, hi]`.
    #[inline]
    fn segments(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        self.segment_at(lo)..self.segment_at(hi) + 1
    }

    /// Vertices with x in `[lo, hi]`.
    #[inline]
    fn vertex_range(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        self.pts.partition_point(|p| p.x < lo)..self.pts.partition_point(|p| p.x <= hi)
    }

    #[inline]
    fn segment_normal(&self, i: usize) -> Vec2 {
        let d = self.pts[i + 1] - self.pts[i];
        let len = d.length();
        Vec2::new(-d.y / len, d.x / len)
    }

    /// Closest surface point to `p` among segments within `reach` in x.
    fn closest(&self, p: Vec2, reach: f64) -> (Vec2, usize) {
        let mut best = (self.pts[0], 0, f64::INFINITY);
        for i in self.segments(p.x - reach, p.x + reach) {
            let (q, _) = closest_on_segment(p, self.pts[i], self.pts[i + 1]);
            let d2 = (q - p).length_squared();
            if d2 < best.2 {
                best = (q, i, d2);
            }
        }
        (best.0, best.1)
    }
}

#[derive(Clone, Debug)]
pub struct Joint {
    pub parent: usize,
    pub child: usize,
    local_parent: Vec2,
    local_child: Vec2,
    reference: f64,
    pub controller: ControllerSpec,
    acc: Vec2,
    motor_acc: f64,
    ra: Vec2,
    rb: Vec2,
    k_inv: [f64; 4],
    bias: Vec2,
    motor_mass: f64,
    motor_speed: f64,
}

impl Joint {
    /// Current angle relative to the rest pose.
    pub fn angle(&self, bodies: &[Body]) -> f64 {
        bodies[self.child].angle - bodies[self.parent].angle - self.reference
    }

    /// World-space anchor as seen from parent and child.
    pub fn anchors(&self, bodies: &[Body]) -> (Vec2, Vec2) {
        let a = &bodies[self.parent];
        let b = &bodies[self.child];
        (
            a.pos + a.rot.apply(self.local_parent),
            b.pos + b.rot.apply(self.local_child),
        )
    }
}

#[derive(Clone, Copy, Debug)]
struct Contact {
    a: usize,
    /// `None` for the ground.
    b: Option<usize>,
    point: Vec2,
    /// Direction in which `a` is pushed.
    normal: Vec2,
    depth: f64,
    ra: Vec2,
    rb: Vec2,
    mass_n: f64,
    mass_t: f64,
    bias: f64,
    acc_n: f64,
    acc_t: f64,
}

impl Contact {
    fn new(a: usize, b: Option<usize>, point: Vec2, normal: Vec2, depth: f64) -> Self {
        Self {
            a,
            b,
            point,
            normal,
            depth,
            ra: Vec2::ZERO,
            rb: Vec2::ZERO,
            mass_n: 0.0,
            mass_t: 0.0,
            bias: 0.0,
            acc_n: 0.0,
            acc_t: 0.0,
        }
    }
}

pub struct World {
    pub bodies: Vec<Body>,
    pub joints: Vec<Joint>,
    pub ground: Ground,
    /// Row-major `n x n` mask of body pairs that may collide.
    collide: Vec<bool>,
    contacts: Vec<Contact>,
    cfg: SimConfig,
}

fn slot_frame(slot: Slot, hx: f64, hy: f64) -> (Vec2, f64) {
    match slot {
        Slot::Left => (Vec2::new(-hx, 0.0), PI),
        Slot::Top => (Vec2::new(0.0, hy), FRAC_PI_2),
        Slot::Right => (Vec2::new(hx, 0.0), 0.0),
    }
}

fn body_shape(shape: Shape) -> BodyShape {
    match shape {
        Shape::Rectangle { width, height } => BodyShape::Box {
            hx: 0.5 * width,
            hy: 0.5 * height,
        },
        Shape::Circle { radius } => BodyShape::Circle { r: radius },
    }
}

/// Assembles the creature at rest pose over the course.
///
/// Every module's local +y axis points away from its parent; children hang
/// off the left, top and right faces of rectangles. The root sits at
/// `x = 10` and the whole body is lifted so that its lowest point clears
/// the ground by 0.1.
pub fn build_world(creature: &CreatureSpec, terrain: &Terrain, cfg: &SimConfig) -> Result<World> {
    if creature.is_empty() {
        return Err(Error::EmptyCreature);
    }
    let mut bodies: Vec<Body> = Vec::with_capacity(creature.len());
    let mut joints = Vec::with_capacity(creature.len() - 1);
    for (i, node) in creature.nodes.iter().enumerate() {
        let shape = body_shape(node.module.shape);
        let Some((p, slot)) = node.parent else {
            bodies.push(Body::new(shape, Vec2::ZERO, 0.0));
            continue;
        };
        let parent = &bodies[p];
        let BodyShape::Box { hx, hy } = parent.shape else {
            unreachable!("decoded creatures only attach to rectangles");
        };
        let (local_anchor, face_angle) = slot_frame(slot, hx, hy);
        let anchor = parent.pos + parent.rot.apply(local_anchor);
        let dir = parent.angle + face_angle + node.module.attach_angle;
        let reach = match shape {
            BodyShape::Box { hy, .. } => hy,
            BodyShape::Circle { r } => r,
        };
        let angle = dir - FRAC_PI_2;
        let body = Body::new(shape, anchor + Vec2::from_angle(dir) * reach, angle);
        joints.push(Joint {
            parent: p,
            child: i,
            local_parent: local_anchor,
            local_child: Vec2::new(0.0, -reach),
            reference: angle - parent.angle,
            controller: node.module.controller,
            acc: Vec2::ZERO,
            motor_acc: 0.0,
            ra: Vec2::ZERO,
            rb: Vec2::ZERO,
            k_inv: [0.0; 4],
            bias: Vec2::ZERO,
            motor_mass: 0.0,
            motor_speed: 0.0,
        });
        bodies.push(body);
    }

    let ground = Ground::from_terrain(terrain);
    for b in &mut bodies {
        b.translate(Vec2::new(SPAWN_X, 0.0));
    }
    let lift = bodies
        .iter()
        .flat_map(|b| b.support_points())
        .map(|p| ground.height_at(p.x) - p.y)
        .fold(f64::NEG_INFINITY, f64::max)
        + SPAWN_CLEARANCE;
    for b in &mut bodies {
        b.translate(Vec2::new(0.0, lift));
    }

    let n = bodies.len();
    let mut collide = vec![true; n * n];
    for j in &joints {
        collide[j.parent * n + j.child] = false;
        collide[j.child * n + j.parent] = false;
    }
    // Modules that already overlap at rest pose never collide with each other.
    let mut scratch = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            scratch.clear();
            body_body(a, &bodies[a], b, &bodies[b], &mut scratch);
            if scratch.iter().any(|c| c.depth > 0.0) {
                collide[a * n + b] = false;
                collide[b * n + a] = false;
            }
        }
    }

    Ok(World {
        bodies,
        joints,
        ground,
        collide,
        contacts: Vec::new(),
        cfg: cfg.clone(),
    })
}

fn body_ground(i: usize, body: &Body, ground: &Ground, out: &mut Vec<Contact>) {
    match body.shape {
        BodyShape::Box { hx, hy } => {
            for v in body.vertices() {
                let h = ground.height_at(v.x);
                if v.y >= h {
                    continue;
                }
                let (q, seg) = ground.closest(v, h - v.y);
                let d = q - v;
                let dist = d.length();
                let normal = if dist > 1e-12 {
                    d * (1.0 / dist)
                } else {
                    ground.segment_normal(seg)
                };
                out.push(Contact::new(i, None, v, normal, dist));
            }
            let (lo, hi) = body.aabb();
            for k in ground.vertex_range(lo.x, hi.x) {
                let p = ground.pts[k];
                if p.y < lo.y || p.y > hi.y {
                    continue;
                }
                let l = body.rot.apply_inv(p - body.pos);
                let (dx, dy) = (hx - l.x.abs(), hy - l.y.abs());
                if dx <= 0.0 || dy <= 0.0 {
                    continue;
                }
                let (outward, depth) = if dx < dy {
                    (Vec2::new(l.x.signum(), 0.0), dx)
                } else {
                    (Vec2::new(0.0, l.y.signum()), dy)
                };
                out.push(Contact::new(i, None, p, -body.rot.apply(outward), depth));
            }
        }
        BodyShape::Circle { r } => {
            let c = body.pos;
            let h = ground.height_at(c.x);
            if c.y < h {
                let (q, _) = ground.closest(c, h - c.y + r);
                let d = q - c;
                let dist = d.length().max(1e-12);
                out.push(Contact::new(i, None, q, d * (1.0 / dist), dist + r));
                return;
            }
            let segs = ground.segments(c.x - r, c.x + r);
            let last = ground.pts.len() - 2;
            for s in segs {
                let (q, t) = closest_on_segment(c, ground.pts[s], ground.pts[s + 1]);
                // a shared vertex is reported once, by the segment starting there
                if t >= 1.0 && s < last {
                    continue;
                }
                let d = c - q;
                let dist = d.length();
                if dist >= r {
                    continue;
                }
                let normal = if dist > 1e-12 {
                    d * (1.0 / dist)
                } else {
                    ground.segment_normal(s)
                };
                out.push(Contact::new(i, None, q, normal, r - dist));
            }
        }
    }
}

/// Point inside a box: outward normal of the nearest face and depth.
fn inside_box(body: &Body, hx: f64, hy: f64, p: Vec2) -> Option<(Vec2, f64)> {
    let l = body.rot.apply_inv(p - body.pos);
    let (dx, dy) = (hx - l.x.abs(), hy - l.y.abs());
    if dx <= 0.0 || dy <= 0.0 {
        return None;
    }
    let (n, depth) = if dx < dy {
        (Vec2::new(if l.x < 0.0 { -1.0 } else { 1.0 }, 0.0), dx)
    } else {
        (Vec2::new(0.0, if l.y < 0.0 { -1.0 } else { 1.0 }), dy)
    };
    Some((body.rot.apply(n), depth))
}

/// Box against circle: contact point and the normal pointing from the box
/// towards the circle.
fn box_circle(bx: &Body, hx: f64, hy: f64, c: Vec2, r: f64) -> Option<(Vec2, Vec2, f64)> {
    let l = bx.rot.apply_inv(c - bx.pos);
    let clamped = Vec2::new(l.x.clamp(-hx, hx), l.y.clamp(-hy, hy));
    if clamped == l {
        let (dx, dy) = (hx - l.x.abs(), hy - l.y.abs());
        let (n, face, depth) = if dx < dy {
            let s = if l.x < 0.0 { -1.0 } else { 1.0 };
            (Vec2::new(s, 0.0), Vec2::new(s * hx, l.y), dx + r)
        } else {
            let s = if l.y < 0.0 { -1.0 } else { 1.0 };
            (Vec2::new(0.0, s), Vec2::new(l.x, s * hy), dy + r)
        };
        return Some((bx.pos + bx.rot.apply(face), bx.rot.apply(n), depth));
    }
    let d = l - clamped;
    let dist = d.length();
    if dist >= r {
        return None;
    }
    Some((
        bx.pos + bx.rot.apply(clamped),
        bx.rot.apply(d * (1.0 / dist)),
        r - dist,
    ))
}

fn body_body(ia: usize, a: &Body, ib: usize, b: &Body, out: &mut Vec<Contact>) {
    let (amin, amax) = a.aabb();
    let (bmin, bmax) = b.aabb();
    if amax.x < bmin.x || bmax.x < amin.x || amax.y < bmin.y || bmax.y < amin.y {
        return;
    }
    match (a.shape, b.shape) {
        (BodyShape::Circle { r: ra }, BodyShape::Circle { r: rb }) => {
            let d = a.pos - b.pos;
            let dist = d.length();
            if dist < ra + rb {
                let n = if dist > 1e-12 { d * (1.0 / dist) } else { Vec2::new(0.0, 1.0) };
                out.push(Contact::new(ia, Some(ib), b.pos + n * rb, n, ra + rb - dist));
            }
        }
        (BodyShape::Box { hx, hy }, BodyShape::Circle { r }) => {
            if let Some((p, n, depth)) = box_circle(a, hx, hy, b.pos, r) {
                out.push(Contact::new(ia, Some(ib), p, -n, depth));
            }
        }
        (BodyShape::Circle { r }, BodyShape::Box { hx, hy }) => {
            if let Some((p, n, depth)) = box_circle(b, hx, hy, a.pos, r) {
                out.push(Contact::new(ia, Some(ib), p, n, depth));
            }
        }
        (BodyShape::Box { hx: ahx, hy: ahy }, BodyShape::Box { hx: bhx, hy: bhy }) => {
            for v in a.vertices() {
                if let Some((n, depth)) = inside_box(b, bhx, bhy, v) {
                    out.push(Contact::new(ia, Some(ib), v, n, depth));
                }
            }
            for v in b.vertices() {
                if let Some((n, depth)) = inside_box(a, ahx, ahy, v) {
                    out.push(Contact::new(ia, Some(ib), v, -n, depth));
                }
            }
        }
    }
}

/// Sine target angle for a joint at timestep `t`.
pub fn controller_target(c: &ControllerSpec, t: u64) -> f64 {
    c.amplitude * (2.0 * PI * t as f64 / c.period + c.phase).sin()
}

impl World {
    pub fn root(&self) -> &Body {
        &self.bodies[0]
    }

    pub fn is_finite(&self) -> bool {
        self.bodies.iter().all(Body::is_finite)
    }

    pub fn contact_count(&self) -> usize {
        self.contacts.len()
    }

    pub fn can_collide(&self, a: usize, b: usize) -> bool {
        self.collide[a * self.bodies.len() + b]
    }

    fn find_contacts(&mut self) {
        self.contacts.clear();
        let n = self.bodies.len();
        for i in 0..n {
            body_ground(i, &self.bodies[i], &self.ground, &mut self.contacts);
        }
        for a in 0..n {
            for b in a + 1..n {
                if self.collide[a * n + b] {
                    body_body(a, &self.bodies[a], b, &self.bodies[b], &mut self.contacts);
                }
            }
        }
    }

    /// Advances one fixed timestep. Motors track the controller at step `t`,
    /// or hold the rest pose when `t` is `None`.
    pub fn step(&mut self, t: Option<u64>) {
        let dt = self.cfg.timestep;
        let inv_dt = 1.0 / dt;
        for b in &mut self.bodies {
            b.vel.y -= self.cfg.gravity * dt;
        }

        self.find_contacts();
        let friction = self.cfg.friction;
        for c in &mut self.contacts {
            let a = &self.bodies[c.a];
            c.ra = c.point - a.pos;
            let tangent = Vec2::new(-c.normal.y, c.normal.x);
            let rna = c.ra.cross(c.normal);
            let rta = c.ra.cross(tangent);
            let mut kn = a.inv_mass + a.inv_inertia * rna * rna;
            let mut kt = a.inv_mass + a.inv_inertia * rta * rta;
            if let Some(bi) = c.b {
                let b = &self.bodies[bi];
                c.rb = c.point - b.pos;
                let rnb = c.rb.cross(c.normal);
                let rtb = c.rb.cross(tangent);
                kn += b.inv_mass + b.inv_inertia * rnb * rnb;
                kt += b.inv_mass + b.inv_inertia * rtb * rtb;
            }
            c.mass_n = 1.0 / kn;
            c.mass_t = 1.0 / kt;
            c.bias = (BAUMGARTE * inv_dt * (c.depth - SLOP).max(0.0)).min(MAX_CORRECTION_SPEED);
        }

        let max_motor = self.cfg.max_motor_torque * dt;
        for j in &mut self.joints {
            let (a, b) = (&self.bodies[j.parent], &self.bodies[j.child]);
            j.ra = a.rot.apply(j.local_parent);
            j.rb = b.rot.apply(j.local_child);
            let (ma, mb, ia, ib) = (a.inv_mass, b.inv_mass, a.inv_inertia, b.inv_inertia);
            let k11 = ma + mb + ia * j.ra.y * j.ra.y + ib * j.rb.y * j.rb.y;
            let k12 = -ia * j.ra.x * j.ra.y - ib * j.rb.x * j.rb.y;
            let k22 = ma + mb + ia * j.ra.x * j.ra.x + ib * j.rb.x * j.rb.x;
            let det = k11 * k22 - k12 * k12;
            let inv_det = if det != 0.0 { 1.0 / det } else { 0.0 };
            j.k_inv = [k22 * inv_det, -k12 * inv_det, -k12 * inv_det, k11 * inv_det];
            let error = (b.pos + j.rb) - (a.pos + j.ra);
            j.bias = error * (-BAUMGARTE * inv_dt);
            j.motor_mass = 1.0 / (ia + ib);
            let target = t.map_or(0.0, |t| controller_target(&j.controller, t));
            let angle = b.angle - a.angle - j.reference;
            j.motor_speed = self.cfg.motor_gain * (target - angle);
            j.motor_acc = j.motor_acc.clamp(-max_motor, max_motor);

            let (ra, rb, p, m) = (j.ra, j.rb, j.acc, j.motor_acc);
            let a = &mut self.bodies[j.parent];
            a.apply_impulse(-p, ra);
            a.omega -= ia * m;
            let b = &mut self.bodies[j.child];
            b.apply_impulse(p, rb);
            b.omega += ib * m;
        }

        for _ in 0..self.cfg.solver_iterations {
            for j in &mut self.joints {
                solve_joint(j, &mut self.bodies, max_motor);
            }
            for c in &mut self.contacts {
                solve_contact(c, &mut self.bodies, friction);
            }
        }

        for b in &mut self.bodies {
            b.pos += b.vel * dt;
            b.angle += b.omega * dt;
            b.rot = Rot::new(b.angle);
        }
    }
}

fn pair_mut(bodies: &mut [Body], a: usize, b: usize) -> (&mut Body, &mut Body) {
    debug_assert_ne!(a, b);
    if a < b {
        let (lo, hi) = bodies.split_at_mut(b);
        (&mut lo[a], &mut hi[0])
    } else {
        let (lo, hi) = bodies.split_at_mut(a);
        (&mut hi[0], &mut lo[b])
    }
}

#[inline]
fn solve_joint(j: &mut Joint, bodies: &mut [Body], max_motor: f64) {
    let (a, b) = pair_mut(bodies, j.parent, j.child);

    let cdot = b.omega - a.omega - j.motor_speed;
    let old = j.motor_acc;
    j.motor_acc = (old - j.motor_mass * cdot).clamp(-max_motor, max_motor);
    let lambda = j.motor_acc - old;
    a.omega -= a.inv_inertia * lambda;
    b.omega += b.inv_inertia * lambda;

    let cdot = b.velocity_at(j.rb) - a.velocity_at(j.ra);
    let rhs = j.bias - cdot;
    let [k0, k1, k2, k3] = j.k_inv;
    let p = Vec2::new(k0 * rhs.x + k1 * rhs.y, k2 * rhs.x + k3 * rhs.y);
    j.acc += p;
    a.apply_impulse(-p, j.ra);
    b.apply_impulse(p, j.rb);
}

#[inline]
fn solve_contact(c: &mut Contact, bodies: &mut [Body], friction: f64) {
    let tangent = Vec2::new(-c.normal.y, c.normal.x);
    let relative = |bodies: &[Body], c: &Contact| {
        let va = bodies[c.a].velocity_at(c.ra);
        match c.b {
            Some(b) => va - bodies[b].velocity_at(c.rb),
            None => va,
        }
    };
    let apply = |bodies: &mut [Body], c: &Contact, p: Vec2| {
        bodies[c.a].apply_impulse(p, c.ra);
        if let Some(b) = c.b {
            bodies[b].apply_impulse(-p, c.rb);
        }
    };

    let vn = relative(bodies, c).dot(c.normal);
    let old = c.acc_n;
    c.acc_n = (old + c.mass_n * (c.bias - vn)).max(0.0);
    apply(bodies, c, c.normal * (c.acc_n - old));

    let vt = relative(bodies, c).dot(tangent);
    let limit = friction * c.acc_n;
    let old = c.acc_t;
    c.acc_t = (old - c.mass_t * vt).clamp(-limit, limit);
    apply(bodies, c, tangent * (c.acc_t - old));
}
