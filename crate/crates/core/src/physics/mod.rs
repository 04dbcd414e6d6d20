//! Deterministic 2D simulation of a creature crossing a terrain.
//!
//! A kill line starts at `x = 0` and advances at a fixed speed per step; the
//! run ends when it reaches the root module or the step budget runs out.
//! Fitness is the root's net horizontal progress, clamped to `[0, 220]`.
//! Each evaluation is single-threaded and shares no state, so callers may
//! evaluate many pairs concurrently.

mod math;
mod world;

pub use math::Vec2;
pub use world::{build_world, controller_target, Body, BodyShape, Ground, Joint, World, SPAWN_X};

use std::io::Write;

use crate::error::Result;
use crate::genome::CreatureSpec;
use crate::terrain::{Terrain, COURSE_LENGTH};

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    /// Seconds per step.
    pub timestep: f64,
    pub gravity: f64,
    pub max_steps: u64,
    /// Kill-line advance in units per step.
    pub line_speed: f64,
    pub motor_gain: f64,
    pub max_motor_torque: f64,
    pub friction: f64,
    /// Steps simulated with motors holding the rest pose before the clock
    /// and the kill line start.
    pub settle_steps: u64,
    pub solver_iterations: u32,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            timestep: 1.0 / 60.0,
            gravity: 9.81,
            max_steps: 2000,
            line_speed: 0.02,
            motor_gain: 5.0,
            max_motor_torque: 80.0,
            friction: 0.8,
            settle_steps: 0,
            solver_iterations: 10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalResult {
    pub fitness: f64,
    pub steps_used: u64,
    pub killed_by_line: bool,
}

/// One row of a replay trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub step: u64,
    pub root_x: f64,
    pub root_y: f64,
    pub root_angle: f64,
    pub line_x: f64,
}

pub fn evaluate(creature: &CreatureSpec, terrain: &Terrain, cfg: &SimConfig) -> EvalResult {
    simulate(creature, terrain, cfg, |_| {}).expect("decoded creatures are never empty")
}

/// Like [`evaluate`], also returning the root position before every step
/// and after the last one.
pub fn evaluate_traced(
    creature: &CreatureSpec,
    terrain: &Terrain,
    cfg: &SimConfig,
) -> Result<(EvalResult, Vec<TraceRow>)> {
    let mut rows = Vec::new();
    let result = simulate(creature, terrain, cfg, |row| rows.push(row))?;
    Ok((result, rows))
}

fn simulate(
    creature: &CreatureSpec,
    terrain: &Terrain,
    cfg: &SimConfig,
    mut observe: impl FnMut(TraceRow),
) -> Result<EvalResult> {
    let mut world = build_world(creature, terrain, cfg)?;
    for _ in 0..cfg.settle_steps {
        world.step(None);
    }
    let start = world.root().pos.x;
    let mut killed = false;
    let mut steps = 0;
    let row = |w: &World, step: u64| TraceRow {
        step,
        root_x: w.root().pos.x,
        root_y: w.root().pos.y,
        root_angle: w.root().angle,
        line_x: cfg.line_speed * step as f64,
    };
    while steps < cfg.max_steps {
        observe(row(&world, steps));
        if cfg.line_speed * steps as f64 >= world.root().pos.x {
            killed = true;
            break;
        }
        world.step(Some(steps));
        steps += 1;
        if !world.is_finite() {
            break;
        }
    }
    if !killed {
        observe(row(&world, steps));
    }
    let progress = world.root().pos.x - start;
    let fitness = if progress.is_finite() {
        progress.clamp(0.0, COURSE_LENGTH)
    } else {
        0.0
    };
    Ok(EvalResult {
        fitness,
        steps_used: steps,
        killed_by_line: killed,
    })
}

/// Writes a trace as CSV with a header row.
pub fn write_trace_csv<W: Write>(mut w: W, rows: &[TraceRow]) -> std::io::Result<()> {
    writeln!(w, "step,root_x,root_y,root_angle,line_x")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.step, r.root_x, r.root_y, r.root_angle, r.line_x)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::{decode, ControllerSpec, Genome};
    use crate::rng::{stream, Stream};
    use std::f64::consts::PI;

    #[test]
    fn controller_examples() {
        let c = |amplitude, period, phase| ControllerSpec { amplitude, period, phase };
        assert_eq!(controller_target(&c(0.0, 30.0, 1.0), 17), 0.0);
        assert_eq!(controller_target(&c(0.7, 30.0, 0.0), 0), 0.0);
        assert!((controller_target(&c(0.5, 20.0, PI / 2.0), 0) - 0.5).abs() < 1e-15);
        // quarter period later the phase-shifted wave is at zero
        assert!(controller_target(&c(0.5, 20.0, PI / 2.0), 5).abs() < 1e-12);
    }

    #[test]
    fn root_only_world_has_one_body() {
        let creature = decode(&Genome::zeros());
        let w = build_world(&creature, &Terrain::flat(0.0), &SimConfig::default()).unwrap();
        assert_eq!(w.bodies.len(), 1);
        assert!(w.joints.is_empty());
        assert!(w.ground.vertices().iter().all(|v| v.y == 0.0));
        let lowest = w.root().vertices().iter().map(|v| v.y).fold(f64::INFINITY, f64::min);
        assert!((lowest - 0.1).abs() < 1e-12);
        assert_eq!(w.root().pos.x, SPAWN_X);
    }

    #[test]
    fn one_child_one_joint() {
        let mut g = Genome::zeros();
        g.set_bit(176, true);
        let creature = decode(&g);
        let w = build_world(&creature, &Terrain::flat(0.0), &SimConfig::default()).unwrap();
        assert_eq!(w.bodies.len(), 2);
        assert_eq!(w.joints.len(), 1);
        assert!(!w.can_collide(0, 1));
        let (pa, pb) = w.joints[0].anchors(&w.bodies);
        assert!((pa - pb).length() < 1e-12);
    }

    #[test]
    fn empty_creature_rejected() {
        let empty = CreatureSpec { nodes: vec![] };
        assert!(build_world(&empty, &Terrain::flat(0.0), &SimConfig::default()).is_err());
    }

    #[test]
    fn motionless_creature_is_caught() {
        let creature = decode(&Genome::zeros()).motionless();
        let r = evaluate(&creature, &Terrain::flat(0.0), &SimConfig::default());
        assert!(r.killed_by_line);
        assert!(r.fitness < 1.0);
        // line needs 10 / 0.02 = 500 steps to reach the root
        assert!((495..=505).contains(&r.steps_used), "{}", r.steps_used);
    }

    #[test]
    fn root_comes_to_rest() {
        let creature = decode(&Genome::zeros());
        let cfg = SimConfig::default();
        let mut w = build_world(&creature, &Terrain::flat(0.0), &cfg).unwrap();
        for _ in 0..500 {
            w.step(None);
        }
        assert!(w.root().vel.y.abs() < 1e-3, "vy = {}", w.root().vel.y);
        assert!(w.root().pos.y > 0.0);
    }

    #[test]
    fn evaluation_is_deterministic() {
        let mut rng = stream(21, Stream::Bootstrap, 0, 0);
        for _ in 0..5 {
            let c = decode(&Genome::random(&mut rng));
            let a = evaluate(&c, &Terrain::flat(0.0), &SimConfig::default());
            let b = evaluate(&c, &Terrain::flat(0.0), &SimConfig::default());
            assert_eq!(a.fitness.to_bits(), b.fitness.to_bits());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn trace_matches_result() {
        let mut rng = stream(22, Stream::Bootstrap, 0, 0);
        let c = decode(&Genome::random(&mut rng));
        let t = Terrain::flat(0.0);
        let cfg = SimConfig::default();
        let (res, rows) = evaluate_traced(&c, &t, &cfg).unwrap();
        assert_eq!(res, evaluate(&c, &t, &cfg));
        let progress = rows.last().unwrap().root_x - rows[0].root_x;
        assert_eq!(res.fitness, progress.clamp(0.0, 220.0));
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), rows.len() + 1);
    }
}
