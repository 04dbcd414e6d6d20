//! Run configuration with flat `key=value` text form.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::autoencoder::TrainParams;
use crate::cppn::CppnMutation;
use crate::error::{Error, Result};
use crate::physics::SimConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Static,
    Dynamic,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Static => "static",
            Mode::Dynamic => "dynamic",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "static" => Ok(Mode::Static),
            "dynamic" => Ok(Mode::Dynamic),
            other => Err(format!("expected `static` or `dynamic`, got `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    /// `None` runs until the wall-clock budget is spent.
    pub iterations: Option<u64>,
    /// Seconds; `None` means unlimited.
    pub wall_clock_secs: Option<f64>,
    pub bootstrap_size: usize,
    pub batch_size: usize,
    pub grid_size: usize,
    pub reference_grid_size: usize,
    pub env_mutation_prob: f64,
    pub bit_flip_prob: f64,
    pub insert_threshold: f64,
    pub retrain_interval: u64,
    pub autoencoder: TrainParams,
    pub found_radius: f64,
    pub solved_radius: f64,
    pub solved_threshold: f64,
    pub cppn: CppnMutation,
    pub sim: SimConfig,
    /// Evaluation threads; 0 uses every available core.
    pub workers: usize,
    pub output_dir: Option<PathBuf>,
    /// Snapshot every this many iterations (the final iteration is always
    /// written).
    pub snapshot_interval: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Static,
            seed: 0,
            iterations: None,
            wall_clock_secs: Some(16.0 * 3600.0),
            bootstrap_size: 500,
            batch_size: 500,
            grid_size: 25,
            reference_grid_size: 100,
            env_mutation_prob: 0.2,
            bit_flip_prob: 0.05,
            insert_threshold: 100.0,
            retrain_interval: 100,
            autoencoder: TrainParams::default(),
            found_radius: 25.0,
            solved_radius: 2.5,
            solved_threshold: 200.0,
            cppn: CppnMutation::default(),
            sim: SimConfig::default(),
            workers: 0,
            output_dir: None,
            snapshot_interval: 10,
        }
    }
}

/// Every recognised key, in echo order.
pub const KEYS: &[&str] = &[
    "mode",
    "seed",
    "iterations",
    "wall_clock_secs",
    "bootstrap_size",
    "batch_size",
    "grid_size",
    "reference_grid_size",
    "env_mutation_prob",
    "bit_flip_prob",
    "insert_threshold",
    "retrain_interval",
    "ae_epochs",
    "ae_batch_size",
    "ae_learning_rate",
    "found_radius",
    "solved_radius",
    "solved_threshold",
    "cppn_add_node_prob",
    "cppn_add_connection_prob",
    "cppn_perturb_prob",
    "cppn_perturb_sigma",
    "cppn_activation_prob",
    "cppn_new_weight_sigma",
    "sim_timestep",
    "sim_gravity",
    "sim_max_steps",
    "sim_line_speed",
    "sim_motor_gain",
    "sim_max_motor_torque",
    "sim_friction",
    "sim_settle_steps",
    "sim_solver_iterations",
    "workers",
    "output_dir",
    "snapshot_interval",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| Error::config(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    match value {
        "none" | "" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

fn show_optional<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "none".to_string(), T::to_string)
}

impl RunConfig {
    /// Sets one key from its text form. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "mode" => self.mode = v.parse().map_err(|e| Error::config(key, e))?,
            "seed" => self.seed = parse(key, v)?,
            "iterations" => self.iterations = parse_optional(key, v)?,
            "wall_clock_secs" => self.wall_clock_secs = parse_optional(key, v)?,
            "bootstrap_size" => self.bootstrap_size = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "grid_size" => self.grid_size = parse(key, v)?,
            "reference_grid_size" => self.reference_grid_size = parse(key, v)?,
            "env_mutation_prob" => self.env_mutation_prob = parse(key, v)?,
            "bit_flip_prob" => self.bit_flip_prob = parse(key, v)?,
            "insert_threshold" => self.insert_threshold = parse(key, v)?,
            "retrain_interval" => self.retrain_interval = parse(key, v)?,
            "ae_epochs" => self.autoencoder.epochs = parse(key, v)?,
            "ae_batch_size" => self.autoencoder.batch_size = parse(key, v)?,
            "ae_learning_rate" => self.autoencoder.learning_rate = parse(key, v)?,
            "found_radius" => self.found_radius = parse(key, v)?,
            "solved_radius" => self.solved_radius = parse(key, v)?,
            "solved_threshold" => self.solved_threshold = parse(key, v)?,
            "cppn_add_node_prob" => self.cppn.add_node = parse(key, v)?,
            "cppn_add_connection_prob" => self.cppn.add_connection = parse(key, v)?,
            "cppn_perturb_prob" => self.cppn.perturb = parse(key, v)?,
            "cppn_perturb_sigma" => self.cppn.perturb_sigma = parse(key, v)?,
            "cppn_activation_prob" => self.cppn.reassign_activation = parse(key, v)?,
            "cppn_new_weight_sigma" => self.cppn.new_weight_sigma = parse(key, v)?,
            "sim_timestep" => self.sim.timestep = parse(key, v)?,
            "sim_gravity" => self.sim.gravity = parse(key, v)?,
            "sim_max_steps" => self.sim.max_steps = parse(key, v)?,
            "sim_line_speed" => self.sim.line_speed = parse(key, v)?,
            "sim_motor_gain" => self.sim.motor_gain = parse(key, v)?,
            "sim_max_motor_torque" => self.sim.max_motor_torque = parse(key, v)?,
            "sim_friction" => self.sim.friction = parse(key, v)?,
            "sim_settle_steps" => self.sim.settle_steps = parse(key, v)?,
            "sim_solver_iterations" => self.sim.solver_iterations = parse(key, v)?,
            "workers" => self.workers = parse(key, v)?,
            "output_dir" => {
                self.output_dir = match v {
                    "none" | "" => None,
                    p => Some(PathBuf::from(p)),
                }
            }
            "snapshot_interval" => self.snapshot_interval = parse(key, v)?,
            other => return Err(Error::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    /// Current value of a key in the same text form accepted by [`set`].
    ///
    /// [`set`]: RunConfig::set
    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "mode" => self.mode.to_string(),
            "seed" => self.seed.to_string(),
            "iterations" => show_optional(&self.iterations),
            "wall_clock_secs" => show_optional(&self.wall_clock_secs),
            "bootstrap_size" => self.bootstrap_size.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "grid_size" => self.grid_size.to_string(),
            "reference_grid_size" => self.reference_grid_size.to_string(),
            "env_mutation_prob" => self.env_mutation_prob.to_string(),
            "bit_flip_prob" => self.bit_flip_prob.to_string(),
            "insert_threshold" => self.insert_threshold.to_string(),
            "retrain_interval" => self.retrain_interval.to_string(),
            "ae_epochs" => self.autoencoder.epochs.to_string(),
            "ae_batch_size" => self.autoencoder.batch_size.to_string(),
            "ae_learning_rate" => self.autoencoder.learning_rate.to_string(),
            "found_radius" => self.found_radius.to_string(),
            "solved_radius" => self.solved_radius.to_string(),
            "solved_threshold" => self.solved_threshold.to_string(),
            "cppn_add_node_prob" => self.cppn.add_node.to_string(),
            "cppn_add_connection_prob" => self.cppn.add_connection.to_string(),
            "cppn_perturb_prob" => self.cppn.perturb.to_string(),
            "cppn_perturb_sigma" => self.cppn.perturb_sigma.to_string(),
            "cppn_activation_prob" => self.cppn.reassign_activation.to_string(),
            "cppn_new_weight_sigma" => self.cppn.new_weight_sigma.to_string(),
            "sim_timestep" => self.sim.timestep.to_string(),
            "sim_gravity" => self.sim.gravity.to_string(),
            "sim_max_steps" => self.sim.max_steps.to_string(),
            "sim_line_speed" => self.sim.line_speed.to_string(),
            "sim_motor_gain" => self.sim.motor_gain.to_string(),
            "sim_max_motor_torque" => self.sim.max_motor_torque.to_string(),
            "sim_friction" => self.sim.friction.to_string(),
            "sim_settle_steps" => self.sim.settle_steps.to_string(),
            "sim_solver_iterations" => self.sim.solver_iterations.to_string(),
            "workers" => self.workers.to_string(),
            "output_dir" => self
                .output_dir
                .as_ref()
                .map_or_else(|| "none".to_string(), |p| p.display().to_string()),
            "snapshot_interval" => self.snapshot_interval.to_string(),
            _ => return None,
        })
    }

    /// Applies `key=value` lines. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::config(
                    line,
                    format!("line {} is not of the form key=value", n + 1),
                ));
            };
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every key in echo order, one `key=value` per line.
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k}={}\n", self.get(k).expect("listed keys are known")))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |key: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(Error::config(key, format!("{p} is not a probability")))
            }
        };
        let positive = |key: &str, ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(key, "must be positive"))
            }
        };
        prob("env_mutation_prob", self.env_mutation_prob)?;
        prob("bit_flip_prob", self.bit_flip_prob)?;
        prob("cppn_add_node_prob", self.cppn.add_node)?;
        prob("cppn_add_connection_prob", self.cppn.add_connection)?;
        prob("cppn_perturb_prob", self.cppn.perturb)?;
        prob("cppn_activation_prob", self.cppn.reassign_activation)?;
        positive("cppn_perturb_sigma", self.cppn.perturb_sigma > 0.0)?;
        positive("cppn_new_weight_sigma", self.cppn.new_weight_sigma > 0.0)?;
        positive("bootstrap_size", self.bootstrap_size > 0)?;
        positive("batch_size", self.batch_size > 0)?;
        positive("grid_size", self.grid_size > 0)?;
        positive("reference_grid_size", self.reference_grid_size > 0)?;
        positive("snapshot_interval", self.snapshot_interval > 0)?;
        positive("ae_batch_size", self.autoencoder.batch_size > 0)?;
        positive(
            "ae_learning_rate",
            self.autoencoder.learning_rate >= 0.0 && self.autoencoder.learning_rate.is_finite(),
        )?;
        if self.mode == Mode::Dynamic {
            positive("retrain_interval", self.retrain_interval > 0)?;
        }
        positive("found_radius", self.found_radius > 0.0)?;
        positive("solved_radius", self.solved_radius > 0.0)?;
        if let Some(w) = self.wall_clock_secs {
            positive("wall_clock_secs", w > 0.0 && w.is_finite())?;
        }
        if self.iterations.is_none() && self.wall_clock_secs.is_none() {
            return Err(Error::config(
                "iterations",
                "either iterations or wall_clock_secs must bound the run",
            ));
        }
        positive("sim_timestep", self.sim.timestep > 0.0 && self.sim.timestep.is_finite())?;
        positive("sim_max_steps", self.sim.max_steps > 0)?;
        positive("sim_line_speed", self.sim.line_speed >= 0.0 && self.sim.line_speed.is_finite())?;
        positive("sim_motor_gain", self.sim.motor_gain >= 0.0)?;
        positive("sim_max_motor_torque", self.sim.max_motor_torque >= 0.0)?;
        positive("sim_friction", self.sim.friction >= 0.0)?;
        positive("sim_solver_iterations", self.sim.solver_iterations > 0)?;
        Ok(())
    }
}
