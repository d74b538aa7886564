//! TOML scenario files.
//!
//! Every block is optional and falls back to defaults; unknown keys anywhere
//! are rejected. `schema/scenario.schema.json` documents the same structure.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::GainSet;
use crate::roa::RoaConfig;
use crate::sim::{RigidState, SimConfig};
use crate::so3::{euler_zxy_to_rotation, exp_so3, EulerZxy, Vec3};
use crate::trajectories::{CorkscrewRef, HoverRef, PipeRef, Trajectory, WaterTowerRef, Waypoint};
use crate::vehicle::VehicleParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub vehicle: VehicleParams,
    /// Mass-scaled defaults when absent.
    pub gains: Option<GainSet>,
    pub sim: SimConfig,
    pub trajectory: TrajectoryConfig,
    pub initial: InitialOffset,
    pub output: OutputConfig,
    pub roa: RoaConfig,
    pub envelope: EnvelopeConfig,
}

/// Attitudes are Z-X-Y Euler angles in degrees, `[yaw, roll, pitch]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectoryConfig {
    Hover {
        #[serde(default)]
        position: [f64; 3],
        #[serde(default)]
        attitude_deg: [f64; 3],
        duration: f64,
    },
    WaterTower {
        radius: f64,
        height: f64,
        ascent_rate: f64,
        standoff: f64,
        #[serde(default = "default_apex_deg")]
        apex_elevation_deg: f64,
        #[serde(default = "default_sweep_deg")]
        sweep_deg: f64,
    },
    Corkscrew {
        center: [f64; 3],
        radius: f64,
        pitch_per_turn: f64,
        turns: f64,
        period_per_turn: f64,
    },
    Pipe {
        speed: f64,
        waypoints: Vec<WaypointConfig>,
    },
}

fn default_apex_deg() -> f64 {
    45.0
}

fn default_sweep_deg() -> f64 {
    90.0
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig::Hover { position: [0.0; 3], attitude_deg: [0.0; 3], duration: 5.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaypointConfig {
    pub position: [f64; 3],
    #[serde(default)]
    pub attitude_deg: [f64; 3],
}

fn euler_deg(a: &[f64; 3]) -> crate::so3::Rotation {
    euler_zxy_to_rotation(&EulerZxy::new(a[0].to_radians(), a[1].to_radians(), a[2].to_radians()))
}

impl TrajectoryConfig {
    pub fn build(&self, dt: f64) -> Result<Box<dyn Trajectory>, ConfigError> {
        let invalid = |e: crate::trajectories::TrajectoryError| ConfigError::Invalid(format!("trajectory: {e}"));
        Ok(match self {
            TrajectoryConfig::Hover { position, attitude_deg, duration } => {
                if !(duration.is_finite() && *duration > 0.0) {
                    return Err(ConfigError::Invalid("trajectory.duration must be positive".into()));
                }
                Box::new(HoverRef::new(Vec3::from(*position), euler_deg(attitude_deg), *duration))
            }
            TrajectoryConfig::WaterTower { radius, height, ascent_rate, standoff, apex_elevation_deg, sweep_deg } => {
                Box::new(
                    WaterTowerRef::with_shape(
                        *radius,
                        *height,
                        *ascent_rate,
                        *standoff,
                        apex_elevation_deg.to_radians(),
                        sweep_deg.to_radians(),
                    )
                    .map_err(invalid)?,
                )
            }
            TrajectoryConfig::Corkscrew { center, radius, pitch_per_turn, turns, period_per_turn } => Box::new(
                CorkscrewRef::with_step(Vec3::from(*center), *radius, *pitch_per_turn, *turns, *period_per_turn, dt)
                    .map_err(invalid)?,
            ),
            TrajectoryConfig::Pipe { speed, waypoints } => {
                let wps: Vec<Waypoint> = waypoints
                    .iter()
                    .map(|w| Waypoint { position: Vec3::from(w.position), attitude: euler_deg(&w.attitude_deg) })
                    .collect();
                Box::new(PipeRef::new(&wps, *speed).map_err(invalid)?)
            }
        })
    }
}

/// Initial state relative to the reference at t = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct InitialOffset {
    /// World frame (m).
    pub position: [f64; 3],
    /// World frame (m/s).
    pub velocity: [f64; 3],
    /// Body-frame rotation vector (rad): `R(0) = R_d(0)·exp(attitude)`.
    pub attitude: [f64; 3],
    /// Body frame (rad/s), added to the reference rate.
    pub rate: [f64; 3],
}

impl InitialOffset {
    pub fn apply(&self, trajectory: &dyn Trajectory) -> RigidState {
        let s = trajectory.sample(0.0);
        RigidState {
            p: s.p_d + Vec3::from(self.position),
            v: s.v_d + Vec3::from(self.velocity),
            r: s.r_d * exp_so3(&Vec3::from(self.attitude)),
            w: s.w_d + Vec3::from(self.rate),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Relative to the working directory; `--out` overrides it.
    pub dir: PathBuf,
    pub telemetry: String,
    pub summary: String,
    pub envelope: String,
    pub roa: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            telemetry: "telemetry.csv".into(),
            summary: "summary.json".into(),
            envelope: "envelope.json".into(),
            roa: "roa.csv".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvelopeConfig {
    pub n_dirs: usize,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self { n_dirs: 1000 }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text)
            .map_err(|e| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text, path)
    }

    pub fn gains(&self) -> GainSet {
        self.gains.unwrap_or_else(|| GainSet::scaled_default(self.vehicle.mass))
    }

    /// Simulation settings with the top-level seed applied.
    pub fn sim_config(&self) -> SimConfig {
        SimConfig { seed: self.seed, ..self.sim.clone() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.vehicle.validate().map_err(|e| ConfigError::Invalid(format!("vehicle: {e}")))?;
        self.gains().validate().map_err(|e| ConfigError::Invalid(format!("gains: {e}")))?;
        self.sim.validate().map_err(|e| ConfigError::Invalid(format!("sim: {e}")))?;
        self.roa.validate().map_err(|e| ConfigError::Invalid(format!("roa: {e}")))?;
        if self.envelope.n_dirs == 0 {
            return Err(ConfigError::Invalid("envelope.n_dirs must be at least 1".into()));
        }
        self.trajectory.build(self.sim.dt)?;
        Ok(())
    }
}
