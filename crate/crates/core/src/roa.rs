//! Monte-Carlo probing of the attitude region of attraction.
//!
//! Each sample starts at hover with a random attitude error (uniform angle,
//! uniform axis) and a body rate at a fixed fraction of the rate bound for
//! that attitude error, then runs the closed loop in ideal-wrench mode.

use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::controller::{roa_from_parts, GainSet};
use crate::sim::{ActuatorMode, RigidState, SimConfig, SimError, Simulator};
use crate::so3::{exp_so3, psi_error, Rotation, Vec3};
use crate::trajectories::HoverRef;
use crate::vehicle::VehicleParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoaConfig {
    pub samples: usize,
    pub min_angle_deg: f64,
    pub max_angle_deg: f64,
    /// Initial ‖e_ω‖ as a fraction of the rate bound at the initial Ψ.
    pub omega_fraction: f64,
    pub horizon: f64,
    pub dt: f64,
    /// Ψ below which a run counts as converged.
    pub psi_converged: f64,
    /// The decay fit uses samples until Ψ first drops below this floor.
    pub fit_floor: f64,
}

impl Default for RoaConfig {
    fn default() -> Self {
        Self {
            samples: 200,
            min_angle_deg: 0.0,
            max_angle_deg: 179.0,
            omega_fraction: 0.9,
            horizon: 10.0,
            dt: 1e-3,
            psi_converged: 1e-3,
            fit_floor: 1e-20,
        }
    }
}

impl RoaConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.samples == 0 {
            return Err("roa.samples must be at least 1".into());
        }
        if !(0.0 <= self.min_angle_deg && self.min_angle_deg <= self.max_angle_deg && self.max_angle_deg < 180.0) {
            return Err("roa angles must satisfy 0 <= min_angle_deg <= max_angle_deg < 180".into());
        }
        if !(self.omega_fraction >= 0.0 && self.omega_fraction.is_finite()) {
            return Err("roa.omega_fraction must be non-negative".into());
        }
        if !(self.dt > 0.0 && self.horizon >= self.dt) {
            return Err("roa.dt must be positive and roa.horizon at least dt".into());
        }
        if !(self.psi_converged > 0.0 && self.fit_floor > 0.0) {
            return Err("roa thresholds must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoaOutcome {
    pub index: usize,
    pub angle_deg: f64,
    pub axis: [f64; 3],
    pub psi0: f64,
    pub omega0: f64,
    /// Rate bound (not squared) at the initial Ψ.
    pub omega_bound: f64,
    pub inside_roa: bool,
    pub psi_margin: f64,
    pub omega_margin: f64,
    pub converged: bool,
    /// First time Ψ drops below the convergence threshold, NaN if never.
    pub t_converged: f64,
    pub final_psi: f64,
    /// Negated slope of the least-squares fit of ln Ψ against t.
    pub decay_rate: f64,
    pub r_squared: f64,
}

/// Initial state for sample `index`; depends only on `(seed, index)`.
pub fn sample_initial_state(
    cfg: &RoaConfig,
    gains: &GainSet,
    params: &VehicleParams,
    seed: u64,
    index: usize,
) -> (RigidState, f64, Vec3) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let angle = rng.gen_range(cfg.min_angle_deg..=cfg.max_angle_deg).to_radians();
    let axis = random_unit(&mut rng);
    let r = exp_so3(&(axis * angle));
    let psi0 = psi_error(&r, &Rotation::identity());
    let bound = roa_from_parts(psi0, 0.0, gains, params).omega_bound_sq.max(0.0).sqrt();
    let w = random_unit(&mut rng) * (cfg.omega_fraction * bound);
    (RigidState { p: Vec3::zeros(), v: Vec3::zeros(), r, w }, angle, axis)
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let s = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(s * phi.cos(), s * phi.sin(), z)
}

/// Ordinary least squares of `y` on `x`; returns `(slope, R²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    if x.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Runs sample `index` to the horizon.
pub fn run_sample(
    cfg: &RoaConfig,
    gains: &GainSet,
    params: &VehicleParams,
    seed: u64,
    index: usize,
) -> Result<RoaOutcome, SimError> {
    let (init, angle, axis) = sample_initial_state(cfg, gains, params, seed, index);
    let check = roa_from_parts(psi_error(&init.r, &Rotation::identity()), init.w.norm_squared(), gains, params);
    let traj = HoverRef::new(Vec3::zeros(), Rotation::identity(), cfg.horizon);
    let sim_cfg = SimConfig {
        dt: cfg.dt,
        duration: Some(cfg.horizon),
        actuator_mode: ActuatorMode::IdealWrench,
        divergence_bound: f64::MAX,
        seed,
        ..Default::default()
    };
    let sim = Simulator::new(&sim_cfg, params, gains, &traj);
    let (mut ts, mut logs) = (Vec::new(), Vec::new());
    let mut t_converged = f64::NAN;
    let mut fitting = true;
    let (final_state, _) = sim.run_with(&init, |rec| {
        if t_converged.is_nan() && rec.psi < cfg.psi_converged {
            t_converged = rec.t;
        }
        fitting &= rec.psi >= cfg.fit_floor;
        if fitting {
            ts.push(rec.t);
            logs.push(rec.psi.ln());
        }
        ControlFlow::Continue(())
    })?;
    let final_psi = psi_error(&final_state.r, &Rotation::identity());
    let (slope, r_squared) = linear_fit(&ts, &logs);
    Ok(RoaOutcome {
        index,
        angle_deg: angle.to_degrees(),
        axis: [axis.x, axis.y, axis.z],
        psi0: check.psi,
        omega0: init.w.norm(),
        omega_bound: check.omega_bound_sq.max(0.0).sqrt(),
        inside_roa: check.inside,
        psi_margin: check.psi_margin,
        omega_margin: check.omega_margin,
        converged: !t_converged.is_nan(),
        t_converged,
        final_psi,
        decay_rate: -slope,
        r_squared,
    })
}

/// All samples, in index order, computed in parallel.
pub fn run_monte_carlo(
    cfg: &RoaConfig,
    gains: &GainSet,
    params: &VehicleParams,
    seed: u64,
) -> Result<Vec<RoaOutcome>, SimError> {
    (0..cfg.samples).into_par_iter().map(|i| run_sample(cfg, gains, params, seed, i)).collect()
}

pub const CSV_HEADER: &str = "index,angle_deg,axis_x,axis_y,axis_z,psi0,omega0,omega_bound,inside_roa,psi_margin,omega_margin,converged,t_converged,final_psi,decay_rate,r_squared";

pub fn write_csv(outcomes: &[RoaOutcome], out: &mut impl std::io::Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for o in outcomes {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
            o.index,
            o.angle_deg,
            o.axis[0],
            o.axis[1],
            o.axis[2],
            o.psi0,
            o.omega0,
            o.omega_bound,
            u8::from(o.inside_roa),
            o.psi_margin,
            o.omega_margin,
            u8::from(o.converged),
            o.t_converged,
            o.final_psi,
            o.decay_rate,
            o.r_squared
        )?;
    }
    Ok(())
}
