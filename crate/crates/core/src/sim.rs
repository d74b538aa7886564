//! Rigid-body simulation under the controller, allocator and actuator models.
//!
//! Per step: sample the reference, compute the control wrench, allocate it to
//! arm thrusts (with the gimbal-lock yaw fallback), saturate, extract servo
//! angles and rotor speeds, pass them through the actuator model, and
//! integrate the rigid body with the resulting wrench.

use std::f64::consts::TAU;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{
    allocate_with_gimbal_fallback, extract_arm_command, minimum_norm_oracle, saturate_thrust_set, AllocationError,
    ThrustSet, DEFAULT_GIMBAL_EPS,
};
use crate::controller::{compute_errors, control_wrench, GainSet, TrackingError};
use crate::so3::{exp_so3, psi_error, Rotation, Vec3};
use crate::trajectories::{ReferenceSample, Trajectory};
use crate::vehicle::{forward_wrench, ArmCommand, ArmCommandSet, VehicleParams, Wrench, NUM_ARMS};

/// Servo rate limit used when the vehicle does not specify one (rad/s).
pub const DEFAULT_SERVO_RATE: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("state became non-finite at t = {t:.6} s")]
    NonFinite { t: f64 },
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Allocation(#[from] AllocationError),
}

/// Position/velocity in the world frame, attitude body to world, body rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct RigidState {
    pub p: Vec3,
    pub v: Vec3,
    pub r: Rotation,
    pub w: Vec3,
}

impl RigidState {
    pub fn at_rest(p: Vec3, r: Rotation) -> Self {
        Self { p, v: Vec3::zeros(), r, w: Vec3::zeros() }
    }

    /// State sitting exactly on a reference sample.
    pub fn on_reference(s: &ReferenceSample) -> Self {
        Self { p: s.p_d, v: s.v_d, r: s.r_d, w: s.w_d }
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().chain(self.v.iter()).chain(self.w.iter()).chain(self.r.matrix().iter()).all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActuatorMode {
    /// The commanded wrench is applied exactly, with the control law
    /// re-evaluated at every integrator stage.
    IdealWrench,
    /// Servo angles and rotor speeds jump to their commands each step.
    InstantActuators,
    /// First-order lags on servos and rotors, plus a servo rate limit.
    RateLimitedActuators,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Integration step (s).
    pub dt: f64,
    /// Run length (s); the trajectory's own duration when absent.
    pub duration: Option<f64>,
    pub actuator_mode: ActuatorMode,
    pub servo_time_constant: f64,
    pub rotor_time_constant: f64,
    /// Half-width (rad) of the band around |β| = π/2 that enables the
    /// differential-thrust yaw strategy.
    pub gimbal_eps: f64,
    /// Position error (m) beyond which a run is declared diverged.
    pub divergence_bound: f64,
    /// Summary statistics ignore samples before this time (s).
    pub summary_start: f64,
    /// Compare each allocation with the pseudo-inverse oracle.
    pub check_optimality: bool,
    /// Set from the scenario's top-level seed.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            duration: None,
            actuator_mode: ActuatorMode::InstantActuators,
            servo_time_constant: 0.03,
            rotor_time_constant: 0.02,
            gimbal_eps: DEFAULT_GIMBAL_EPS,
            divergence_bound: 50.0,
            summary_start: 0.0,
            check_optimality: false,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: &str| Err(SimError::Config(msg.to_string()));
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt must be positive");
        }
        if let Some(d) = self.duration {
            if !(d.is_finite() && d >= self.dt) {
                return bad("duration must be at least dt");
            }
        }
        if !(self.servo_time_constant > 0.0 && self.rotor_time_constant > 0.0) {
            return bad("actuator time constants must be positive");
        }
        if !(self.gimbal_eps >= 0.0 && self.gimbal_eps < std::f64::consts::FRAC_PI_2) {
            return bad("gimbal_eps must lie in [0, π/2)");
        }
        if self.divergence_bound.is_nan() || self.divergence_bound <= 0.0 {
            return bad("divergence_bound must be positive");
        }
        Ok(())
    }
}

/// Current actuator positions and the targets they are moving towards.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ActuatorState {
    pub current: ArmCommandSet,
    pub target: ArmCommandSet,
}

impl ActuatorState {
    pub fn settled(cmds: ArmCommandSet) -> Self {
        Self { current: cmds, target: cmds }
    }

    /// Advances every arm by `dt` towards `target` with first-order lags,
    /// the servo rate limit and the rotor speed bounds.
    pub fn advance(&mut self, target: ArmCommandSet, params: &VehicleParams, cfg: &SimConfig, dt: f64) {
        self.target = target;
        let servo_gain = 1.0 - (-dt / cfg.servo_time_constant).exp();
        let rotor_gain = 1.0 - (-dt / cfg.rotor_time_constant).exp();
        let max_step = params.max_servo_rate.unwrap_or(DEFAULT_SERVO_RATE) * dt;
        let omega_max = params.max_rotor_speed();
        for (cur, tgt) in self.current.iter_mut().zip(target.iter()) {
            cur.alpha += ((tgt.alpha - cur.alpha) * servo_gain).clamp(-max_step, max_step);
            cur.beta += ((tgt.beta - cur.beta) * servo_gain).clamp(-max_step, max_step);
            cur.omega = (cur.omega + (tgt.omega - cur.omega) * rotor_gain).clamp(0.0, omega_max);
        }
    }
}

/// Shifts `alpha` by multiples of 2π to the representative closest to `previous`.
pub fn unwrap_near(alpha: f64, previous: f64) -> f64 {
    alpha - TAU * ((alpha - previous) / TAU).round()
}

fn derivatives(
    state: &RigidState,
    wrench: &Wrench,
    params: &VehicleParams,
    j: &crate::so3::Mat3,
    j_inv: &crate::so3::Mat3,
) -> (Vec3, Vec3) {
    let v_dot = params.gravity_vec() + state.r.matrix() * wrench.force / params.mass;
    let w = state.w;
    let w_dot = j_inv * (-w.cross(&(j * w)) + wrench.torque);
    (v_dot, w_dot)
}

/// One RK4 step with the wrench supplied per stage by `wrench_at(stage_time_offset, stage_state)`.
///
/// Translation and body rate use classical RK4. Stage attitudes are
/// `R·exp(c·dt·ω_stage)` and the final attitude is `R·exp(dt·ω̄)` with `ω̄`
/// the RK4-weighted mean of the stage rates, which keeps `R` on SO(3).
pub fn step_with(
    state: &RigidState,
    params: &VehicleParams,
    dt: f64,
    mut wrench_at: impl FnMut(f64, &RigidState) -> Wrench,
) -> Result<RigidState, SimError> {
    let j = params.inertia_matrix();
    let j_inv = j.try_inverse().ok_or_else(|| SimError::Config("singular inertia".into()))?;
    let stage = |base: &RigidState, dv: Vec3, dw: Vec3, w_rot: Vec3, h: f64, p_vel: Vec3| RigidState {
        p: base.p + p_vel * h,
        v: base.v + dv * h,
        r: base.r * exp_so3(&(w_rot * h)),
        w: base.w + dw * h,
    };

    let s1 = *state;
    let (a1, al1) = derivatives(&s1, &wrench_at(0.0, &s1), params, &j, &j_inv);
    let s2 = stage(state, a1, al1, s1.w, 0.5 * dt, s1.v);
    let (a2, al2) = derivatives(&s2, &wrench_at(0.5 * dt, &s2), params, &j, &j_inv);
    let s3 = stage(state, a2, al2, s2.w, 0.5 * dt, s2.v);
    let (a3, al3) = derivatives(&s3, &wrench_at(0.5 * dt, &s3), params, &j, &j_inv);
    let s4 = stage(state, a3, al3, s3.w, dt, s3.v);
    let (a4, al4) = derivatives(&s4, &wrench_at(dt, &s4), params, &j, &j_inv);

    let sixth = dt / 6.0;
    let mean_rate = (s1.w + s2.w * 2.0 + s3.w * 2.0 + s4.w) / 6.0;
    let next = RigidState {
        p: state.p + (s1.v + s2.v * 2.0 + s3.v * 2.0 + s4.v) * sixth,
        v: state.v + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * sixth,
        r: (state.r * exp_so3(&(mean_rate * dt))).renormalized(),
        w: state.w + (al1 + al2 * 2.0 + al3 * 2.0 + al4) * sixth,
    };
    if !next.is_finite() {
        return Err(SimError::NonFinite { t: f64::NAN });
    }
    Ok(next)
}

/// One RK4 step holding `wrench` constant over the interval.
pub fn step(state: &RigidState, wrench: &Wrench, params: &VehicleParams, dt: f64) -> Result<RigidState, SimError> {
    step_with(state, params, dt, |_, _| *wrench)
}

/// Everything observed at one control step, before the state is advanced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TelemetryRecord {
    pub t: f64,
    pub state: RigidState,
    pub reference: ReferenceSample,
    pub errors: TrackingError,
    pub psi: f64,
    /// Controller output.
    pub commanded: Wrench,
    /// Wrench actually applied to the body at the start of the step.
    pub achieved: Wrench,
    pub thrusts: ThrustSet,
    /// Actuator positions used for `achieved` (the commands themselves in
    /// ideal and instant modes).
    pub actuators: ArmCommandSet,
    pub sat_scale: f64,
    pub fallback: bool,
    /// `Σ ‖t_i‖²` of the allocated (pre-saturation) thrusts.
    pub energy: f64,
    /// Allocation energy minus the pseudo-inverse optimum, when checked.
    pub energy_excess: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub rms_ep: f64,
    pub max_ep: f64,
    pub max_psi: f64,
    pub mean_energy: f64,
    pub saturation_fraction: f64,
    pub diverged: bool,
    pub fallback_fraction: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_aim_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rms_aim_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_energy_excess: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub records: Vec<TelemetryRecord>,
    pub final_state: RigidState,
    pub diverged: bool,
    pub summary: RunSummary,
}

/// Statistics accumulated over the records at or after `start`.
#[derive(Debug, Default)]
struct SummaryAccumulator {
    start: f64,
    aim: Option<Vec3>,
    n: usize,
    sum_ep_sq: f64,
    max_ep: f64,
    max_psi: f64,
    sum_energy: f64,
    saturated: usize,
    fallback: usize,
    max_aim: f64,
    sum_aim_sq: f64,
    max_excess: Option<f64>,
}

impl SummaryAccumulator {
    fn push(&mut self, rec: &TelemetryRecord) {
        if rec.t + 1e-12 < self.start {
            return;
        }
        self.n += 1;
        let ep = rec.errors.e_p.norm();
        self.sum_ep_sq += ep * ep;
        self.max_ep = self.max_ep.max(ep);
        self.max_psi = self.max_psi.max(rec.psi);
        self.sum_energy += rec.energy;
        self.saturated += usize::from(rec.sat_scale < 1.0);
        self.fallback += usize::from(rec.fallback);
        if let Some(target) = self.aim {
            let err = rec.state.r.column(0).angle(&(target - rec.state.p));
            self.max_aim = self.max_aim.max(err);
            self.sum_aim_sq += err * err;
        }
        if let Some(x) = rec.energy_excess {
            self.max_excess = Some(self.max_excess.map_or(x, |m: f64| m.max(x)));
        }
    }

    fn finish(&self, diverged: bool) -> RunSummary {
        let n = self.n.max(1) as f64;
        RunSummary {
            rms_ep: (self.sum_ep_sq / n).sqrt(),
            max_ep: self.max_ep,
            max_psi: self.max_psi,
            mean_energy: self.sum_energy / n,
            saturation_fraction: self.saturated as f64 / n,
            diverged,
            fallback_fraction: self.fallback as f64 / n,
            samples: self.n,
            max_aim_error: self.aim.map(|_| self.max_aim),
            rms_aim_error: self.aim.map(|_| (self.sum_aim_sq / n).sqrt()),
            max_energy_excess: self.max_excess,
        }
    }
}

/// Closed-loop simulation of one scenario.
pub struct Simulator<'a> {
    pub cfg: &'a SimConfig,
    pub params: &'a VehicleParams,
    pub gains: &'a GainSet,
    pub trajectory: &'a dyn Trajectory,
}

impl<'a> Simulator<'a> {
    pub fn new(
        cfg: &'a SimConfig,
        params: &'a VehicleParams,
        gains: &'a GainSet,
        trajectory: &'a dyn Trajectory,
    ) -> Self {
        Self { cfg, params, gains, trajectory }
    }

    pub fn steps(&self) -> usize {
        let duration = self.cfg.duration.unwrap_or_else(|| self.trajectory.duration());
        (duration / self.cfg.dt).round().max(1.0) as usize
    }

    /// Allocation chain for a commanded wrench: thrusts, saturation, arm commands.
    fn allocate(
        &self,
        commanded: &Wrench,
        previous: &ArmCommandSet,
    ) -> Result<(ThrustSet, f64, bool, ArmCommandSet, Option<f64>), SimError> {
        let alloc = allocate_with_gimbal_fallback(commanded, self.params, self.cfg.gimbal_eps);
        let energy_excess = if self.cfg.check_optimality && !alloc.fallback {
            let oracle = minimum_norm_oracle(commanded, self.params)?;
            Some(alloc.thrusts.energy() - oracle.energy())
        } else {
            None
        };
        let (applied, report) = saturate_thrust_set(&alloc.thrusts, self.params);
        let mut cmds = [ArmCommand::default(); NUM_ARMS];
        for i in 0..NUM_ARMS {
            let mut c = extract_arm_command(&applied.0[i], self.params)?;
            if applied.0[i].norm_squared() == 0.0 {
                // direction undefined; keep the servos where they are
                c.alpha = previous[i].alpha;
                c.beta = previous[i].beta;
            }
            c.alpha = unwrap_near(c.alpha, previous[i].alpha);
            cmds[i] = c;
        }
        Ok((alloc.thrusts, report.scale, alloc.fallback, cmds, energy_excess))
    }

    /// Runs from `initial`, handing each record to `observe`. Returns the final
    /// state and whether the run diverged.
    pub fn run_with(
        &self,
        initial: &RigidState,
        mut observe: impl FnMut(&TelemetryRecord) -> ControlFlow<()>,
    ) -> Result<(RigidState, bool), SimError> {
        self.cfg.validate()?;
        let dt = self.cfg.dt;
        let mut state = *initial;
        let mut actuators: Option<ActuatorState> = None;
        for k in 0..self.steps() {
            let t = k as f64 * dt;
            let reference = self.trajectory.sample(t);
            let errors = compute_errors(&state, &reference);
            let commanded = control_wrench(&state, &reference, self.gains, self.params);
            let previous = actuators.map(|a| a.current).unwrap_or_default();
            let (thrusts, sat_scale, fallback, cmds, energy_excess) = self.allocate(&commanded, &previous)?;
            let act = actuators.get_or_insert_with(|| ActuatorState::settled(cmds));
            let achieved = match self.cfg.actuator_mode {
                ActuatorMode::IdealWrench => {
                    *act = ActuatorState::settled(cmds);
                    commanded
                }
                ActuatorMode::InstantActuators => {
                    *act = ActuatorState::settled(cmds);
                    forward_wrench(&cmds, self.params)
                }
                ActuatorMode::RateLimitedActuators => {
                    act.advance(cmds, self.params, self.cfg, dt);
                    forward_wrench(&act.current, self.params)
                }
            };
            let record = TelemetryRecord {
                t,
                state,
                reference,
                errors,
                psi: psi_error(&state.r, &reference.r_d),
                commanded,
                achieved,
                thrusts,
                actuators: act.current,
                sat_scale,
                fallback,
                energy: thrusts.energy(),
                energy_excess,
            };
            if observe(&record).is_break() {
                return Ok((state, false));
            }
            if errors.e_p.norm() > self.cfg.divergence_bound {
                return Ok((state, true));
            }
            let next = match self.cfg.actuator_mode {
                ActuatorMode::IdealWrench => step_with(&state, self.params, dt, |h, s| {
                    if h == 0.0 {
                        commanded
                    } else {
                        control_wrench(s, &self.trajectory.sample(t + h), self.gains, self.params)
                    }
                }),
                _ => step(&state, &achieved, self.params, dt),
            };
            state = next.map_err(|_| SimError::NonFinite { t: t + dt })?;
        }
        Ok((state, false))
    }
}

/// Runs a scenario and collects every telemetry record plus the summary.
pub fn run_scenario(
    cfg: &SimConfig,
    params: &VehicleParams,
    gains: &GainSet,
    trajectory: &dyn Trajectory,
    initial: &RigidState,
) -> Result<RunOutput, SimError> {
    let sim = Simulator::new(cfg, params, gains, trajectory);
    let mut records = Vec::with_capacity(sim.steps());
    let mut acc = SummaryAccumulator { start: cfg.summary_start, aim: trajectory.aim_point(), ..Default::default() };
    let (final_state, diverged) = sim.run_with(initial, |rec| {
        acc.push(rec);
        records.push(*rec);
        ControlFlow::Continue(())
    })?;
    Ok(RunOutput { records, final_state, diverged, summary: acc.finish(diverged) })
}
