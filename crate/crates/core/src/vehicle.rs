//! Vehicle parameters and the forward actuator model.
//!
//! Each arm carries a co-axial rotor pair whose common thrust axis is tilted
//! by two servos: `alpha` about the body j-axis, then `beta` about the tilted
//! propeller i-axis. The pair spins at equal speed, so the rotor drag torques
//! cancel and an arm contributes torque only through its lever arm.

use std::ops::{Add, Mul, Sub};

use nalgebra::{SMatrix, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::so3::{Mat3, Rotation, Vec3};

pub const NUM_ARMS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("{field} must be positive and finite (got {value})")]
    NotPositive { field: &'static str, value: f64 },
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("inertia matrix must be symmetric positive definite")]
    BadInertia,
}

/// Physical description of the vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleParams {
    /// kg
    pub mass: f64,
    /// Body-frame inertia, kg·m², row-major.
    pub inertia: [[f64; 3]; 3],
    /// N·s²/rad²
    pub thrust_coefficient: f64,
    /// Arm half-length along body x (m).
    pub arm_half_length: f64,
    /// Arm half-breadth along body y (m).
    pub arm_half_breadth: f64,
    /// Common arm height offset along body z (m).
    pub arm_height: f64,
    /// Per-arm thrust magnitude limit (N).
    pub max_thrust: f64,
    /// Rotor speed limit (rad/s). Derived from `max_thrust` when absent.
    pub max_rotor_speed: Option<f64>,
    /// Servo angular-rate limit (rad/s).
    pub max_servo_rate: Option<f64>,
    /// World-frame gravity (m/s²).
    pub gravity: [f64; 3],
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass: 4.0,
            inertia: [[0.08, 0.0, 0.0], [0.0, 0.08, 0.0], [0.0, 0.0, 0.12]],
            thrust_coefficient: 1e-5,
            arm_half_length: 0.25,
            arm_half_breadth: 0.25,
            arm_height: 0.0,
            max_thrust: 20.0,
            max_rotor_speed: None,
            max_servo_rate: None,
            gravity: [0.0, 0.0, -9.81],
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let positive = [
            ("mass", self.mass),
            ("thrust_coefficient", self.thrust_coefficient),
            ("arm_half_length", self.arm_half_length),
            ("arm_half_breadth", self.arm_half_breadth),
            ("max_thrust", self.max_thrust),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(ParamError::NotPositive { field, value });
            }
        }
        for (field, value) in [("max_rotor_speed", self.max_rotor_speed), ("max_servo_rate", self.max_servo_rate)] {
            if let Some(value) = value {
                if !(value.is_finite() && value > 0.0) {
                    return Err(ParamError::NotPositive { field, value });
                }
            }
        }
        if !self.arm_height.is_finite() {
            return Err(ParamError::NonFinite("arm_height"));
        }
        if self.gravity.iter().any(|g| !g.is_finite()) {
            return Err(ParamError::NonFinite("gravity"));
        }
        let j = self.inertia_matrix();
        if j.iter().any(|x| !x.is_finite()) || (j - j.transpose()).amax() > 1e-12 * j.amax() {
            return Err(ParamError::BadInertia);
        }
        if j.cholesky().is_none() {
            return Err(ParamError::BadInertia);
        }
        Ok(())
    }

    pub fn inertia_matrix(&self) -> Mat3 {
        Mat3::from_fn(|i, j| self.inertia[i][j])
    }

    pub fn gravity_vec(&self) -> Vec3 {
        Vec3::from(self.gravity)
    }

    /// Planar distance from the centre of mass to each arm, `√(l_x² + l_y²)`.
    pub fn arm_radius(&self) -> f64 {
        self.arm_half_length.hypot(self.arm_half_breadth)
    }

    pub fn max_rotor_speed(&self) -> f64 {
        self.max_rotor_speed.unwrap_or_else(|| (self.max_thrust / self.thrust_coefficient).sqrt())
    }

    /// Arm centres in the body frame: front-left, front-right, rear-right, rear-left.
    pub fn arm_positions(&self) -> [Vec3; NUM_ARMS] {
        let (lx, ly, lz) = (self.arm_half_length, self.arm_half_breadth, self.arm_height);
        [Vec3::new(lx, ly, lz), Vec3::new(lx, -ly, lz), Vec3::new(-lx, -ly, lz), Vec3::new(-lx, ly, lz)]
    }
}

/// Servo angles and rotor-pair speed for one arm.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ArmCommand {
    /// Tilt about the body j-axis (rad).
    pub alpha: f64,
    /// Tilt about the propeller i-axis (rad).
    pub beta: f64,
    /// Rotor-pair speed (rad/s).
    pub omega: f64,
}

impl ArmCommand {
    pub fn new(alpha: f64, beta: f64, omega: f64) -> Self {
        Self { alpha, beta, omega }
    }

    pub fn is_finite(&self) -> bool {
        self.alpha.is_finite() && self.beta.is_finite() && self.omega.is_finite()
    }

    pub fn exceeds_limits(&self, params: &VehicleParams) -> bool {
        self.omega > params.max_rotor_speed()
    }
}

pub type ArmCommandSet = [ArmCommand; NUM_ARMS];

/// Body-frame force/torque pair.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Wrench {
    pub force: Vec3,
    pub torque: Vec3,
}

impl Wrench {
    pub fn new(force: Vec3, torque: Vec3) -> Self {
        Self { force, torque }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn to_vector6(&self) -> Vector6<f64> {
        Vector6::new(self.force.x, self.force.y, self.force.z, self.torque.x, self.torque.y, self.torque.z)
    }

    pub fn from_vector6(v: &Vector6<f64>) -> Self {
        Self::new(Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5]))
    }

    /// Euclidean norm of the stacked 6-vector.
    pub fn norm(&self) -> f64 {
        (self.force.norm_squared() + self.torque.norm_squared()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.force.iter().chain(self.torque.iter()).all(|x| x.is_finite())
    }
}

impl Add for Wrench {
    type Output = Wrench;
    fn add(self, rhs: Wrench) -> Wrench {
        Wrench::new(self.force + rhs.force, self.torque + rhs.torque)
    }
}

impl Sub for Wrench {
    type Output = Wrench;
    fn sub(self, rhs: Wrench) -> Wrench {
        Wrench::new(self.force - rhs.force, self.torque - rhs.torque)
    }
}

impl Mul<f64> for Wrench {
    type Output = Wrench;
    fn mul(self, s: f64) -> Wrench {
        Wrench::new(self.force * s, self.torque * s)
    }
}

/// Body-to-propeller rotation: `Ry(alpha) · Rx(beta)`.
pub fn propeller_rotation(alpha: f64, beta: f64) -> Rotation {
    Rotation::about_y(alpha) * Rotation::about_x(beta)
}

/// Unit thrust axis `(sin α cos β, −sin β, cos α cos β)`.
pub fn thrust_direction(alpha: f64, beta: f64) -> Vec3 {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    Vec3::new(sa * cb, -sb, ca * cb)
}

/// Thrust vector (N, body frame) produced by one arm.
pub fn arm_thrust_vector(cmd: &ArmCommand, params: &VehicleParams) -> Vec3 {
    thrust_direction(cmd.alpha, cmd.beta) * (params.thrust_coefficient * cmd.omega * cmd.omega)
}

/// Net body wrench of four arm commands: `f = Σ t_i`, `τ = Σ l_i × t_i`.
pub fn forward_wrench(cmds: &ArmCommandSet, params: &VehicleParams) -> Wrench {
    let arms = params.arm_positions();
    cmds.iter().zip(arms.iter()).fold(Wrench::zero(), |acc, (cmd, l)| {
        let t = arm_thrust_vector(cmd, params);
        acc + Wrench::new(t, l.cross(&t))
    })
}

/// Stacked `[G; H]` map: column `i` is `[t̂_i; l_i × t̂_i]`, so that the wrench
/// equals `c_t · F · Ω∘²`.
pub fn wrench_map_matrix(
    alphas: &[f64; NUM_ARMS],
    betas: &[f64; NUM_ARMS],
    params: &VehicleParams,
) -> SMatrix<f64, 6, NUM_ARMS> {
    let arms = params.arm_positions();
    let mut f = SMatrix::<f64, 6, NUM_ARMS>::zeros();
    for i in 0..NUM_ARMS {
        let dir = thrust_direction(alphas[i], betas[i]);
        let moment = arms[i].cross(&dir);
        f.fixed_view_mut::<3, 1>(0, i).copy_from(&dir);
        f.fixed_view_mut::<3, 1>(3, i).copy_from(&moment);
    }
    f
}
