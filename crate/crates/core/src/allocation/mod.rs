//! Control allocation: desired body wrench to per-arm thrust vectors, and
//! thrust vectors to servo angles and rotor speeds.
//!
//! The closed-form split gives every arm an equal share of the net force plus
//! a roll, pitch and yaw contribution. For the planar symmetric layout this is
//! exactly the least-norm solution of `f = Σ t_i`, `τ = Σ l_i × t_i`, i.e. it
//! minimises `½ Σ ‖t_i‖²`. [`minimum_norm_oracle`] solves the same problem with
//! a generic pseudo-inverse and is kept as an independent cross-check.

mod envelope;

pub use envelope::{
    fibonacci_sphere, force_envelope, torque_envelope, EnvelopeDocument, EnvelopeReport, EnvelopeSample,
    EnvelopeSummary,
};

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::so3::{hat, Vec3};
use crate::vehicle::{ArmCommand, ArmCommandSet, VehicleParams, Wrench, NUM_ARMS};

/// Default half-width of the band around `|β| = π/2` that triggers the
/// differential-thrust yaw strategy.
pub const DEFAULT_GIMBAL_EPS: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AllocationError {
    #[error("allocation map is rank deficient (rank {rank} < 6); check arm geometry")]
    RankDeficient { rank: usize },
    #[error("thrust vector has non-finite components")]
    NonFinite,
}

/// Per-arm thrust vectors in the body frame (N).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ThrustSet(pub [Vec3; NUM_ARMS]);

impl ThrustSet {
    pub fn arms(&self) -> &[Vec3; NUM_ARMS] {
        &self.0
    }

    /// Sum of squared thrust magnitudes (twice the allocation cost).
    pub fn energy(&self) -> f64 {
        self.0.iter().map(|t| t.norm_squared()).sum()
    }

    pub fn max_norm(&self) -> f64 {
        self.0.iter().map(|t| t.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> ThrustSet {
        ThrustSet(self.0.map(|t| t * s))
    }

    /// Wrench the thrusts produce about the centre of mass.
    pub fn wrench(&self, params: &VehicleParams) -> Wrench {
        let arms = params.arm_positions();
        self.0.iter().zip(arms.iter()).fold(Wrench::zero(), |acc, (t, l)| acc + Wrench::new(*t, l.cross(t)))
    }

    pub fn distance(&self, other: &ThrustSet) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).norm_squared()).sum::<f64>().sqrt()
    }
}

/// Unit in-plane directions along which a unit arm thrust produces `+r` yaw torque.
pub fn yaw_basis(params: &VehicleParams) -> [Vec3; NUM_ARMS] {
    let r = params.arm_radius();
    let (cx, cy) = (params.arm_half_length / r, params.arm_half_breadth / r);
    [Vec3::new(-cy, cx, 0.0), Vec3::new(cy, cx, 0.0), Vec3::new(cy, -cx, 0.0), Vec3::new(-cy, -cx, 0.0)]
}

/// Roll/pitch sign pattern per arm: `(sign for τ_x, sign for τ_y)`.
const TILT_SIGNS: [(f64, f64); NUM_ARMS] = [(1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0), (1.0, 1.0)];

/// Force share plus roll and pitch terms, common to both yaw strategies.
fn force_roll_pitch(w: &Wrench, params: &VehicleParams) -> ([Vec3; NUM_ARMS], Vec3) {
    let (lx, ly) = (params.arm_half_length, params.arm_half_breadth);
    // The equal force shares act at height l_z and would otherwise add l_z ẑ × f.
    let torque = w.torque - Vec3::new(0.0, 0.0, params.arm_height).cross(&w.force);
    let share = w.force / NUM_ARMS as f64;
    let roll = torque.x / (4.0 * ly);
    let pitch = torque.y / (4.0 * lx);
    let arms = TILT_SIGNS.map(|(sx, sy)| share + Vec3::z() * (sx * roll + sy * pitch));
    (arms, torque)
}

/// Closed-form energy-optimal allocation of a body wrench onto the four arms.
pub fn allocate_wrench(w: &Wrench, params: &VehicleParams) -> ThrustSet {
    let (mut arms, torque) = force_roll_pitch(w, params);
    let yaw = torque.z / (4.0 * params.arm_radius());
    for (t, dir) in arms.iter_mut().zip(yaw_basis(params)) {
        *t += dir * yaw;
    }
    ThrustSet(arms)
}

/// The 6x12 linear map from stacked thrusts to `[f; τ]`.
pub fn allocation_map(params: &VehicleParams) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(6, 3 * NUM_ARMS);
    for (i, l) in params.arm_positions().iter().enumerate() {
        m.view_mut((0, 3 * i), (3, 3)).fill_with_identity();
        m.view_mut((3, 3 * i), (3, 3)).copy_from(&hat(l));
    }
    m
}

/// Least-norm allocation `Mᵀ(MMᵀ)⁻¹ w` via an eigendecomposition of the 6×6
/// Gram matrix `MMᵀ`.
///
/// nalgebra's SVD of the wide map loses up to seven digits for some layouts,
/// the symmetric eigensolver stays at rounding level.
pub fn minimum_norm_oracle(w: &Wrench, params: &VehicleParams) -> Result<ThrustSet, AllocationError> {
    let m = allocation_map(params);
    let eig = (&m * m.transpose()).symmetric_eigen();
    let lmax = eig.eigenvalues.max();
    let tol = 1e-12 * lmax.max(f64::MIN_POSITIVE);
    let rank = eig.eigenvalues.iter().filter(|l| **l > tol).count();
    if rank < 6 {
        return Err(AllocationError::RankDeficient { rank });
    }
    let rhs = DVector::from_column_slice(w.to_vector6().as_slice());
    let mut coeffs = eig.eigenvectors.transpose() * rhs;
    coeffs.component_div_assign(&eig.eigenvalues);
    let t = m.transpose() * (&eig.eigenvectors * coeffs);
    Ok(ThrustSet(std::array::from_fn(|i| Vec3::new(t[3 * i], t[3 * i + 1], t[3 * i + 2]))))
}

/// Which interval of the piecewise `α` inverse a thrust vector falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlphaBranch {
    /// `t_z < 0, t_x ≥ 0`: α ∈ (π/2, π]
    RearPositive,
    /// `t_z < 0, t_x < 0`: α ∈ (−π, −π/2)
    RearNegative,
    /// otherwise: α ∈ [−π/2, π/2]
    Forward,
}

pub fn alpha_branch(t: &Vec3) -> AlphaBranch {
    if t.z < 0.0 {
        if t.x >= 0.0 {
            AlphaBranch::RearPositive
        } else {
            AlphaBranch::RearNegative
        }
    } else {
        AlphaBranch::Forward
    }
}

/// Servo angles and rotor speed reproducing the thrust vector `t`.
///
/// `β = −asin(t̂_y)` and `α` follows the three-branch inverse of
/// `t̂ = (sin α cos β, −sin β, cos α cos β)`. The arcsines are evaluated as
/// `atan2` of the matching side lengths, which is the same function but stays
/// well conditioned next to ±π/2. A zero vector maps to `Ω = α = β = 0`.
/// Thrust above `max_thrust` is not clipped here; see [`saturate_thrust_set`].
pub fn extract_arm_command(t: &Vec3, params: &VehicleParams) -> Result<ArmCommand, AllocationError> {
    if t.iter().any(|x| !x.is_finite()) {
        return Err(AllocationError::NonFinite);
    }
    let mag = t.norm();
    if mag == 0.0 {
        return Ok(ArmCommand::default());
    }
    let omega = (mag / params.thrust_coefficient).sqrt();
    // cos β · ‖t‖
    let planar = t.x.hypot(t.z);
    let beta = -(t.y.atan2(planar));
    // asin(t̂_x / cos β), with cos β ≥ 0 on the principal branch
    let asin_ratio = if planar == 0.0 { 0.0 } else { t.x.atan2(t.z.abs()) };
    let alpha = match alpha_branch(t) {
        AlphaBranch::RearPositive => PI - asin_ratio,
        AlphaBranch::RearNegative => -PI - asin_ratio,
        AlphaBranch::Forward => asin_ratio,
    };
    Ok(ArmCommand::new(alpha, beta, omega))
}

pub fn extract_arm_commands(ts: &ThrustSet, params: &VehicleParams) -> Result<ArmCommandSet, AllocationError> {
    let mut out = [ArmCommand::default(); NUM_ARMS];
    for (cmd, t) in out.iter_mut().zip(ts.0.iter()) {
        *cmd = extract_arm_command(t, params)?;
    }
    Ok(out)
}

/// `|β|` of the thrust axis, zero for a null vector.
fn beta_magnitude(t: &Vec3) -> f64 {
    if t.norm_squared() == 0.0 {
        return 0.0;
    }
    t.y.abs().atan2(t.x.hypot(t.z))
}

/// Result of [`allocate_with_gimbal_fallback`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GimbalAllocation {
    pub thrusts: ThrustSet,
    /// Yaw was realised by thrust-magnitude differentials along `j_B`.
    pub fallback: bool,
    /// All arms within `max_thrust`.
    pub feasible: bool,
}

/// Allocation with a hybrid yaw strategy around gimbal lock.
///
/// When the nominal split would put any arm within `eps` of `|β| = π/2`, the
/// arms can only push along `j_B` and the in-plane yaw vectors are lost. The
/// yaw demand is then carried by magnitude differentials
/// `Δt_i = sign(l_ix) τ_z / (4 l_x)` along `j_B`, which sum to zero force and
/// give `Σ l_ix Δt_i = τ_z`.
pub fn allocate_with_gimbal_fallback(w: &Wrench, params: &VehicleParams, eps: f64) -> GimbalAllocation {
    let nominal = allocate_wrench(w, params);
    let near_lock = nominal.0.iter().any(|t| beta_magnitude(t) > FRAC_PI_2 - eps);
    let thrusts = if near_lock && w.torque.z != 0.0 {
        let (mut arms, torque) = force_roll_pitch(w, params);
        let lx = params.arm_half_length;
        for (t, l) in arms.iter_mut().zip(params.arm_positions()) {
            t.y += l.x.signum() * torque.z / (4.0 * lx);
        }
        ThrustSet(arms)
    } else {
        nominal
    };
    GimbalAllocation {
        thrusts,
        fallback: near_lock && w.torque.z != 0.0,
        feasible: thrusts.max_norm() <= params.max_thrust,
    }
}

/// Thrust each arm can still realise when locked at `|β| = π/2`: only the
/// component along `j_B` survives.
pub fn gimbal_locked_realization(ts: &ThrustSet) -> ThrustSet {
    ThrustSet(ts.0.map(|t| Vec3::new(0.0, t.y, 0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaturationReport {
    /// Uniform factor applied to every arm, `1` when within limits.
    pub scale: f64,
    pub saturated: bool,
}

/// Uniform, direction-preserving scaling so that no arm exceeds `max_thrust`.
pub fn saturate_thrust_set(ts: &ThrustSet, params: &VehicleParams) -> (ThrustSet, SaturationReport) {
    let peak = ts.max_norm();
    if peak <= params.max_thrust {
        return (*ts, SaturationReport { scale: 1.0, saturated: false });
    }
    let scale = params.max_thrust / peak;
    (ts.scaled(scale), SaturationReport { scale, saturated: true })
}
