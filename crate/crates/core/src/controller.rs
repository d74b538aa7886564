//! Geometric tracking controller on SO(3) with fully decoupled force and torque.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::RigidState;
use crate::so3::{psi_error, vee_unchecked, Mat3, Vec3};
use crate::trajectories::ReferenceSample;
use crate::vehicle::{VehicleParams, Wrench};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("gain {name} must be positive and finite (got {value})")]
pub struct GainError {
    pub name: &'static str,
    pub value: f64,
}

/// PD gains for position, velocity, attitude and body rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSet {
    pub k_p: f64,
    pub k_v: f64,
    pub k_r: f64,
    pub k_w: f64,
}

impl GainSet {
    /// Mass-scaled defaults used by the bundled scenarios.
    pub fn scaled_default(mass: f64) -> Self {
        Self { k_p: 16.0 * mass, k_v: 5.6 * mass, k_r: 8.81, k_w: 2.54 }
    }

    pub fn validate(&self) -> Result<(), GainError> {
        for (name, value) in [("k_p", self.k_p), ("k_v", self.k_v), ("k_r", self.k_r), ("k_w", self.k_w)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(GainError { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TrackingError {
    pub e_p: Vec3,
    pub e_v: Vec3,
    pub e_r: Vec3,
    pub e_w: Vec3,
}

/// Time derivatives of the four tracking errors under the closed loop.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ErrorRates {
    pub d_ep: Vec3,
    pub d_ev: Vec3,
    pub d_er: Vec3,
    pub d_ew: Vec3,
}

/// `RᵀR_d`, the desired attitude seen from the body frame.
fn relative_attitude(state: &RigidState, reference: &ReferenceSample) -> Mat3 {
    state.r.matrix().transpose() * reference.r_d.matrix()
}

pub fn compute_errors(state: &RigidState, reference: &ReferenceSample) -> TrackingError {
    let r = state.r.matrix();
    let rd = reference.r_d.matrix();
    let rel = relative_attitude(state, reference);
    TrackingError {
        e_p: state.p - reference.p_d,
        e_v: state.v - reference.v_d,
        e_r: 0.5 * vee_unchecked(&(rd.transpose() * r - r.transpose() * rd)),
        e_w: state.w - rel * reference.w_d,
    }
}

/// Desired body wrench.
///
/// `f_d = Rᵀ(−k_p e_p − k_v e_v − m g + m a_d)` and
/// `τ_d = −k_R e_R − k_ω e_ω + ω × Jω − J(ω × RᵀR_d ω_d − RᵀR_d ω̇_d)`,
/// which turns the rigid-body equations into the linear error dynamics of
/// [`error_dynamics_rhs`].
pub fn control_wrench(
    state: &RigidState,
    reference: &ReferenceSample,
    gains: &GainSet,
    params: &VehicleParams,
) -> Wrench {
    let err = compute_errors(state, reference);
    let m = params.mass;
    let j = params.inertia_matrix();
    let rel = relative_attitude(state, reference);
    let w = state.w;

    let world_force = -gains.k_p * err.e_p - gains.k_v * err.e_v - m * params.gravity_vec() + m * reference.a_d;
    let force = state.r.matrix().transpose() * world_force;

    let torque = -gains.k_r * err.e_r - gains.k_w * err.e_w + w.cross(&(j * w))
        - j * (w.cross(&(rel * reference.w_d)) - rel * reference.wdot_d);
    Wrench::new(force, torque)
}

/// Closed-loop error dynamics under ideal actuation of [`control_wrench`].
pub fn error_dynamics_rhs(
    err: &TrackingError,
    state: &RigidState,
    reference: &ReferenceSample,
    gains: &GainSet,
    params: &VehicleParams,
) -> ErrorRates {
    let rel = relative_attitude(state, reference);
    let m = params.mass;
    let j = params.inertia_matrix();
    let j_inv = j.try_inverse().expect("inertia validated positive definite");
    ErrorRates {
        d_ep: err.e_v,
        d_ev: (-gains.k_p * err.e_p - gains.k_v * err.e_v) / m,
        d_er: 0.5 * (Mat3::identity() * rel.trace() - rel) * err.e_w,
        d_ew: j_inv * (-gains.k_r * err.e_r - gains.k_w * err.e_w),
    }
}

/// Largest eigenvalue of a symmetric 3x3 matrix.
pub fn lambda_max(j: &Mat3) -> f64 {
    j.symmetric_eigenvalues().max()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoaCheck {
    pub inside: bool,
    /// `Ψ(R, R_d)`.
    pub psi: f64,
    /// `2 − Ψ`, positive when the attitude condition holds.
    pub psi_margin: f64,
    /// `(2 k_R / λ_max(J)) (2 − Ψ)`.
    pub omega_bound_sq: f64,
    /// `omega_bound_sq − ‖e_ω‖²`, positive when the rate condition holds.
    pub omega_margin: f64,
}

/// Sufficient condition for exponential convergence of the attitude loop:
/// `Ψ < 2` and `‖e_ω‖² < (2 k_R / λ_max(J)) (2 − Ψ)`.
pub fn in_region_of_attraction(
    state: &RigidState,
    reference: &ReferenceSample,
    gains: &GainSet,
    params: &VehicleParams,
) -> RoaCheck {
    let psi = psi_error(&state.r, &reference.r_d);
    let err = compute_errors(state, reference);
    roa_from_parts(psi, err.e_w.norm_squared(), gains, params)
}

pub(crate) fn roa_from_parts(psi: f64, ew_sq: f64, gains: &GainSet, params: &VehicleParams) -> RoaCheck {
    let psi_margin = 2.0 - psi;
    let omega_bound_sq = 2.0 * gains.k_r / lambda_max(&params.inertia_matrix()) * psi_margin;
    let omega_margin = omega_bound_sq - ew_sq;
    RoaCheck { inside: psi_margin > 0.0 && omega_margin > 0.0, psi, psi_margin, omega_bound_sq, omega_margin }
}
