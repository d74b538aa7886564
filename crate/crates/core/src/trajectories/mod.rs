//! Reference generators.
//!
//! A [`Trajectory`] is a pure function of time returning the full desired
//! state: position and its first two derivatives, attitude, body rate and body
//! angular acceleration. The tool/camera axis of the vehicle is body x.

mod corkscrew;
mod pipe;
mod watertower;

pub use corkscrew::CorkscrewRef;
pub use pipe::{PipeRef, Waypoint};
pub use watertower::WaterTowerRef;

use serde::Serialize;
use thiserror::Error;

use crate::so3::{log_so3, orthonormality_defect, Rotation, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrajectoryError {
    #[error("{0} must be positive and finite (got {1})")]
    NotPositive(&'static str, f64),
    #[error("need at least two waypoints (got {0})")]
    TooFewWaypoints(usize),
    #[error("waypoints {0} and {1} coincide")]
    CoincidentWaypoints(usize, usize),
    #[error("non-finite trajectory parameter")]
    NonFinite,
}

/// Desired state at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceSample {
    pub p_d: Vec3,
    pub v_d: Vec3,
    pub a_d: Vec3,
    pub r_d: Rotation,
    /// Body-frame desired angular velocity, `R_dᵀṘ_d = [ω_d]×`.
    pub w_d: Vec3,
    pub wdot_d: Vec3,
}

impl ReferenceSample {
    /// Constant pose with zero derivatives.
    pub fn hold(p: Vec3, r: Rotation) -> Self {
        Self { p_d: p, v_d: Vec3::zeros(), a_d: Vec3::zeros(), r_d: r, w_d: Vec3::zeros(), wdot_d: Vec3::zeros() }
    }
}

pub trait Trajectory: Send + Sync {
    fn sample(&self, t: f64) -> ReferenceSample;

    /// Nominal length of the manoeuvre (s).
    fn duration(&self) -> f64;

    /// World point the body x-axis is meant to aim at, for look-at references.
    fn aim_point(&self) -> Option<Vec3> {
        None
    }
}

/// Constant hover pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoverRef {
    pub position: Vec3,
    pub attitude: Rotation,
    pub duration: f64,
}

impl HoverRef {
    pub fn new(position: Vec3, attitude: Rotation, duration: f64) -> Self {
        Self { position, attitude, duration }
    }
}

impl Trajectory for HoverRef {
    fn sample(&self, _t: f64) -> ReferenceSample {
        ReferenceSample::hold(self.position, self.attitude)
    }

    fn duration(&self) -> f64 {
        self.duration
    }
}

/// Quintic smoothstep on `[0, 1]` with its first two derivatives.
/// Zero velocity and acceleration at both ends.
pub(crate) fn smoothstep5(tau: f64) -> (f64, f64, f64) {
    let x = tau.clamp(0.0, 1.0);
    let (x2, x3) = (x * x, x * x * x);
    (x3 * (10.0 - 15.0 * x + 6.0 * x2), 30.0 * x2 * (1.0 - 2.0 * x + x2), 60.0 * x * (1.0 - 3.0 * x + 2.0 * x2))
}

/// Attitude whose x-axis points along `aim`, with z as close to world up as
/// possible. If `aim` is vertical, world x stands in for the up hint.
pub fn look_at(aim: &Vec3) -> Rotation {
    let x = aim.normalize();
    let mut z = Vec3::z() - x * x.z;
    if z.norm() < 1e-9 {
        z = Vec3::x() - x * x.x;
    }
    let z = z.normalize();
    let y = z.cross(&x);
    Rotation::from_matrix_unchecked(crate::so3::Mat3::from_columns(&[x, y, z]))
}

/// Worst-case mismatch between finite differences of a sampled stream and its
/// analytic derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ConsistencyReport {
    pub max_velocity_error: f64,
    pub max_acceleration_error: f64,
    pub max_rate_error: f64,
    pub max_rate_derivative_error: f64,
    pub max_orthonormality_defect: f64,
    pub max_step_psi: f64,
    pub samples: usize,
}

/// Central-difference scan of `traj` over `[dt, t_end - dt]`.
pub fn consistency_scan(traj: &dyn Trajectory, dt: f64, t_end: f64) -> ConsistencyReport {
    let mut rep = ConsistencyReport::default();
    let n = (t_end / dt).floor() as usize;
    let mut prev = traj.sample(0.0);
    for k in 1..n {
        let t = k as f64 * dt;
        let (a, b, c) = (traj.sample(t - dt), traj.sample(t), traj.sample(t + dt));
        let inv = 1.0 / (2.0 * dt);
        rep.max_velocity_error = rep.max_velocity_error.max(((c.p_d - a.p_d) * inv - b.v_d).norm());
        rep.max_acceleration_error = rep.max_acceleration_error.max(((c.v_d - a.v_d) * inv - b.a_d).norm());
        let w_fd = log_so3(&(a.r_d.transpose() * c.r_d)) * inv;
        rep.max_rate_error = rep.max_rate_error.max((w_fd - b.w_d).norm());
        rep.max_rate_derivative_error = rep.max_rate_derivative_error.max(((c.w_d - a.w_d) * inv - b.wdot_d).norm());
        rep.max_orthonormality_defect = rep
            .max_orthonormality_defect
            .max(orthonormality_defect(b.r_d.matrix()))
            .max((b.r_d.matrix().determinant() - 1.0).abs());
        rep.max_step_psi = rep.max_step_psi.max(crate::so3::psi_error(&prev.r_d, &b.r_d));
        prev = b;
        rep.samples += 1;
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::exp_so3;

    #[test]
    fn hover_is_constant() {
        let r = exp_so3(&Vec3::new(0.1, 0.2, 0.3));
        let h = HoverRef::new(Vec3::new(1.0, 2.0, 3.0), r, 5.0);
        let a = h.sample(0.0);
        let b = h.sample(3.7);
        assert_eq!(a, b);
        assert_eq!(a.v_d + a.a_d + a.w_d + a.wdot_d, Vec3::zeros());
        let rep = consistency_scan(&h, 1e-3, 1.0);
        assert_eq!(rep.max_velocity_error + rep.max_rate_error + rep.max_rate_derivative_error, 0.0);
    }

    #[test]
    fn smoothstep_derivatives() {
        assert_eq!(smoothstep5(0.0), (0.0, 0.0, 0.0));
        assert_eq!(smoothstep5(1.0), (1.0, 0.0, 0.0));
        let h = 1e-6;
        for i in 1..20 {
            let x = i as f64 / 20.0;
            let (_, d1, d2) = smoothstep5(x);
            let fd1 = (smoothstep5(x + h).0 - smoothstep5(x - h).0) / (2.0 * h);
            let fd2 = (smoothstep5(x + h).1 - smoothstep5(x - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-8);
            assert!((d2 - fd2).abs() < 1e-7);
        }
    }

    #[test]
    fn look_at_axes() {
        let aim = Vec3::new(-3.0, 1.0, -0.5);
        let r = look_at(&aim);
        assert!((r.column(0) - aim.normalize()).norm() < 1e-15);
        assert!(r.column(1).z.abs() < 1e-15);
        assert!(r.column(2).z > 0.0);
        assert!(orthonormality_defect(r.matrix()) < 1e-15);
        assert!((r.matrix().determinant() - 1.0).abs() < 1e-15);
        let down = look_at(&Vec3::new(0.0, 0.0, -1.0));
        assert!((down.matrix().determinant() - 1.0).abs() < 1e-15);
    }
}
