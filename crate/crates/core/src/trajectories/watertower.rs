use std::f64::consts::PI;

use super::{smoothstep5, ReferenceSample, Trajectory, TrajectoryError};
use crate::so3::{Rotation, Vec3};

/// Contact-inspection pass over a spherical tank.
///
/// The vehicle rides a sphere of radius `radius + standoff` around the tank
/// centre, with the tool axis (body x) always along the inward surface normal.
/// Three phases, each a quintic blend that starts and ends at rest:
///
/// 1. ascent along a meridian from the equator to `apex_elevation`, pitching
///    the tool down as the surface curves away;
/// 2. at the top, a sweep in azimuth by `sweep_angle`, turning the vehicle
///    about the tank axis;
/// 3. descent along the new meridian back to the equator.
///
/// The pose on the sphere is parameterised by azimuth `φ` and elevation `θ`,
/// with attitude `R_d = Rz(φ + π)·Ry(θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterTowerRef {
    center: Vec3,
    path_radius: f64,
    apex_elevation: f64,
    sweep_angle: f64,
    ascent_time: f64,
    sweep_time: f64,
}

impl WaterTowerRef {
    /// `radius`: tank radius; `height`: tank centre height; `ascent_rate`:
    /// mean climb rate (m/s); `standoff`: tool length from vehicle centre to
    /// surface.
    pub fn new(radius: f64, height: f64, ascent_rate: f64, standoff: f64) -> Result<Self, TrajectoryError> {
        Self::with_shape(radius, height, ascent_rate, standoff, PI / 4.0, PI / 2.0)
    }

    pub fn with_shape(
        radius: f64,
        height: f64,
        ascent_rate: f64,
        standoff: f64,
        apex_elevation: f64,
        sweep_angle: f64,
    ) -> Result<Self, TrajectoryError> {
        for (name, v) in [("radius", radius), ("ascent_rate", ascent_rate), ("standoff", standoff)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(TrajectoryError::NotPositive(name, v));
            }
        }
        if !height.is_finite() || !sweep_angle.is_finite() {
            return Err(TrajectoryError::NonFinite);
        }
        if !(apex_elevation > 0.0 && apex_elevation < PI / 2.0) {
            return Err(TrajectoryError::NotPositive("apex_elevation", apex_elevation));
        }
        let path_radius = radius + standoff;
        let ascent_time = path_radius * apex_elevation.sin() / ascent_rate;
        let sweep_time = path_radius * apex_elevation.cos() * sweep_angle.abs() / ascent_rate;
        Ok(Self {
            center: Vec3::new(0.0, 0.0, height),
            path_radius,
            apex_elevation,
            sweep_angle,
            ascent_time,
            sweep_time,
        })
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn path_radius(&self) -> f64 {
        self.path_radius
    }

    /// Start times of the sweep and descent phases.
    pub fn phase_boundaries(&self) -> (f64, f64) {
        (self.ascent_time, self.ascent_time + self.sweep_time)
    }

    /// `(φ, φ̇, φ̈, θ, θ̇, θ̈)` at time `t`.
    fn angles(&self, t: f64) -> [f64; 6] {
        let (t1, t2) = self.phase_boundaries();
        let top = self.apex_elevation;
        if t < t1 {
            let (s, ds, dds) = smoothstep5(t / t1);
            [0.0, 0.0, 0.0, top * s, top * ds / t1, top * dds / (t1 * t1)]
        } else if t < t2 {
            let ts = self.sweep_time;
            let (s, ds, dds) = smoothstep5((t - t1) / ts);
            let sw = self.sweep_angle;
            [sw * s, sw * ds / ts, sw * dds / (ts * ts), top, 0.0, 0.0]
        } else {
            let t3 = self.ascent_time;
            let (s, ds, dds) = smoothstep5((t - t2) / t3);
            [self.sweep_angle, 0.0, 0.0, top * (1.0 - s), -top * ds / t3, -top * dds / (t3 * t3)]
        }
    }
}

impl Trajectory for WaterTowerRef {
    fn sample(&self, t: f64) -> ReferenceSample {
        let [phi, dphi, ddphi, th, dth, ddth] = self.angles(t.max(0.0));
        let (sp, cp) = phi.sin_cos();
        let (st, ct) = th.sin_cos();
        let rho = self.path_radius;

        let n = Vec3::new(ct * cp, ct * sp, st);
        let n_p = Vec3::new(-ct * sp, ct * cp, 0.0);
        let n_t = Vec3::new(-st * cp, -st * sp, ct);
        let n_pp = Vec3::new(-ct * cp, -ct * sp, 0.0);
        let n_tt = Vec3::new(-ct * cp, -ct * sp, -st);
        let n_pt = Vec3::new(st * sp, -st * cp, 0.0);

        let p_d = self.center + n * rho;
        let v_d = (n_p * dphi + n_t * dth) * rho;
        let a_d = (n_pp * dphi * dphi + n_pt * (2.0 * dphi * dth) + n_tt * dth * dth + n_p * ddphi + n_t * ddth) * rho;

        let r_d = Rotation::about_z(phi + PI) * Rotation::about_y(th);
        let w_d = Vec3::new(-dphi * st, dth, dphi * ct);
        let wdot_d = Vec3::new(-ddphi * st - dphi * dth * ct, ddth, ddphi * ct - dphi * dth * st);
        ReferenceSample { p_d, v_d, a_d, r_d, w_d, wdot_d }
    }

    fn duration(&self) -> f64 {
        2.0 * self.ascent_time + self.sweep_time
    }
}
