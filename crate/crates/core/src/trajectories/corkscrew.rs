use std::f64::consts::TAU;

use super::{look_at, ReferenceSample, Trajectory, TrajectoryError};
use crate::so3::{log_so3, Rotation, Vec3};

/// Helix around a target with the camera (body x) aimed at the target.
///
/// The helix is centred on `center` in x-y and climbs from
/// `center.z − pitch·turns/2` to `center.z + pitch·turns/2`. Position
/// derivatives are analytic; body rate and angular acceleration come from
/// central differences of the look-at attitude with step `h`. The helix is
/// defined for all `t`, so sampling past `duration` keeps climbing.
#[derive(Debug, Clone, PartialEq)]
pub struct CorkscrewRef {
    center: Vec3,
    radius: f64,
    pitch_per_turn: f64,
    turns: f64,
    period_per_turn: f64,
    h: f64,
}

impl CorkscrewRef {
    pub fn new(
        center: Vec3,
        radius: f64,
        pitch_per_turn: f64,
        turns: f64,
        period_per_turn: f64,
    ) -> Result<Self, TrajectoryError> {
        Self::with_step(center, radius, pitch_per_turn, turns, period_per_turn, 1e-3)
    }

    pub fn with_step(
        center: Vec3,
        radius: f64,
        pitch_per_turn: f64,
        turns: f64,
        period_per_turn: f64,
        h: f64,
    ) -> Result<Self, TrajectoryError> {
        for (name, v) in [("radius", radius), ("turns", turns), ("period_per_turn", period_per_turn), ("h", h)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(TrajectoryError::NotPositive(name, v));
            }
        }
        if !pitch_per_turn.is_finite() || center.iter().any(|x| !x.is_finite()) {
            return Err(TrajectoryError::NonFinite);
        }
        Ok(Self { center, radius, pitch_per_turn, turns, period_per_turn, h })
    }

    fn position(&self, t: f64) -> (Vec3, Vec3, Vec3) {
        let rate = TAU / self.period_per_turn;
        let (s, c) = (rate * t).sin_cos();
        let r = self.radius;
        let climb = self.pitch_per_turn / self.period_per_turn;
        let z0 = -0.5 * self.pitch_per_turn * self.turns;
        (
            self.center + Vec3::new(r * c, r * s, z0 + climb * t),
            Vec3::new(-r * rate * s, r * rate * c, climb),
            Vec3::new(-r * rate * rate * c, -r * rate * rate * s, 0.0),
        )
    }

    fn attitude(&self, t: f64) -> Rotation {
        look_at(&(self.center - self.position(t).0))
    }

    fn body_rate(&self, t: f64) -> Vec3 {
        let h = self.h;
        log_so3(&(self.attitude(t - h).transpose() * self.attitude(t + h))) / (2.0 * h)
    }
}

impl Trajectory for CorkscrewRef {
    fn sample(&self, t: f64) -> ReferenceSample {
        let (p_d, v_d, a_d) = self.position(t);
        let h = self.h;
        ReferenceSample {
            p_d,
            v_d,
            a_d,
            r_d: self.attitude(t),
            w_d: self.body_rate(t),
            wdot_d: (self.body_rate(t + h) - self.body_rate(t - h)) / (2.0 * h),
        }
    }

    fn duration(&self) -> f64 {
        self.turns * self.period_per_turn
    }

    fn aim_point(&self) -> Option<Vec3> {
        Some(self.center)
    }
}
