use super::{smoothstep5, ReferenceSample, Trajectory, TrajectoryError};
use crate::so3::{exp_so3, log_so3, Rotation, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub position: Vec3,
    pub attitude: Rotation,
}

/// Pose sequence through a conduit.
///
/// Positions follow a clamped cubic spline in time (C², at rest at both
/// ends) with knot spacing `distance / speed`. Between consecutive waypoints
/// the attitude moves along the geodesic `R_k exp(s(τ) u_k)` with a quintic
/// time-blend `s`, so body rate and angular acceleration are analytic and
/// vanish at every waypoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PipeRef {
    knots: Vec<f64>,
    points: Vec<Vec3>,
    /// Spline second derivatives at the knots.
    moments: Vec<Vec3>,
    attitudes: Vec<Rotation>,
    /// `log(R_kᵀ R_{k+1})` per segment.
    rotations: Vec<Vec3>,
}

impl PipeRef {
    pub fn new(waypoints: &[Waypoint], speed: f64) -> Result<Self, TrajectoryError> {
        if waypoints.len() < 2 {
            return Err(TrajectoryError::TooFewWaypoints(waypoints.len()));
        }
        if !(speed.is_finite() && speed > 0.0) {
            return Err(TrajectoryError::NotPositive("speed", speed));
        }
        if waypoints.iter().any(|w| w.position.iter().any(|x| !x.is_finite())) {
            return Err(TrajectoryError::NonFinite);
        }
        let mut knots = vec![0.0];
        for (i, pair) in waypoints.windows(2).enumerate() {
            let d = (pair[1].position - pair[0].position).norm();
            if d < 1e-9 {
                return Err(TrajectoryError::CoincidentWaypoints(i, i + 1));
            }
            knots.push(knots[i] + d / speed);
        }
        let points: Vec<Vec3> = waypoints.iter().map(|w| w.position).collect();
        let moments = clamped_spline_moments(&knots, &points);
        let attitudes: Vec<Rotation> = waypoints.iter().map(|w| w.attitude).collect();
        let rotations = attitudes.windows(2).map(|r| log_so3(&(r[0].transpose() * r[1]))).collect();
        Ok(Self { knots, points, moments, attitudes, rotations })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    fn segment(&self, t: f64) -> usize {
        let last = self.knots.len() - 2;
        match self.knots.binary_search_by(|k| k.total_cmp(&t)) {
            Ok(i) => i.min(last),
            Err(i) => i.saturating_sub(1).min(last),
        }
    }
}

/// Second derivatives of the clamped (zero end-slope) cubic spline through
/// `points` at times `knots`, by the tridiagonal (Thomas) solve.
fn clamped_spline_moments(knots: &[f64], points: &[Vec3]) -> Vec<Vec3> {
    let n = knots.len();
    let h: Vec<f64> = knots.windows(2).map(|k| k[1] - k[0]).collect();
    let slope: Vec<Vec3> = (0..n - 1).map(|i| (points[i + 1] - points[i]) / h[i]).collect();
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![Vec3::zeros(); n];
    diag[0] = 2.0 * h[0];
    sup[0] = h[0];
    rhs[0] = slope[0] * 6.0;
    for i in 1..n - 1 {
        sub[i] = h[i - 1];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        sup[i] = h[i];
        rhs[i] = (slope[i] - slope[i - 1]) * 6.0;
    }
    sub[n - 1] = h[n - 2];
    diag[n - 1] = 2.0 * h[n - 2];
    rhs[n - 1] = -slope[n - 2] * 6.0;

    for i in 1..n {
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        let prev = rhs[i - 1];
        rhs[i] -= prev * w;
    }
    let mut m = vec![Vec3::zeros(); n];
    m[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        m[i] = (rhs[i] - m[i + 1] * sup[i]) / diag[i];
    }
    m
}

impl Trajectory for PipeRef {
    fn sample(&self, t: f64) -> ReferenceSample {
        let end = *self.knots.last().expect("at least two knots");
        if t >= end {
            return ReferenceSample::hold(*self.points.last().unwrap(), *self.attitudes.last().unwrap());
        }
        let t = t.max(0.0);
        let i = self.segment(t);
        let (x0, x1) = (self.knots[i], self.knots[i + 1]);
        let h = x1 - x0;
        let (a, b) = (x1 - t, t - x0);
        let (m0, m1) = (self.moments[i], self.moments[i + 1]);
        let (y0, y1) = (self.points[i], self.points[i + 1]);
        let c0 = y0 / h - m0 * (h / 6.0);
        let c1 = y1 / h - m1 * (h / 6.0);
        let p_d = m0 * (a * a * a / (6.0 * h)) + m1 * (b * b * b / (6.0 * h)) + c0 * a + c1 * b;
        let v_d = -m0 * (a * a / (2.0 * h)) + m1 * (b * b / (2.0 * h)) - c0 + c1;
        let a_d = (m0 * a + m1 * b) / h;

        let u = self.rotations[i];
        let (s, ds, dds) = smoothstep5(b / h);
        let r_d = Rotation::from_matrix_unchecked(self.attitudes[i].matrix() * exp_so3(&(u * s)).matrix());
        ReferenceSample { p_d, v_d, a_d, r_d, w_d: u * (ds / h), wdot_d: u * (dds / (h * h)) }
    }

    fn duration(&self) -> f64 {
        *self.knots.last().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::{euler_zxy_to_rotation, psi_error, EulerZxy};
    use crate::trajectories::consistency_scan;
    use std::f64::consts::FRAC_PI_2;

    fn wp(x: f64, y: f64, z: f64, pitch: f64) -> Waypoint {
        Waypoint { position: Vec3::new(x, y, z), attitude: euler_zxy_to_rotation(&EulerZxy::new(0.0, 0.0, pitch)) }
    }

    fn conduit() -> PipeRef {
        PipeRef::new(
            &[
                wp(0.0, 0.0, 1.0, 0.0),
                wp(2.0, 0.0, 1.0, 0.0),
                wp(3.0, 0.0, 2.0, -FRAC_PI_2 / 2.0),
                wp(3.0, 0.0, 4.0, -FRAC_PI_2),
                wp(3.0, 0.0, 6.0, -FRAC_PI_2),
            ],
            0.5,
        )
        .unwrap()
    }

    #[test]
    fn interpolates_waypoints_exactly() {
        let pipe = conduit();
        let expected = [
            (Vec3::new(0.0, 0.0, 1.0), 0.0),
            (Vec3::new(2.0, 0.0, 1.0), 0.0),
            (Vec3::new(3.0, 0.0, 2.0), -FRAC_PI_2 / 2.0),
            (Vec3::new(3.0, 0.0, 4.0), -FRAC_PI_2),
            (Vec3::new(3.0, 0.0, 6.0), -FRAC_PI_2),
        ];
        for (k, (p, pitch)) in pipe.knots().iter().zip(expected) {
            let s = pipe.sample(*k);
            assert!((s.p_d - p).norm() < 1e-12, "knot {k}");
            let r = euler_zxy_to_rotation(&EulerZxy::new(0.0, 0.0, pitch));
            assert!(psi_error(&s.r_d, &r) < 1e-24);
            assert!(s.w_d.norm() < 1e-15);
        }
        let start = pipe.sample(0.0);
        assert!(start.v_d.norm() < 1e-12);
        let end = pipe.sample(pipe.duration() - 1e-12);
        assert!(end.v_d.norm() < 1e-9);
    }

    #[test]
    fn kinematically_consistent() {
        let pipe = conduit();
        let dt = 1e-3;
        let rep = consistency_scan(&pipe, dt, pipe.duration());
        let c = 10.0;
        assert!(rep.max_velocity_error <= c * dt, "{rep:?}");
        assert!(rep.max_acceleration_error <= c * dt, "{rep:?}");
        assert!(rep.max_rate_error <= c * dt, "{rep:?}");
        assert!(rep.max_rate_derivative_error <= c * dt, "{rep:?}");
        assert!(rep.max_step_psi < 1e-4);
    }

    #[test]
    fn spline_is_c2_at_interior_knots() {
        let pipe = conduit();
        for &k in &pipe.knots()[1..pipe.knots().len() - 1] {
            let (a, b) = (pipe.sample(k - 1e-9), pipe.sample(k + 1e-9));
            assert!((a.v_d - b.v_d).norm() < 1e-7);
            assert!((a.a_d - b.a_d).norm() < 1e-6);
        }
    }

    #[test]
    fn rejects_degenerate_input() {
        assert_eq!(PipeRef::new(&[wp(0.0, 0.0, 0.0, 0.0)], 1.0), Err(TrajectoryError::TooFewWaypoints(1)));
        assert_eq!(
            PipeRef::new(&[wp(0.0, 0.0, 0.0, 0.0), wp(1.0, 0.0, 0.0, 0.0), wp(1.0, 0.0, 0.0, 0.3)], 1.0),
            Err(TrajectoryError::CoincidentWaypoints(1, 2))
        );
        assert!(PipeRef::new(&[wp(0.0, 0.0, 0.0, 0.0), wp(1.0, 0.0, 0.0, 0.0)], 0.0).is_err());
    }
}
