//! Rotation-group primitives.
//!
//! Attitudes are kept as full 3x3 rotation matrices (body to world). Every
//! control and dynamics expression in this crate is written in matrix form,
//! so quaternions only appear at the telemetry boundary.

use std::ops::Mul;

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Below this rotation angle the exponential map switches to its Taylor series.
pub const SMALL_ANGLE: f64 = 1e-6;

/// Orthonormality defect above which a matrix is re-projected onto SO(3).
pub const ORTHO_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum So3Error {
    #[error("matrix is not antisymmetric (symmetric part {0:.3e} exceeds tolerance)")]
    NotSkew(f64),
    #[error("matrix is not a rotation (orthonormality defect {defect:.3e}, det {det:.6})")]
    NotRotation { defect: f64, det: f64 },
    #[error("non-finite component")]
    NonFinite,
}

/// Skew-symmetric matrix such that `hat(v) * w == v.cross(&w)`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`]. The input is antisymmetrized before extraction; a
/// symmetric part larger than `1e-9` (max entry) is rejected.
pub fn vee(m: &Mat3) -> Result<Vec3, So3Error> {
    let sym = (m + m.transpose()) * 0.5;
    let defect = sym.amax();
    if !defect.is_finite() {
        return Err(So3Error::NonFinite);
    }
    if defect > ORTHO_TOL {
        return Err(So3Error::NotSkew(defect));
    }
    Ok(vee_unchecked(m))
}

/// Vee of the antisymmetric part of `m`, without checking symmetry.
pub(crate) fn vee_unchecked(m: &Mat3) -> Vec3 {
    Vec3::new(0.5 * (m[(2, 1)] - m[(1, 2)]), 0.5 * (m[(0, 2)] - m[(2, 0)]), 0.5 * (m[(1, 0)] - m[(0, 1)]))
}

/// A proper rotation matrix (body to world when used as an attitude).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation(Mat3);

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Mat3::identity())
    }

    /// Checked constructor. Matrices whose defect is above [`ORTHO_TOL`] but
    /// still small (< 1e-3) are polar-projected back onto SO(3); anything
    /// further away is rejected.
    pub fn from_matrix(m: Mat3) -> Result<Self, So3Error> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(So3Error::NonFinite);
        }
        let defect = orthonormality_defect(&m);
        let det = m.determinant();
        if defect <= ORTHO_TOL && (det - 1.0).abs() <= ORTHO_TOL {
            return Ok(Rotation(m));
        }
        if defect < 1e-3 && det > 0.0 {
            return Ok(Rotation(polar_project(&m)));
        }
        Err(So3Error::NotRotation { defect, det })
    }

    /// Build from columns (body axes expressed in the world frame).
    pub fn from_columns(x: &Vec3, y: &Vec3, z: &Vec3) -> Result<Self, So3Error> {
        Self::from_matrix(Mat3::from_columns(&[*x, *y, *z]))
    }

    /// Wraps a matrix the caller guarantees to be a rotation.
    pub(crate) fn from_matrix_unchecked(m: Mat3) -> Self {
        Rotation(m)
    }

    pub fn about_x(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Mat3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c))
    }

    pub fn about_y(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c))
    }

    pub fn about_z(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Rotation(Mat3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Re-projects onto SO(3) when the orthonormality defect exceeds [`ORTHO_TOL`].
    pub fn renormalized(self) -> Rotation {
        if orthonormality_defect(&self.0) > ORTHO_TOL {
            Rotation(polar_project(&self.0))
        } else {
            self
        }
    }

    /// Unit quaternion `[w, x, y, z]` with `w >= 0`.
    pub fn to_quaternion_wxyz(&self) -> [f64; 4] {
        let q = UnitQuaternion::from_matrix(&self.0);
        let s = if q.w < 0.0 { -1.0 } else { 1.0 };
        [s * q.w, s * q.i, s * q.j, s * q.k]
    }

    pub fn column(&self, i: usize) -> Vec3 {
        self.0.column(i).into_owned()
    }
}

impl Mul for Rotation {
    type Output = Rotation;
    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<&Rotation> for &Rotation {
    type Output = Rotation;
    fn mul(self, rhs: &Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<Vec3> for Rotation {
    type Output = Vec3;
    fn mul(self, rhs: Vec3) -> Vec3 {
        self.0 * rhs
    }
}

impl Mul<&Vec3> for &Rotation {
    type Output = Vec3;
    fn mul(self, rhs: &Vec3) -> Vec3 {
        self.0 * rhs
    }
}

/// Max-entry deviation of `MᵀM` from the identity.
pub fn orthonormality_defect(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).amax()
}

/// Nearest rotation in the Frobenius sense, `U Vᵀ` from the SVD.
fn polar_project(m: &Mat3) -> Mat3 {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        r = u * v_t;
    }
    r
}

/// Exponential map from a rotation vector (rad) via Rodrigues' formula.
pub fn exp_so3(v: &Vec3) -> Rotation {
    let theta2 = v.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = hat(v);
    Rotation(Mat3::identity() + k * a + k * k * b)
}

/// Logarithm map, inverse of [`exp_so3`] with angle in `[0, π]`.
pub fn log_so3(r: &Rotation) -> Vec3 {
    let m = r.matrix();
    let cos_theta = ((m.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let axis_sin = vee_unchecked(m); // = sin(θ)·axis
    let sin_theta = axis_sin.norm();
    let theta = sin_theta.atan2(cos_theta);
    if theta < SMALL_ANGLE {
        return axis_sin * (1.0 + theta * theta / 6.0);
    }
    if cos_theta > -0.9 {
        return axis_sin * (theta / sin_theta);
    }
    // Near π: recover the axis from the symmetric part, R + Rᵀ = 2cI + 2(1-c) aaᵀ.
    let s = (m + m.transpose()) * 0.5 - Mat3::identity() * cos_theta;
    let mut best = 0;
    for i in 1..3 {
        if s[(i, i)] > s[(best, best)] {
            best = i;
        }
    }
    let mut axis: Vec3 = s.column(best).into_owned();
    axis /= axis.norm();
    if axis.dot(&axis_sin) < 0.0 {
        axis = -axis;
    }
    axis * theta
}

/// Yaw/roll/pitch angles of the Z-X-Y sequence `R = Rz(yaw)·Rx(roll)·Ry(pitch)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EulerZxy {
    pub yaw: f64,
    pub roll: f64,
    pub pitch: f64,
}

impl EulerZxy {
    pub fn new(yaw: f64, roll: f64, pitch: f64) -> Self {
        Self { yaw, roll, pitch }
    }
}

pub fn euler_zxy_to_rotation(e: &EulerZxy) -> Rotation {
    Rotation::about_z(e.yaw) * Rotation::about_x(e.roll) * Rotation::about_y(e.pitch)
}

/// Recovers Z-X-Y angles with roll in `[-π/2, π/2]`.
///
/// The second value is `true` at the roll = ±π/2 singularity, where yaw and
/// pitch are not separable; yaw is then reported as zero.
pub fn rotation_to_euler_zxy(r: &Rotation) -> (EulerZxy, bool) {
    let m = r.matrix();
    let s_roll = m[(2, 1)].clamp(-1.0, 1.0);
    let roll = s_roll.asin();
    let c_roll = (m[(2, 0)].powi(2) + m[(2, 2)].powi(2)).sqrt();
    if c_roll < 1e-9 {
        let pitch = m[(0, 2)].atan2(m[(0, 0)]);
        return (EulerZxy::new(0.0, roll, pitch), true);
    }
    let pitch = (-m[(2, 0)]).atan2(m[(2, 2)]);
    let yaw = (-m[(0, 1)]).atan2(m[(1, 1)]);
    (EulerZxy::new(yaw, roll, pitch), false)
}

/// Attitude error function `½ tr(I − R_dᵀ R)`, in `[0, 2]`.
///
/// Evaluated as `‖R − R_d‖²_F / 4`, which is algebraically identical for
/// rotations but keeps full relative precision for small errors.
pub fn psi_error(r: &Rotation, r_d: &Rotation) -> f64 {
    (r.matrix() - r_d.matrix()).norm_squared() * 0.25
}
