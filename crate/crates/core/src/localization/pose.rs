//! Rigid camera poses and their error metrics.

use nalgebra::{Matrix3, Rotation3, Vector3};

use alloc::format;

use crate::error::{Error, Result};

/// Translation threshold of a correct localization, in scene units.
pub const T_THRESHOLD: f64 = 0.1;
/// Rotation threshold of a correct localization, in degrees.
pub const R_THRESHOLD_DEG: f64 = 5.0;

const ORTHO_TOL: f64 = 1e-9;

/// World-to-camera pose: `x_cam = R * X + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    r: Matrix3<f64>,
    t: Vector3<f64>,
}

impl Pose {
    pub fn new(r: Matrix3<f64>, t: Vector3<f64>) -> Result<Self> {
        if !r.iter().chain(t.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("pose"));
        }
        let dev = (r.transpose() * r - Matrix3::identity()).amax();
        if dev >= ORTHO_TOL || r.determinant() <= 0.0 {
            return Err(Error::InvalidArgument(format!("not a rotation (orthogonality error {dev:e})")));
        }
        Ok(Pose { r, t })
    }

    pub fn identity() -> Self {
        Pose { r: Matrix3::identity(), t: Vector3::zeros() }
    }

    /// Projects an arbitrary matrix onto the nearest rotation first.
    pub fn orthonormalized(m: Matrix3<f64>, t: Vector3<f64>) -> Result<Self> {
        Pose::new(orthonormalize(&m)?, t)
    }

    /// A camera at `center` looking at `target`, with image rows pointing
    /// away from `up`.
    pub fn look_at(center: Vector3<f64>, target: Vector3<f64>, up: Vector3<f64>) -> Result<Self> {
        let z = target - center;
        let x = z.cross(&up);
        if z.norm() == 0.0 || x.norm() < 1e-12 * z.norm() * up.norm() {
            return Err(Error::Degenerate("viewing direction parallel to up vector".into()));
        }
        let z = z.normalize();
        let x = x.normalize();
        let y = z.cross(&x);
        let r = Matrix3::from_rows(&[x.transpose(), y.transpose(), z.transpose()]);
        let r = orthonormalize(&r)?;
        Pose::new(r, -(r * center))
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.r
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.t
    }

    /// Camera center in world coordinates, `-R^T t`.
    pub fn center(&self) -> Vector3<f64> {
        -(self.r.transpose() * self.t)
    }

    pub fn transform(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.r * x + self.t
    }

    /// Applies a camera-frame rotation about the camera center.
    pub fn rotated_in_camera(&self, q: &Matrix3<f64>) -> Result<Self> {
        Pose::orthonormalized(q * self.r, q * self.t)
    }

    /// `R` row-major followed by `t`.
    pub fn to_array(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for i in 0..3 {
            for j in 0..3 {
                out[3 * i + j] = self.r[(i, j)];
            }
            out[9 + i] = self.t[i];
        }
        out
    }

    pub fn from_array(a: &[f64; 12]) -> Result<Self> {
        let r = Matrix3::from_row_slice(&a[..9]);
        Pose::new(r, Vector3::new(a[9], a[10], a[11]))
    }
}

/// Nearest rotation in the Frobenius sense.
pub fn orthonormalize(m: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut d = Matrix3::identity();
    if (u * vt).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let r = u * d * vt;
    if !r.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("rotation"));
    }
    Ok(r)
}

/// Rotation by `angle` radians about `axis`.
pub fn axis_angle(axis: Vector3<f64>, angle: f64) -> Matrix3<f64> {
    Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle).into_inner()
}

/// Geodesic angle between two rotations, in degrees within [0, 180].
pub fn rotation_angle_deg(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let m = a.transpose() * b;
    // atan2 of the sine and cosine parts is accurate near 0 and 180 degrees,
    // where the arccos of the trace alone loses precision.
    let s = Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]).norm();
    let c = m.trace() - 1.0;
    libm::atan2(s, c).to_degrees().clamp(0.0, 180.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseError {
    /// Distance between camera centers.
    pub t_error: f64,
    /// Degrees.
    pub r_error: f64,
}

impl PoseError {
    /// Returned for queries without an estimate.
    pub const FAILED: PoseError = PoseError { t_error: f64::INFINITY, r_error: 180.0 };

    /// Both errors strictly below the thresholds.
    pub fn is_correct(&self, t_max: f64, r_max_deg: f64) -> bool {
        self.t_error < t_max && self.r_error < r_max_deg
    }
}

pub fn pose_errors(estimate: &Pose, truth: &Pose) -> PoseError {
    PoseError {
        t_error: (estimate.center() - truth.center()).norm(),
        r_error: rotation_angle_deg(estimate.rotation(), truth.rotation()),
    }
}
