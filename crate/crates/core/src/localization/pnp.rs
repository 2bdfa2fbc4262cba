//! Camera intrinsics and robust perspective-n-point pose estimation.

use alloc::vec::Vec;

use nalgebra::{DMatrix, Matrix3, Matrix3x4, Matrix4, Matrix6, Rotation3, Vector2, Vector3, Vector6};

use super::pose::{orthonormalize, Pose};
use crate::error::{Error, Result};
use crate::seed;

/// Points drawn per RANSAC hypothesis.
pub const MIN_SAMPLE: usize = 6;

/// Pinhole intrinsics with the image size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for Intrinsics {
    fn default() -> Self {
        Intrinsics { fx: 500.0, fy: 500.0, cx: 320.0, cy: 240.0, width: 640, height: 480 }
    }
}

impl Intrinsics {
    pub fn validate(&self) -> Result<()> {
        let vals = [self.fx, self.fy, self.cx, self.cy];
        if !vals.iter().all(|v| v.is_finite()) || self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::InvalidArgument("focal lengths must be positive and finite".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument("image size must be positive".into()));
        }
        Ok(())
    }

    /// The same camera at `factor` times the resolution.
    pub fn scaled(&self, factor: f64) -> Intrinsics {
        Intrinsics {
            fx: self.fx * factor,
            fy: self.fy * factor,
            cx: self.cx * factor,
            cy: self.cy * factor,
            width: ((self.width as f64 * factor) as u32).max(1),
            height: ((self.height as f64 * factor) as u32).max(1),
        }
    }

    /// Pixel of a camera-frame point, `None` behind the camera.
    pub fn project_camera(&self, p: &Vector3<f64>) -> Option<Vector2<f64>> {
        if p[2] <= 0.0 {
            return None;
        }
        Some(Vector2::new(self.fx * p[0] / p[2] + self.cx, self.fy * p[1] / p[2] + self.cy))
    }

    pub fn project(&self, pose: &Pose, x: &Vector3<f64>) -> Option<Vector2<f64>> {
        self.project_camera(&pose.transform(x))
    }

    pub fn contains(&self, px: &Vector2<f64>) -> bool {
        px[0] >= 0.0 && px[1] >= 0.0 && px[0] < self.width as f64 && px[1] < self.height as f64
    }

    fn normalize(&self, px: &Vector2<f64>) -> Vector2<f64> {
        Vector2::new((px[0] - self.cx) / self.fx, (px[1] - self.cy) / self.fy)
    }
}

/// A 2D observation paired with the 3D point it is believed to show.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub pixel: Vector2<f64>,
    pub point: Vector3<f64>,
}

/// Reprojection error in pixels, infinite behind the camera.
pub fn reprojection_error(pose: &Pose, k: &Intrinsics, c: &Correspondence) -> f64 {
    match k.project(pose, &c.point) {
        Some(px) => (px - c.pixel).norm(),
        None => f64::INFINITY,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Inlier threshold on the reprojection error.
    pub inlier_px: f64,
    pub seed: u64,
    /// Gauss-Newton iterations of the final refinement.
    pub refine_iterations: usize,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig { iterations: 1000, inlier_px: 3.0, seed: 0, refine_iterations: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PnpSolution {
    pub pose: Pose,
    /// Indices into the correspondence list, ascending.
    pub inliers: Vec<usize>,
}

/// Linear pose from at least six correspondences, with Hartley
/// normalization of both point sets.
pub fn dlt_pose(corrs: &[Correspondence], k: &Intrinsics) -> Result<Pose> {
    let n = corrs.len();
    if n < MIN_SAMPLE {
        return Err(Error::InvalidArgument(alloc::format!(
            "DLT needs at least {MIN_SAMPLE} correspondences, got {n}"
        )));
    }
    let uv: Vec<Vector2<f64>> = corrs.iter().map(|c| k.normalize(&c.pixel)).collect();
    let c2 = uv.iter().sum::<Vector2<f64>>() / n as f64;
    let d2 = uv.iter().map(|p| (p - c2).norm()).sum::<f64>() / n as f64;
    let c3 = corrs.iter().map(|c| c.point).sum::<Vector3<f64>>() / n as f64;
    let d3 = corrs.iter().map(|c| (c.point - c3).norm()).sum::<f64>() / n as f64;
    if !(d2 > 0.0 && d3 > 0.0) {
        return Err(Error::Degenerate("coincident correspondences".into()));
    }
    let s2 = core::f64::consts::SQRT_2 / d2;
    let s3 = libm::sqrt(3.0) / d3;
    let t2 = Matrix3::new(s2, 0.0, -s2 * c2[0], 0.0, s2, -s2 * c2[1], 0.0, 0.0, 1.0);
    let t3 = Matrix4::new(
        s3, 0.0, 0.0, -s3 * c3[0], 0.0, s3, 0.0, -s3 * c3[1], 0.0, 0.0, s3, -s3 * c3[2], 0.0, 0.0, 0.0, 1.0,
    );

    let mut a = DMatrix::<f64>::zeros(2 * n, 12);
    for (i, (c, p)) in corrs.iter().zip(&uv).enumerate() {
        let x = [s3 * (c.point[0] - c3[0]), s3 * (c.point[1] - c3[1]), s3 * (c.point[2] - c3[2]), 1.0];
        let (u, v) = (s2 * (p[0] - c2[0]), s2 * (p[1] - c2[1]));
        for j in 0..4 {
            a[(2 * i, j)] = x[j];
            a[(2 * i, 8 + j)] = -u * x[j];
            a[(2 * i + 1, 4 + j)] = x[j];
            a[(2 * i + 1, 8 + j)] = -v * x[j];
        }
    }
    let svd = a.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Degenerate("SVD failed".into()))?;
    let smallest = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, _)| i)
        .unwrap();
    let h = vt.row(smallest);
    let pn = Matrix3x4::from_fn(|r, c| h[4 * r + c]);
    let t2_inv = t2.try_inverse().ok_or_else(|| Error::Degenerate("normalization".into()))?;
    let mut p = t2_inv * pn * t3;
    let mut m: Matrix3<f64> = p.fixed_view::<3, 3>(0, 0).into();
    if m.determinant() < 0.0 {
        p = -p;
        m = -m;
    }
    let sv = m.svd(false, false).singular_values;
    let scale = (sv[0] + sv[1] + sv[2]) / 3.0;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Degenerate("degenerate DLT solution".into()));
    }
    let r = orthonormalize(&m)?;
    let t = Vector3::new(p[(0, 3)], p[(1, 3)], p[(2, 3)]) / scale;
    Pose::new(r, t)
}

fn squared_cost(pose: &Pose, k: &Intrinsics, corrs: &[Correspondence]) -> f64 {
    corrs.iter().map(|c| {
            let e = reprojection_error(pose, k, c);
            e * e
        }).sum()
}

/// Gauss-Newton on the summed squared reprojection error, with rotation
/// updates applied on the left in the camera frame.
pub fn refine_pose(init: &Pose, corrs: &[Correspondence], k: &Intrinsics, iterations: usize) -> Result<Pose> {
    let mut pose = *init;
    let mut cost = squared_cost(&pose, k, corrs);
    for _ in 0..iterations {
        let mut jtj = Matrix6::<f64>::zeros();
        let mut jtr = Vector6::<f64>::zeros();
        for c in corrs {
            let rx = pose.rotation() * c.point;
            let p = rx + pose.translation();
            if p[2] <= 0.0 {
                continue;
            }
            let (iz, iz2) = (1.0 / p[2], 1.0 / (p[2] * p[2]));
            let r = Vector2::new(k.fx * p[0] * iz + k.cx - c.pixel[0], k.fy * p[1] * iz + k.cy - c.pixel[1]);
            // d(pixel)/d(p) and d(p)/d(omega, dt) = [-[Rx]x | I]
            let dpx = [k.fx * iz, 0.0, -k.fx * p[0] * iz2];
            let dpy = [0.0, k.fy * iz, -k.fy * p[1] * iz2];
            let skew = Matrix3::new(0.0, -rx[2], rx[1], rx[2], 0.0, -rx[0], -rx[1], rx[0], 0.0);
            for (row, res) in [(dpx, r[0]), (dpy, r[1])] {
                let d = Vector3::new(row[0], row[1], row[2]);
                let w = -(skew.transpose() * d);
                let j = Vector6::new(w[0], w[1], w[2], d[0], d[1], d[2]);
                jtj += j * j.transpose();
                jtr += j * res;
            }
        }
        let Some(step) = jtj.cholesky().map(|ch| ch.solve(&(-jtr))) else {
            break;
        };
        let omega = Vector3::new(step[0], step[1], step[2]);
        let dt = Vector3::new(step[3], step[4], step[5]);
        let q = Rotation3::new(omega).into_inner();
        let cand = Pose::new(orthonormalize(&(q * pose.rotation()))?, pose.translation() + dt)?;
        let c = squared_cost(&cand, k, corrs);
        if !(c <= cost) {
            break;
        }
        let converged = step.norm() < 1e-15 || cost - c <= 1e-30;
        pose = cand;
        cost = c;
        if converged {
            break;
        }
    }
    Ok(pose)
}

fn inliers_of(pose: &Pose, k: &Intrinsics, corrs: &[Correspondence], thresh: f64) -> Vec<usize> {
    (0..corrs.len()).filter(|&i| reprojection_error(pose, k, &corrs[i]) < thresh).collect()
}

/// RANSAC over six-point DLT hypotheses followed by Gauss-Newton on the
/// inliers of the best hypothesis.
pub fn pnp_ransac(corrs: &[Correspondence], k: &Intrinsics, cfg: &RansacConfig) -> Result<PnpSolution> {
    k.validate()?;
    if corrs.len() < MIN_SAMPLE {
        return Err(Error::InvalidArgument(alloc::format!(
            "PnP needs at least {MIN_SAMPLE} correspondences, got {}",
            corrs.len()
        )));
    }
    let mut rng = seed::rng(cfg.seed);
    let mut best: Option<(Pose, Vec<usize>)> = None;
    let mut sample = Vec::with_capacity(MIN_SAMPLE);
    for _ in 0..cfg.iterations.max(1) {
        sample.clear();
        sample.extend(rand::seq::index::sample(&mut rng, corrs.len(), MIN_SAMPLE).iter().map(|i| corrs[i]));
        let Ok(hyp) = dlt_pose(&sample, k) else {
            continue;
        };
        let inl = inliers_of(&hyp, k, corrs, cfg.inlier_px);
        if best.as_ref().is_none_or(|(_, b)| inl.len() > b.len()) {
            best = Some((hyp, inl));
        }
    }
    let Some((mut pose, mut inliers)) = best.filter(|(_, inl)| inl.len() >= MIN_SAMPLE) else {
        return Err(Error::Degenerate(alloc::format!("no hypothesis with {MIN_SAMPLE} inliers")));
    };
    for _ in 0..3 {
        let subset: Vec<Correspondence> = inliers.iter().map(|&i| corrs[i]).collect();
        pose = refine_pose(&pose, &subset, k, cfg.refine_iterations)?;
        let next = inliers_of(&pose, k, corrs, cfg.inlier_px);
        if next == inliers {
            break;
        }
        if next.len() < MIN_SAMPLE {
            break;
        }
        inliers = next;
    }
    Ok(PnpSolution { pose, inliers })
}
