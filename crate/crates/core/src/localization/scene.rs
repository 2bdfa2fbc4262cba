//! Synthetic ground-truth maps, event views and the match oracle.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector2, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::descriptor::{global_descriptor, GlobalDescriptor};
use super::pnp::{Correspondence, Intrinsics};
use super::pose::{axis_angle, Pose};
use crate::error::{Error, Result};
use crate::events::{voxelize, FrameImage, VoxelGrid};
use crate::seed;
use crate::synth::{events_from_frames, MAX_INTENSITY, MIN_INTENSITY};

#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub pose: Pose,
    pub descriptor: GlobalDescriptor,
    /// Exact projection of each visible point, parallel to `visibility`.
    pub keypoints: Vec<Vector2<f64>>,
    /// Ascending indices into the map's points.
    pub visibility: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneMap {
    pub intrinsics: Intrinsics,
    pub points3d: Vec<Vector3<f64>>,
    pub references: Vec<Reference>,
}

impl SceneMap {
    /// Checks visibility indices and keypoint projections.
    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        for (i, r) in self.references.iter().enumerate() {
            if r.keypoints.len() != r.visibility.len() {
                return Err(crate::error::shape_err(r.visibility.len(), r.keypoints.len()));
            }
            for (kp, &v) in r.keypoints.iter().zip(&r.visibility) {
                let x = self
                    .points3d
                    .get(v as usize)
                    .ok_or_else(|| Error::OutOfBounds(alloc::format!("reference {i} sees point {v}")))?;
                if !self.intrinsics.contains(kp) || self.intrinsics.project(&r.pose, x).is_none() {
                    return Err(Error::OutOfBounds(alloc::format!("reference {i} keypoint of point {v}")));
                }
            }
        }
        Ok(())
    }

    pub fn descriptors(&self) -> Vec<GlobalDescriptor> {
        self.references.iter().map(|r| r.descriptor.clone()).collect()
    }
}

/// A held-out query with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub pose: Pose,
    /// Points projecting into the query frame, ascending.
    pub visible: Vec<u32>,
    /// Event voxel grid recorded at the query pose.
    pub voxel: VoxelGrid,
}

/// How event views of the point cloud are rendered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderConfig {
    /// Resolution of the event sensor relative to the intrinsics.
    pub scale: f64,
    /// Gaussian splat radius in sensor pixels.
    pub splat_sigma: f64,
    pub background: f64,
    pub bins: usize,
    /// Frames fed to the contrast simulator.
    pub frames: usize,
    pub contrast: f64,
    /// Camera pan over the recording, in degrees.
    pub pan_deg: f64,
    /// Recording length in seconds.
    pub duration: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            scale: 0.1,
            splat_sigma: 1.0,
            background: MIN_INTENSITY,
            bins: 5,
            frames: 8,
            contrast: 0.05,
            pan_deg: 1.0,
            duration: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneConfig {
    pub n_points: usize,
    pub n_refs: usize,
    pub n_queries: usize,
    pub intrinsics: Intrinsics,
    pub render: RenderConfig,
    /// Distance of the camera trajectory from the cloud center.
    pub orbit_radius: f64,
    /// Bound on the random offsets of query poses from the trajectory.
    pub query_jitter: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            n_points: 300,
            n_refs: 20,
            n_queries: 50,
            intrinsics: Intrinsics::default(),
            render: RenderConfig::default(),
            orbit_radius: 1.0,
            query_jitter: 0.05,
        }
    }
}

const MIN_VISIBLE: usize = 6;
const MAX_ATTEMPTS: u64 = 100;

/// Points projecting inside the frame with positive depth.
pub fn visible_points(points: &[Vector3<f64>], pose: &Pose, k: &Intrinsics) -> Vec<u32> {
    (0..points.len() as u32)
        .filter(|&i| k.project(pose, &points[i as usize]).is_some_and(|p| k.contains(&p)))
        .collect()
}

/// Rejects point sets that do not span three dimensions.
fn spans_volume(points: &[Vector3<f64>], idx: &[u32]) -> bool {
    if idx.len() < MIN_VISIBLE {
        return false;
    }
    let n = idx.len() as f64;
    let mean = idx.iter().map(|&i| points[i as usize]).sum::<Vector3<f64>>() / n;
    let mut cov = Matrix3::zeros();
    for &i in idx {
        let d = points[i as usize] - mean;
        cov += d * d.transpose();
    }
    let ev = (cov / n).symmetric_eigenvalues();
    ev.min() > 1e-6 * ev.max().max(1e-300)
}

fn orbit_pose(phi: f64, radius: f64, lift: f64, target: Vector3<f64>) -> Result<Pose> {
    let center = Vector3::new(radius * libm::cos(phi), radius * libm::sin(phi), lift);
    Pose::look_at(center, target, Vector3::z())
}

/// Gaussian splats of the points over a dark background.
pub fn render_view(points: &[Vector3<f64>], brightness: &[f64], pose: &Pose, k: &Intrinsics, cfg: &RenderConfig) -> FrameImage {
    let (w, h) = (k.width as usize, k.height as usize);
    let mut px = vec![cfg.background; w * h];
    let s = cfg.splat_sigma;
    let reach = libm::ceil(3.0 * s) as i64;
    for (x, &a) in points.iter().zip(brightness) {
        let Some(p) = k.project(pose, x) else { continue };
        let (u0, v0) = (libm::floor(p[0]) as i64, libm::floor(p[1]) as i64);
        for v in (v0 - reach).max(0)..=(v0 + reach).min(h as i64 - 1) {
            for u in (u0 - reach).max(0)..=(u0 + reach).min(w as i64 - 1) {
                let (du, dv) = (u as f64 + 0.5 - p[0], v as f64 + 0.5 - p[1]);
                px[v as usize * w + u as usize] += a * libm::exp(-(du * du + dv * dv) / (2.0 * s * s));
            }
        }
    }
    px.iter_mut().for_each(|v| *v = v.clamp(MIN_INTENSITY, MAX_INTENSITY));
    FrameImage::new(h, w, px).expect("clamped pixels are valid")
}

/// Voxel grid of a short pan of the camera about its vertical axis.
pub fn render_voxel(points: &[Vector3<f64>], brightness: &[f64], pose: &Pose, k: &Intrinsics, cfg: &RenderConfig) -> Result<VoxelGrid> {
    if cfg.frames < 2 || cfg.bins == 0 {
        return Err(Error::InvalidArgument("need at least two frames and one bin".into()));
    }
    let sensor = k.scaled(cfg.scale);
    let mut frames = Vec::with_capacity(cfg.frames);
    let mut times = Vec::with_capacity(cfg.frames);
    for j in 0..cfg.frames {
        let f = j as f64 / (cfg.frames - 1) as f64;
        let q = axis_angle(Vector3::y(), (cfg.pan_deg * f).to_radians());
        frames.push(render_view(points, brightness, &pose.rotated_in_camera(&q)?, &sensor, cfg));
        times.push(cfg.duration * f);
    }
    let stream = events_from_frames(&frames, &times, cfg.contrast)?;
    voxelize(&stream, cfg.bins)
}

/// Per-pixel total event magnitude, scaled so the maximum is 1.
pub fn voxel_image(grid: &VoxelGrid) -> FrameImage {
    let (bins, h, w) = grid.shape();
    let mut px = vec![0.0; h * w];
    for l in 0..bins {
        for (i, v) in grid.data()[l * h * w..(l + 1) * h * w].iter().enumerate() {
            px[i] += libm::fabs(*v);
        }
    }
    let max = px.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        px.iter_mut().for_each(|v| *v = (*v / max).min(1.0));
    }
    FrameImage::new(h, w, px).expect("normalized magnitudes are valid")
}

/// Descriptor of a view's event recording.
pub fn voxel_descriptor(grid: &VoxelGrid) -> GlobalDescriptor {
    global_descriptor(&voxel_image(grid))
}

fn sample_points(rng: &mut impl Rng, n: usize) -> (Vec<Vector3<f64>>, Vec<f64>) {
    let points = (0..n)
        .map(|_| Vector3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
        .collect();
    let brightness = (0..n).map(|_| rng.random_range(0.3..1.0)).collect();
    (points, brightness)
}

fn build_references(
    points: &[Vector3<f64>],
    brightness: &[f64],
    cfg: &SceneConfig,
) -> Result<Option<Vec<Reference>>> {
    let k = &cfg.intrinsics;
    let mut refs = Vec::with_capacity(cfg.n_refs);
    for i in 0..cfg.n_refs {
        let phi = core::f64::consts::TAU * i as f64 / cfg.n_refs as f64;
        let pose = orbit_pose(phi, cfg.orbit_radius, 0.15 * libm::sin(2.0 * phi), Vector3::zeros())?;
        let visibility = visible_points(points, &pose, k);
        if !spans_volume(points, &visibility) {
            return Ok(None);
        }
        let keypoints = visibility
            .iter()
            .map(|&v| k.project(&pose, &points[v as usize]).unwrap())
            .collect();
        let voxel = render_voxel(points, brightness, &pose, k, &cfg.render)?;
        refs.push(Reference { pose, descriptor: voxel_descriptor(&voxel), keypoints, visibility });
    }
    Ok(Some(refs))
}

/// A random point cloud in a unit box seen from reference poses on a
/// smooth orbit, plus held-out queries near the orbit. The map depends on
/// `map_seed` only and the queries on both seeds.
pub fn build_synthetic_scene(map_seed: u64, query_seed: u64, cfg: &SceneConfig) -> Result<(SceneMap, Vec<Query>)> {
    cfg.intrinsics.validate()?;
    if cfg.n_refs == 0 || cfg.n_points < MIN_VISIBLE {
        return Err(Error::InvalidArgument("need references and at least six points".into()));
    }
    let mut built = None;
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = seed::rng(seed::derive_index(seed::derive(map_seed, "points"), attempt));
        let (points, brightness) = sample_points(&mut rng, cfg.n_points);
        if let Some(refs) = build_references(&points, &brightness, cfg)? {
            built = Some((points, brightness, refs));
            break;
        }
    }
    let (points, brightness, references) =
        built.ok_or_else(|| Error::Degenerate("no reference set with enough visible points".into()))?;

    let mut rng = seed::rng(seed::derive_index(seed::derive(map_seed, "queries"), query_seed));
    let j = cfg.query_jitter;
    let mut queries = Vec::with_capacity(cfg.n_queries);
    let mut attempts = 0;
    while queries.len() < cfg.n_queries {
        attempts += 1;
        if attempts > MAX_ATTEMPTS * cfg.n_queries.max(1) as u64 {
            return Err(Error::Degenerate("could not place queries".into()));
        }
        let phi = rng.random_range(0.0..core::f64::consts::TAU);
        let radius = cfg.orbit_radius + rng.random_range(-j..=j);
        let lift = 0.15 * libm::sin(2.0 * phi) + rng.random_range(-j..=j);
        let target = Vector3::new(rng.random_range(-j..=j), rng.random_range(-j..=j), rng.random_range(-j..=j));
        let pose = orbit_pose(phi, radius, lift, target)?;
        let visible = visible_points(&points, &pose, &cfg.intrinsics);
        if !spans_volume(&points, &visible) {
            continue;
        }
        let voxel = render_voxel(&points, &brightness, &pose, &cfg.intrinsics, &cfg.render)?;
        queries.push(Query { pose, visible, voxel });
    }
    let map = SceneMap { intrinsics: cfg.intrinsics, points3d: points, references };
    Ok((map, queries))
}

/// Ground-truth match oracle with injected errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    /// Standard deviation of the pixel noise per coordinate.
    pub noise_px: f64,
    /// Fraction of matches replaced by a random pixel.
    pub outlier_fraction: f64,
    pub seed: u64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig { noise_px: 1.0, outlier_fraction: 0.1, seed: 0 }
    }
}

/// Number of points seen by both the query and a reference.
pub fn shared_points(query: &Query, reference: &Reference) -> usize {
    let (mut a, mut b, mut n) = (0, 0, 0);
    let (qa, rb) = (&query.visible, &reference.visibility);
    while a < qa.len() && b < rb.len() {
        match qa[a].cmp(&rb[b]) {
            core::cmp::Ordering::Less => a += 1,
            core::cmp::Ordering::Greater => b += 1,
            core::cmp::Ordering::Equal => {
                n += 1;
                a += 1;
                b += 1;
            }
        }
    }
    n
}

/// The candidate sharing the most points with the query; ties keep the
/// earlier candidate.
pub fn select_reference(query: &Query, map: &SceneMap, candidates: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None;
    for &c in candidates {
        let n = shared_points(query, &map.references[c]);
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((c, n));
        }
    }
    best.map(|(c, _)| c)
}

/// 2D-3D correspondences through the reference's visibility list. Query
/// pixels are the true projections with Gaussian noise; exactly
/// `round(fraction * n)` of them are replaced by uniform random pixels.
pub fn match_and_lift(query: &Query, reference: usize, map: &SceneMap, cfg: &MatchConfig) -> Result<Vec<Correspondence>> {
    let r = map
        .references
        .get(reference)
        .ok_or_else(|| Error::OutOfBounds(alloc::format!("reference {reference}")))?;
    if r.visibility.len() < 4 {
        return Err(Error::InvalidArgument("reference sees fewer than four points".into()));
    }
    if !(cfg.noise_px >= 0.0) || !(0.0..=1.0).contains(&cfg.outlier_fraction) {
        return Err(Error::InvalidArgument("noise must be non-negative and the outlier fraction in [0, 1]".into()));
    }
    let k = &map.intrinsics;
    let mut rng = seed::rng(cfg.seed);
    let noise = Normal::new(0.0, cfg.noise_px).map_err(|_| Error::InvalidArgument("noise".into()))?;
    let mut out = Vec::new();
    for &v in &r.visibility {
        if query.visible.binary_search(&v).is_err() {
            continue;
        }
        let x = map.points3d[v as usize];
        let px = k.project(&query.pose, &x).ok_or(Error::Degenerate("point behind the query".into()))?;
        let jitter = Vector2::new(noise.sample(&mut rng), noise.sample(&mut rng));
        out.push(Correspondence { pixel: px + jitter, point: x });
    }
    if out.len() < 4 {
        return Err(Error::InvalidArgument(alloc::format!("only {} correspondences", out.len())));
    }
    let n_out = libm::round(cfg.outlier_fraction * out.len() as f64) as usize;
    for i in rand::seq::index::sample(&mut rng, out.len(), n_out) {
        out[i].pixel = Vector2::new(rng.random_range(0.0..k.width as f64), rng.random_range(0.0..k.height as f64));
    }
    Ok(out)
}
