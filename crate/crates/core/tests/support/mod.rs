//! Seeded problem generators shared by the integration and acceptance tests.

#![allow(dead_code)]

use evpriv_core::localization::{axis_angle, Correspondence, Intrinsics, Pose};
use evpriv_core::recon::{loss_and_gradient, total_loss, ConvNet, MeanAbsolute, Objective, PrivateObjective, Tensor};
use evpriv_core::seed;
use nalgebra::{Vector2, Vector3};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// A random camera looking at a unit cube of points from 2 to 4 units away,
/// with `n` visible correspondences; `outliers` of them get uniform random
/// pixels and the rest Gaussian noise of `noise_px`.
pub fn pnp_problem(seed: u64, n: usize, outliers: usize, noise_px: f64) -> (Pose, Vec<Correspondence>) {
    let mut rng = seed::rng(seed);
    let k = Intrinsics::default();
    let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let r = axis_angle(axis, rng.random_range(0.0..std::f64::consts::PI));
    let depth = Vector3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(2.0..4.0));
    // The camera sees the origin at `depth`: t = depth - R * 0.
    let truth = Pose::new(r, depth).unwrap();
    let noise = Normal::new(0.0, noise_px.max(f64::MIN_POSITIVE)).unwrap();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let Some(px) = k.project(&truth, &x).filter(|p| k.contains(p)) else {
            continue;
        };
        let jitter = if noise_px > 0.0 { Vector2::new(noise.sample(&mut rng), noise.sample(&mut rng)) } else { Vector2::zeros() };
        out.push(Correspondence { pixel: px + jitter, point: x });
    }
    for c in out.iter_mut().take(outliers) {
        c.pixel = Vector2::new(rng.random_range(0.0..k.width as f64), rng.random_range(0.0..k.height as f64));
    }
    (truth, out)
}

/// Row-major copy of a nalgebra rotation.
pub fn rows(m: &nalgebra::Matrix3<f64>) -> [[f64; 3]; 3] {
    let mut a = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = m[(i, j)];
        }
    }
    a
}

pub fn random_tensor(seed: u64, c: usize, h: usize, w: usize) -> Tensor<f64> {
    let mut rng = seed::rng(seed);
    Tensor::from_data(c, h, w, (0..c * h * w).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap()
}

/// Per-sample private objective against central finite differences.
///
/// The objective has kinks (absolute residuals, leaky ReLU, the Sobel
/// magnitude). Coordinates whose `[-h, h]` interval straddles one are left
/// out of the comparison. A wrong analytic gradient does not make the finite
/// differences disagree with each other, so it is still caught.
///
/// Returns the vector relative error `|a - n| / max(|a|, |n|)` and the share
/// of coordinates left out.
pub fn gradient_error(seed: u64) -> (f64, f64) {
    let widths = [3, 4, 3, 1];
    let split = (1, 3);
    let original = ConvNet::<f64>::random(2, &widths, split, seed::derive(seed, "original")).unwrap();
    let net = ConvNet::<f64>::random(2, &widths, split, seed::derive(seed, "private")).unwrap();
    let x = random_tensor(seed::derive(seed, "input"), 2, 8, 8);
    let target = original.forward_tensor(&x).unwrap().data;
    let obj = Objective::Private(PrivateObjective { original: &original, adv_weight: 1.0 });
    let (_, analytic) = loss_and_gradient(&net, &x, &target, obj, &MeanAbsolute).unwrap();

    let h = 1e-4;
    let base = net.flat_params();
    let loss_at = |params: &[f64]| {
        let mut n = net.clone();
        n.set_flat_params(params);
        total_loss(&n, std::slice::from_ref(&x), std::slice::from_ref(&target), obj, &MeanAbsolute).unwrap()
    };
    let central = |p: &mut Vec<f64>, i: usize, step: f64| {
        p[i] = base[i] + step;
        let up = loss_at(p);
        p[i] = base[i] - step;
        let down = loss_at(p);
        p[i] = base[i];
        (up - down) / (2.0 * step)
    };
    let (mut a, mut n) = (Vec::new(), Vec::new());
    let mut p = base.clone();
    for i in 0..base.len() {
        let coarse = central(&mut p, i, h);
        // Smooth functions give the same central difference at both steps to
        // within h^2 terms; a kink within [-h, h] shifts the coarse one.
        if (coarse - central(&mut p, i, h / 100.0)).abs() > 1e-4 * coarse.abs() + 1e-9 {
            continue;
        }
        a.push(analytic[i]);
        n.push(coarse);
    }
    let diff: f64 = a.iter().zip(&n).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nn: f64 = n.iter().map(|a| a * a).sum::<f64>().sqrt();
    (diff / na.max(nn), 1.0 - a.len() as f64 / base.len() as f64)
}
