use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::events::FrameImage;

const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
const SOBEL_Y: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

/// Mean Sobel gradient magnitude over the interior pixels of an image.
pub fn sobel_sharpness(image: &FrameImage) -> Result<f64> {
    Ok(sobel_sharpness_grad(image.height(), image.width(), image.pixels())?.0)
}

/// Sharpness of a row-major `h x w` buffer and its gradient w.r.t. every pixel.
///
/// Where the gradient magnitude is exactly zero the (sub)gradient is taken as 0.
pub fn sobel_sharpness_grad(h: usize, w: usize, pixels: &[f64]) -> Result<(f64, Vec<f64>)> {
    if h < 3 || w < 3 {
        return Err(Error::InvalidArgument("sharpness needs at least a 3x3 image".into()));
    }
    let count = ((h - 2) * (w - 2)) as f64;
    let mut total = 0.0;
    let mut grad = vec![0.0; h * w];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let p = |dy: usize, dx: usize| pixels[(y + dy - 1) * w + (x + dx - 1)];
            // Written as differences so flat regions give exactly zero.
            let gx = (p(0, 2) - p(0, 0)) + 2.0 * (p(1, 2) - p(1, 0)) + (p(2, 2) - p(2, 0));
            let gy = (p(2, 0) - p(0, 0)) + 2.0 * (p(2, 1) - p(0, 1)) + (p(2, 2) - p(0, 2));
            let mag = libm::sqrt(gx * gx + gy * gy);
            total += mag;
            if mag > 0.0 {
                let (ux, uy) = (gx / (mag * count), gy / (mag * count));
                for dy in 0..3 {
                    for dx in 0..3 {
                        grad[(y + dy - 1) * w + (x + dx - 1)] += ux * SOBEL_X[dy][dx] + uy * SOBEL_Y[dy][dx];
                    }
                }
            }
        }
    }
    Ok((total / count, grad))
}

/// Differentiable image distance used by the reconstruction loss.
pub trait ImageDistance {
    /// Distance between a reference and an output buffer of equal length.
    fn value(&self, reference: &[f64], output: &[f64]) -> f64;
    /// Gradient with respect to `output`.
    fn grad(&self, reference: &[f64], output: &[f64]) -> Vec<f64>;
}

/// Mean absolute difference.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanAbsolute;

impl ImageDistance for MeanAbsolute {
    fn value(&self, reference: &[f64], output: &[f64]) -> f64 {
        let n = reference.len().max(1) as f64;
        reference.iter().zip(output).map(|(a, b)| libm::fabs(a - b)).sum::<f64>() / n
    }

    fn grad(&self, reference: &[f64], output: &[f64]) -> Vec<f64> {
        let n = reference.len().max(1) as f64;
        reference
            .iter()
            .zip(output)
            .map(|(a, b)| {
                if b > a {
                    1.0 / n
                } else if b < a {
                    -1.0 / n
                } else {
                    0.0
                }
            })
            .collect()
    }
}
