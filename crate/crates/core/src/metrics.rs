//! Image similarity metrics: MAE, PSNR and windowed SSIM.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::events::FrameImage;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig {
    /// Side of the square SSIM window.
    pub ssim_window: usize,
    pub c1: f64,
    pub c2: f64,
    /// Largest representable pixel value for PSNR.
    pub psnr_max: f64,
    /// Multiply pixels by 255 before SSIM, matching the range of `c1`/`c2`.
    pub ssim_scale: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            ssim_window: 11,
            c1: 6.5025,
            c2: 58.5225,
            psnr_max: 1.0,
            ssim_scale: true,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ssim_window < 3 || self.ssim_window % 2 == 0 {
            return Err(Error::InvalidArgument("SSIM window must be odd and at least 3".into()));
        }
        if !(self.c1 > 0.0 && self.c2 > 0.0) {
            return Err(Error::InvalidArgument("SSIM constants must be positive".into()));
        }
        Ok(())
    }
}

pub fn mae(a: &FrameImage, b: &FrameImage) -> Result<f64> {
    a.same_shape(b)?;
    let n = a.pixels().len().max(1) as f64;
    Ok(a.pixels().iter().zip(b.pixels()).map(|(x, y)| libm::fabs(x - y)).sum::<f64>() / n)
}

pub fn mse(a: &FrameImage, b: &FrameImage) -> Result<f64> {
    a.same_shape(b)?;
    let n = a.pixels().len().max(1) as f64;
    Ok(a.pixels().iter().zip(b.pixels()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n)
}

/// `20 log10(MAX) - 10 log10(MSE)`; identical images yield
/// [`Error::InfinitePsnr`].
pub fn psnr(a: &FrameImage, b: &FrameImage, cfg: &MetricConfig) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Err(Error::InfinitePsnr);
    }
    Ok(20.0 * libm::log10(cfg.psnr_max) - 10.0 * libm::log10(m))
}

/// Summed-area table with a zero border row and column.
fn integral(h: usize, w: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
    let stride = w + 1;
    let mut s = vec![0.0; (h + 1) * stride];
    for r in 0..h {
        let mut row = 0.0;
        for c in 0..w {
            row += f(r * w + c);
            s[(r + 1) * stride + c + 1] = s[r * stride + c + 1] + row;
        }
    }
    s
}

/// Mean of the SSIM index over all `N x N` windows at stride 1.
pub fn ssim(a: &FrameImage, b: &FrameImage, cfg: &MetricConfig) -> Result<f64> {
    cfg.validate()?;
    a.same_shape(b)?;
    let (h, w, n) = (a.height(), a.width(), cfg.ssim_window);
    if h < n || w < n {
        return Err(Error::InvalidArgument("image smaller than the SSIM window".into()));
    }
    let scale = if cfg.ssim_scale { 255.0 } else { 1.0 };
    let (pa, pb) = (a.pixels(), b.pixels());
    let sx = integral(h, w, |i| pa[i] * scale);
    let sy = integral(h, w, |i| pb[i] * scale);
    let sxx = integral(h, w, |i| (pa[i] * scale) * (pa[i] * scale));
    let syy = integral(h, w, |i| (pb[i] * scale) * (pb[i] * scale));
    let sxy = integral(h, w, |i| (pa[i] * scale) * (pb[i] * scale));
    let stride = w + 1;
    let window = |s: &[f64], r: usize, c: usize| {
        s[(r + n) * stride + c + n] - s[r * stride + c + n] - s[(r + n) * stride + c] + s[r * stride + c]
    };
    let count = (n * n) as f64;
    let mut total = 0.0;
    for r in 0..=h - n {
        for c in 0..=w - n {
            let mx = window(&sx, r, c) / count;
            let my = window(&sy, r, c) / count;
            let vx = window(&sxx, r, c) / count - mx * mx;
            let vy = window(&syy, r, c) / count - my * my;
            let cov = window(&sxy, r, c) / count - mx * my;
            let num = (2.0 * mx * my + cfg.c1) * (2.0 * cov + cfg.c2);
            let den = (mx * mx + my * my + cfg.c1) * (vx + vy + cfg.c2);
            total += num / den;
        }
    }
    Ok(total / ((h - n + 1) * (w - n + 1)) as f64)
}

/// The three metrics together; PSNR is `None` for identical images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    pub mae: f64,
    pub psnr: Option<f64>,
    pub ssim: f64,
}

pub fn similarity(a: &FrameImage, b: &FrameImage, cfg: &MetricConfig) -> Result<Similarity> {
    let psnr = match psnr(a, b, cfg) {
        Ok(v) => Some(v),
        Err(Error::InfinitePsnr) => None,
        Err(e) => return Err(e),
    };
    Ok(Similarity {
        mae: mae(a, b)?,
        psnr,
        ssim: ssim(a, b, cfg)?,
    })
}
