//! Sensor-level protection: temporal median filtering, maximum-reflection
//! filtering and mask-guided blending of event voxel grids.
//!
//! The blend keeps the original voxels wherever the temporally summed absolute
//! accumulation of a pixel does not exceed `mean + std` over all pixels, and
//! replaces the rest with the average of the two filtered grids. Because the
//! filtered values are discarded outside the mask, [`ProtectMode::Sparse`]
//! only evaluates the filters at masked pixels and produces the same output as
//! [`ProtectMode::Dense`].

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{shape_err, Result};
use crate::events::VoxelGrid;

/// Temporal window half-size used unless configured otherwise.
pub const DEFAULT_KT: usize = 13;
/// Spatial window half-size used unless configured otherwise.
pub const DEFAULT_KS: usize = 23;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterParams {
    /// Half-size of the temporal median window.
    pub k_t: usize,
    /// Half-size of the spatial maximum search window.
    pub k_s: usize,
}

impl Default for FilterParams {
    fn default() -> Self {
        FilterParams {
            k_t: DEFAULT_KT,
            k_s: DEFAULT_KS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtectMode {
    Dense,
    Sparse,
}

/// Per-pixel blend mask, broadcast along the temporal axis.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
    /// Mean of the per-pixel absolute sums.
    pub mean: f64,
    /// Population standard deviation of the per-pixel absolute sums.
    pub std: f64,
}

impl BlendMask {
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> bool {
        self.bits[m * self.width + n]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn density(&self) -> f64 {
        if self.bits.is_empty() {
            0.0
        } else {
            self.count() as f64 / self.bits.len() as f64
        }
    }
}

/// Median of a small buffer; even lengths average the two central values.
fn median_of(buf: &mut [f64]) -> f64 {
    buf.sort_unstable_by(f64::total_cmp);
    let k = buf.len();
    if k % 2 == 1 {
        buf[k / 2]
    } else {
        (buf[k / 2 - 1] + buf[k / 2]) / 2.0
    }
}

#[inline]
fn temporal_median_at(e: &VoxelGrid, l: usize, m: usize, n: usize, k_t: usize, buf: &mut Vec<f64>) -> f64 {
    let lo = l.saturating_sub(k_t);
    let hi = (l + k_t).min(e.bins() - 1);
    buf.clear();
    buf.extend((lo..=hi).map(|i| e.get(i, m, n)));
    median_of(buf)
}

/// Location of the largest `|E|` in the clamped spatial window around `(m, n)`
/// of slice `l`. Ties go to the smallest row, then the smallest column.
#[inline]
fn window_argmax(e: &VoxelGrid, l: usize, m: usize, n: usize, k_s: usize) -> (usize, usize) {
    let (h, w) = (e.height(), e.width());
    let (r0, r1) = (m.saturating_sub(k_s), (m + k_s).min(h - 1));
    let (c0, c1) = (n.saturating_sub(k_s), (n + k_s).min(w - 1));
    let data = e.data();
    let mut best = (r0, c0);
    let mut best_val = f64::NEG_INFINITY;
    for r in r0..=r1 {
        let row = e.index(l, r, 0);
        for c in c0..=c1 {
            let v = libm::fabs(data[row + c]);
            if v > best_val {
                best_val = v;
                best = (r, c);
            }
        }
    }
    best
}

#[inline]
fn reflection_at(e: &VoxelGrid, l: usize, m: usize, n: usize, k_s: usize) -> f64 {
    let (ms, ns) = window_argmax(e, l, m, n, k_s);
    let rm = 2 * ms as i64 - m as i64;
    let rn = 2 * ns as i64 - n as i64;
    if rm < 0 || rn < 0 || rm >= e.height() as i64 || rn >= e.width() as i64 {
        e.get(l, m, n)
    } else {
        e.get(l, rm as usize, rn as usize)
    }
}

/// Replaces every entry with the median of its temporal window
/// `[l - k_t, l + k_t]`, truncated at the grid boundaries.
pub fn median_filter_temporal(e: &VoxelGrid, k_t: usize) -> VoxelGrid {
    let mut out = e.clone();
    if k_t == 0 || e.bins() == 0 {
        return out;
    }
    let mut buf = Vec::with_capacity(2 * k_t + 1);
    for l in 0..e.bins() {
        for m in 0..e.height() {
            for n in 0..e.width() {
                let i = e.index(l, m, n);
                out.data_mut()[i] = temporal_median_at(e, l, m, n, k_t, &mut buf);
            }
        }
    }
    out
}

/// Replaces every entry with the value mirrored about the largest absolute
/// accumulation in its spatial window. Mirrored positions that leave the frame
/// keep the original value.
pub fn max_reflection_filter(e: &VoxelGrid, k_s: usize) -> VoxelGrid {
    let mut out = e.clone();
    if k_s == 0 {
        return out;
    }
    for l in 0..e.bins() {
        for m in 0..e.height() {
            for n in 0..e.width() {
                let i = e.index(l, m, n);
                out.data_mut()[i] = reflection_at(e, l, m, n, k_s);
            }
        }
    }
    out
}

/// Per-pixel sums of `|E|` over the temporal axis, in row-major order.
pub fn absolute_sums(e: &VoxelGrid) -> Vec<f64> {
    let plane = e.height() * e.width();
    let mut sums = vec![0.0; plane];
    for l in 0..e.bins() {
        let slice = &e.data()[l * plane..(l + 1) * plane];
        for (s, v) in sums.iter_mut().zip(slice) {
            *s += libm::fabs(*v);
        }
    }
    sums
}

/// Marks pixels whose temporally summed absolute accumulation exceeds
/// `mean + std` of all such sums.
pub fn accumulation_mask(e: &VoxelGrid) -> BlendMask {
    let sums = absolute_sums(e);
    let count = sums.len().max(1) as f64;
    let mean = sums.iter().sum::<f64>() / count;
    let var = sums.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / count;
    let std = libm::sqrt(var);
    let threshold = mean + std;
    BlendMask {
        height: e.height(),
        width: e.width(),
        bits: sums.iter().map(|&s| s > threshold).collect(),
        mean,
        std,
    }
}

/// `U * (E_med + E_max) / 2 + (1 - U) * E`, with `U` broadcast over bins.
pub fn blend(e: &VoxelGrid, e_med: &VoxelGrid, e_max: &VoxelGrid, mask: &BlendMask) -> Result<VoxelGrid> {
    e.same_shape(e_med)?;
    e.same_shape(e_max)?;
    if (mask.height, mask.width) != (e.height(), e.width()) {
        return Err(shape_err((e.height(), e.width()), (mask.height, mask.width)));
    }
    let plane = e.height() * e.width();
    let mut out = e.clone();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        let u = if mask.bits[i % plane] { 1.0 } else { 0.0 };
        *v = u * ((e_med.data()[i] + e_max.data()[i]) / 2.0) + (1.0 - u) * e.data()[i];
    }
    Ok(out)
}

/// Full sensor-level protection of a voxel grid.
pub fn protect(e: &VoxelGrid, params: FilterParams, mode: ProtectMode) -> VoxelGrid {
    let mask = accumulation_mask(e);
    protect_with_mask(e, &mask, params, mode)
}

pub fn protect_with_mask(e: &VoxelGrid, mask: &BlendMask, params: FilterParams, mode: ProtectMode) -> VoxelGrid {
    match mode {
        ProtectMode::Dense => {
            let med = median_filter_temporal(e, params.k_t);
            let max = max_reflection_filter(e, params.k_s);
            blend(e, &med, &max, mask).expect("filters preserve the grid shape")
        }
        ProtectMode::Sparse => {
            let mut out = e.clone();
            let mut buf = Vec::with_capacity(2 * params.k_t + 1);
            for m in 0..e.height() {
                for n in 0..e.width() {
                    if !mask.get(m, n) {
                        continue;
                    }
                    for l in 0..e.bins() {
                        let med = if params.k_t == 0 || e.bins() == 0 {
                            e.get(l, m, n)
                        } else {
                            temporal_median_at(e, l, m, n, params.k_t, &mut buf)
                        };
                        let max = if params.k_s == 0 {
                            e.get(l, m, n)
                        } else {
                            reflection_at(e, l, m, n, params.k_s)
                        };
                        let i = e.index(l, m, n);
                        out.data_mut()[i] = 1.0 * ((med + max) / 2.0) + (1.0 - 1.0) * e.data()[i];
                    }
                }
            }
            out
        }
    }
}
