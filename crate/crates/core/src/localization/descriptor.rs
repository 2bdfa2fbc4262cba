//! Global image descriptor and nearest-neighbour retrieval.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::events::FrameImage;

/// Cells per side of the pooling grid.
pub const GRID: usize = 8;
pub const DESCRIPTOR_LEN: usize = 256;
/// Images retrieved for refinement.
pub const DEFAULT_K: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalDescriptor {
    values: Vec<f64>,
}

impl GlobalDescriptor {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("descriptor"));
        }
        Ok(GlobalDescriptor { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn distance(&self, other: &GlobalDescriptor) -> f64 {
        let n = self.values.len().max(other.values.len());
        let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        libm::sqrt((0..n).map(|i| {
            let d = at(&self.values, i) - at(&other.values, i);
            d * d
        }).sum())
    }
}

/// Mean and population standard deviation of each cell of an 8x8 grid,
/// interleaved, L2-normalized and zero-padded to 256 values.
pub fn global_descriptor(image: &FrameImage) -> GlobalDescriptor {
    let (h, w) = (image.height(), image.width());
    let mut values = vec![0.0; DESCRIPTOR_LEN];
    for gr in 0..GRID {
        let (r0, r1) = (gr * h / GRID, (gr + 1) * h / GRID);
        for gc in 0..GRID {
            let (c0, c1) = (gc * w / GRID, (gc + 1) * w / GRID);
            let n = ((r1 - r0) * (c1 - c0)) as f64;
            if n == 0.0 {
                continue;
            }
            let mut sum = 0.0;
            for r in r0..r1 {
                for c in c0..c1 {
                    sum += image.get(r, c);
                }
            }
            let mean = sum / n;
            let mut var = 0.0;
            for r in r0..r1 {
                for c in c0..c1 {
                    let d = image.get(r, c) - mean;
                    var += d * d;
                }
            }
            let k = 2 * (gr * GRID + gc);
            values[k] = mean;
            values[k + 1] = libm::sqrt(var / n);
        }
    }
    let norm = libm::sqrt(values.iter().map(|v| v * v).sum());
    if norm > 0.0 {
        values.iter_mut().for_each(|v| *v /= norm);
    }
    GlobalDescriptor { values }
}

/// Indices of the `k` descriptors nearest to `query`, by ascending distance
/// and then ascending index.
pub fn retrieve_topk(query: &GlobalDescriptor, database: &[GlobalDescriptor], k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()));
    }
    if database.is_empty() {
        return Err(Error::Empty("reference database"));
    }
    let mut ranked: Vec<(f64, usize)> = database.iter().map(|d| query.distance(d)).zip(0..).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(ranked.into_iter().take(k).map(|(_, i)| i).collect())
}
