use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{shape_err, Result};
use crate::events::VoxelGrid;
use crate::seed;

/// A fixed standard-normal voxel tensor, regenerated from its seed.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseWatermark {
    seed: u64,
    shape: (usize, usize, usize),
    values: Vec<f64>,
}

impl NoiseWatermark {
    /// Draws `B * H * W` i.i.d. `N(0, 1)` values from `seed`.
    pub fn generate(seed: u64, shape: (usize, usize, usize)) -> Self {
        let mut rng = seed::rng(seed);
        let n = shape.0 * shape.1 * shape.2;
        let values = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        NoiseWatermark { seed, shape, values }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `E + E_noise`, entrywise.
pub fn infuse(grid: &VoxelGrid, watermark: &NoiseWatermark) -> Result<VoxelGrid> {
    if grid.shape() != watermark.shape {
        return Err(shape_err(watermark.shape, grid.shape()));
    }
    let data = grid
        .data()
        .iter()
        .zip(&watermark.values)
        .map(|(e, n)| e + n)
        .collect();
    Ok(VoxelGrid::from_data(grid.bins(), grid.height(), grid.width(), data)?
        .with_window(grid.t0(), grid.duration()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regenerates_from_seed() {
        assert_eq!(NoiseWatermark::generate(11, (2, 3, 4)), NoiseWatermark::generate(11, (2, 3, 4)));
        assert_ne!(NoiseWatermark::generate(11, (2, 3, 4)), NoiseWatermark::generate(12, (2, 3, 4)));
    }

    #[test]
    fn infuse_adds_exactly() {
        let wm = NoiseWatermark::generate(1, (2, 2, 2));
        let grid = VoxelGrid::from_data(2, 2, 2, (0..8).map(|i| i as f64 * 0.5).collect()).unwrap();
        let out = infuse(&grid, &wm).unwrap();
        for i in 0..8 {
            assert_eq!(out.data()[i], grid.data()[i] + wm.values()[i]);
        }
        assert!(infuse(&VoxelGrid::zeros(1, 2, 2), &wm).is_err());
    }

    #[test]
    fn standard_normal_moments() {
        let wm = NoiseWatermark::generate(2024, (100, 100, 100));
        let n = wm.values().len() as f64;
        let mean = wm.values().iter().sum::<f64>() / n;
        let var = wm.values().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }
}
