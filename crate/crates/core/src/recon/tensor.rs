use alloc::vec;
use alloc::vec::Vec;

use super::Real;
use crate::error::{shape_err, Result};
use crate::events::{FrameImage, VoxelGrid};

/// A `channels x height x width` activation tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Tensor {
            channels,
            height,
            width,
            data: vec![T::zero(); channels * height * width],
        }
    }

    pub fn from_data(channels: usize, height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(shape_err(channels * height * width, data.len()));
        }
        Ok(Tensor {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn from_voxel(grid: &VoxelGrid) -> Self {
        Tensor {
            channels: grid.bins(),
            height: grid.height(),
            width: grid.width(),
            data: grid.data().iter().map(|&v| T::from(v).unwrap()).collect(),
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    /// Interprets a single-channel tensor as an image, clamping into `[0, 1]`.
    pub fn to_image(&self) -> Result<FrameImage> {
        if self.channels != 1 {
            return Err(shape_err(1, self.channels));
        }
        let pixels = self
            .data
            .iter()
            .map(|v| v.to_f64().unwrap().clamp(0.0, 1.0))
            .collect();
        FrameImage::new(self.height, self.width, pixels)
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| U::from(v).unwrap()).collect(),
        }
    }
}
