//! `VOX1` voxel grids: magic, u32 B, u32 H, u32 W, f64 t0, f64 duration,
//! then `B*H*W` f32 values in bin, row, column order.

use evpriv_core::events::VoxelGrid;

use super::{Reader, Writer};
use crate::error::{Error, Result};

pub const VOX_MAGIC: [u8; 4] = *b"VOX1";

/// Values are stored as f32; larger magnitudes are an error.
pub fn write_vox(grid: &VoxelGrid) -> Result<Vec<u8>> {
    let (b, h, w) = grid.shape();
    let mut out = Writer::new(&VOX_MAGIC);
    for d in [b, h, w] {
        out.len_u32(d)?;
    }
    out.f64(grid.t0());
    out.f64(grid.duration());
    out.buf.reserve(4 * grid.data().len());
    for &v in grid.data() {
        let f = v as f32;
        if !f.is_finite() {
            return Err(Error::format(format!("voxel value {v} overflows f32")));
        }
        out.f32(f);
    }
    Ok(out.buf)
}

pub fn read_vox(bytes: &[u8]) -> Result<VoxelGrid> {
    let mut r = Reader::new(bytes, "VOX1");
    r.expect_magic(&VOX_MAGIC)?;
    let (b, h, w) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    let (t0, duration) = (r.f64()?, r.f64()?);
    let n = b
        .checked_mul(h)
        .and_then(|v| v.checked_mul(w))
        .ok_or_else(|| Error::format("VOX1: shape overflows"))?;
    r.check_room(n, 4)?;
    let data = (0..n).map(|_| r.f32().map(f64::from)).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    if !(t0.is_finite() && duration.is_finite() && duration >= 0.0) {
        return Err(Error::format("VOX1: invalid time window"));
    }
    let grid = VoxelGrid::from_data(b, h, w, data).map_err(|e| Error::format(format!("VOX1: {e}")))?;
    Ok(grid.with_window(t0, duration))
}
