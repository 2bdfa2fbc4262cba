//! `WMK1` watermark files: magic, u64 seed, u32 B, u32 H, u32 W. Values are
//! regenerated from the seed and never stored.

use evpriv_core::recon::NoiseWatermark;

use super::{Reader, Writer};
use crate::error::{Error, Result};

/// Largest watermark regenerated from a file, in values.
const MAX_VALUES: usize = 1 << 28;

pub const WMK_MAGIC: [u8; 4] = *b"WMK1";

pub fn write_wmk(wm: &NoiseWatermark) -> Result<Vec<u8>> {
    let mut w = Writer::new(&WMK_MAGIC);
    w.u64(wm.seed());
    let (b, h, wd) = wm.shape();
    for d in [b, h, wd] {
        w.len_u32(d)?;
    }
    Ok(w.buf)
}

pub fn read_wmk(bytes: &[u8]) -> Result<NoiseWatermark> {
    let mut r = Reader::new(bytes, "WMK1");
    r.expect_magic(&WMK_MAGIC)?;
    let seed = r.u64()?;
    let shape = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    r.finish()?;
    match shape.0.checked_mul(shape.1).and_then(|v| v.checked_mul(shape.2)) {
        Some(n) if n <= MAX_VALUES => {}
        _ => return Err(Error::format("WMK1: watermark shape too large")),
    }
    Ok(NoiseWatermark::generate(seed, shape))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stores_only_seed_and_shape() {
        let wm = NoiseWatermark::generate(77, (5, 4, 3));
        let bytes = write_wmk(&wm).unwrap();
        assert_eq!(bytes.len(), 4 + 8 + 12);
        assert_eq!(read_wmk(&bytes).unwrap(), wm);
    }
}
