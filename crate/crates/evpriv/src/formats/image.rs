//! Frame images as 8-bit binary PGM or lossless `IMG1` (magic, u32 H,
//! u32 W, `H*W` f32 pixels).

use evpriv_core::events::FrameImage;

use super::{Reader, Writer};
use crate::error::{Error, Result};

pub const IMG_MAGIC: [u8; 4] = *b"IMG1";

pub fn write_pgm(img: &FrameImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.pixels().iter().map(|p| (p * 255.0).round().clamp(0.0, 255.0) as u8));
    out
}

fn pgm_tokens(bytes: &[u8], count: usize) -> Result<(Vec<usize>, usize)> {
    let mut pos = 2;
    let mut vals = Vec::with_capacity(count);
    while vals.len() < count {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        let tok = std::str::from_utf8(&bytes[start..pos]).unwrap();
        vals.push(tok.parse().map_err(|_| Error::format("PGM: malformed header"))?);
    }
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::format("PGM: malformed header"));
    }
    Ok((vals, pos + 1))
}

pub fn read_pgm(bytes: &[u8]) -> Result<FrameImage> {
    if !bytes.starts_with(b"P5") {
        return Err(Error::format("PGM: expected P5 magic"));
    }
    let (v, start) = pgm_tokens(bytes, 3)?;
    let (w, h, max) = (v[0], v[1], v[2]);
    if max == 0 || max > 255 {
        return Err(Error::format(format!("PGM: unsupported maximum value {max}")));
    }
    let raster = &bytes[start..];
    if raster.len() != w * h {
        return Err(Error::format(format!("PGM: expected {} pixels, found {}", w * h, raster.len())));
    }
    let px = raster.iter().map(|&b| f64::from(b) / max as f64).collect();
    FrameImage::new(h, w, px).map_err(|e| Error::format(format!("PGM: {e}")))
}

pub fn write_img(img: &FrameImage) -> Result<Vec<u8>> {
    let mut w = Writer::new(&IMG_MAGIC);
    w.len_u32(img.height())?;
    w.len_u32(img.width())?;
    for &p in img.pixels() {
        w.f32(p as f32);
    }
    Ok(w.buf)
}

pub fn read_img(bytes: &[u8]) -> Result<FrameImage> {
    let mut r = Reader::new(bytes, "IMG1");
    r.expect_magic(&IMG_MAGIC)?;
    let (h, w) = (r.u32()? as usize, r.u32()? as usize);
    let n = h.checked_mul(w).ok_or_else(|| Error::format("IMG1: shape overflows"))?;
    r.check_room(n, 4)?;
    let px = (0..n).map(|_| r.f32().map(f64::from)).collect::<Result<Vec<_>>>()?;
    r.finish()?;
    FrameImage::new(h, w, px).map_err(|e| Error::format(format!("IMG1: {e}")))
}

/// Reads either format, recognized by magic.
pub fn read_image(bytes: &[u8]) -> Result<FrameImage> {
    if bytes.starts_with(&IMG_MAGIC) {
        read_img(bytes)
    } else if bytes.starts_with(b"P5") {
        read_pgm(bytes)
    } else {
        Err(Error::format("image is neither IMG1 nor binary PGM"))
    }
}
