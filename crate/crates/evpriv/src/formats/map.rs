//! `MAP1` scene maps: magic; f64 fx, fy, cx, cy; u32 width, height; u32
//! point count and the points as f64 triples; u32 reference count and per
//! reference the pose (12 f64, rotation row-major then translation), u32
//! descriptor length and f64 values, u32 keypoint count and per keypoint
//! f64 u, f64 v, u32 point index.

use evpriv_core::localization::{GlobalDescriptor, Intrinsics, Pose, Reference, SceneMap};
use nalgebra::{Vector2, Vector3};

use super::{Reader, Writer};
use crate::error::{Error, Result};

pub const MAP_MAGIC: [u8; 4] = *b"MAP1";

pub fn write_map(map: &SceneMap) -> Result<Vec<u8>> {
    let mut w = Writer::new(&MAP_MAGIC);
    let k = &map.intrinsics;
    for v in [k.fx, k.fy, k.cx, k.cy] {
        w.f64(v);
    }
    w.u32(k.width);
    w.u32(k.height);
    w.len_u32(map.points3d.len())?;
    for p in &map.points3d {
        p.iter().for_each(|&v| w.f64(v));
    }
    w.len_u32(map.references.len())?;
    for r in &map.references {
        r.pose.to_array().iter().for_each(|&v| w.f64(v));
        w.len_u32(r.descriptor.values().len())?;
        r.descriptor.values().iter().for_each(|&v| w.f64(v));
        w.len_u32(r.keypoints.len())?;
        for (kp, &v) in r.keypoints.iter().zip(&r.visibility) {
            w.f64(kp[0]);
            w.f64(kp[1]);
            w.u32(v);
        }
    }
    Ok(w.buf)
}

pub fn read_map(bytes: &[u8]) -> Result<SceneMap> {
    let mut r = Reader::new(bytes, "MAP1");
    r.expect_magic(&MAP_MAGIC)?;
    let intrinsics = Intrinsics {
        fx: r.f64()?,
        fy: r.f64()?,
        cx: r.f64()?,
        cy: r.f64()?,
        width: r.u32()?,
        height: r.u32()?,
    };
    let n = r.count(24)?;
    let points3d = (0..n)
        .map(|_| Ok(Vector3::new(r.f64()?, r.f64()?, r.f64()?)))
        .collect::<Result<Vec<_>>>()?;
    let n_refs = r.count(104)?;
    let mut references = Vec::with_capacity(n_refs);
    for i in 0..n_refs {
        let mut a = [0.0; 12];
        for v in &mut a {
            *v = r.f64()?;
        }
        let pose = Pose::from_array(&a).map_err(|e| Error::format(format!("MAP1: reference {i}: {e}")))?;
        let nd = r.count(8)?;
        let values = (0..nd).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let descriptor = GlobalDescriptor::new(values).map_err(|e| Error::format(format!("MAP1: {e}")))?;
        let nk = r.count(20)?;
        let mut keypoints = Vec::with_capacity(nk);
        let mut visibility = Vec::with_capacity(nk);
        for _ in 0..nk {
            keypoints.push(Vector2::new(r.f64()?, r.f64()?));
            visibility.push(r.u32()?);
        }
        references.push(Reference { pose, descriptor, keypoints, visibility });
    }
    r.finish()?;
    let map = SceneMap { intrinsics, points3d, references };
    map.validate().map_err(|e| Error::format(format!("MAP1: {e}")))?;
    Ok(map)
}
