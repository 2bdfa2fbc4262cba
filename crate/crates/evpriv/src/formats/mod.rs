//! Little-endian file formats.

mod bytes;
pub mod events;
pub mod image;
pub mod map;
pub mod net;
pub mod results;
pub mod voxel;
pub mod watermark;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) use bytes::{Reader, Writer};

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::Runtime(format!("cannot read {}: {e}", path.display())))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes).map_err(|e| Error::Runtime(format!("cannot write {}: {e}", path.display())))
}
