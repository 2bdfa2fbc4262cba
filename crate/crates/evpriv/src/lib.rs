//! File formats, TCP split inference and the command line around `evpriv-core`.

pub mod cli;
pub mod error;
pub mod formats;
pub mod report;
pub mod transport;

pub use error::{Error, Result};
