//! Algorithms for privacy-preserving localization with event cameras.
//!
//! The crate is `no_std` and needs only an allocator. File formats, the
//! network transport and the command line live in the `evpriv` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod events;
pub mod experiments;
pub mod localization;
pub mod metrics;
pub mod privacy;
pub mod recon;
pub mod seed;
pub mod split;
pub mod synth;

pub use error::{Error, Result};
