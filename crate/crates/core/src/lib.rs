//! Instance-level task-oriented image transmission simulator.
//!
//! Annotated images are filtered down to the instances a task needs
//! ([`toif`]), the surviving pixels are sent through a variable-rate analog
//! block-transform codec ([`codec`]) over an AWGN channel ([`channel`]), and
//! reconstructions are scored with PSNR restricted to task-critical pixels
//! ([`metrics`]). [`harness`] ties the pieces together for single runs and
//! parameter sweeps.

pub mod channel;
pub mod codec;
pub mod error;
pub mod formats;
pub mod harness;
pub mod metrics;
pub mod scene;
pub mod toif;

pub use error::{Error, Result};
