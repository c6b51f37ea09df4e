//! Clot burden quantification for extracorporeal-circuit blood-filter images.
//!
//! The analysis chain is grayscale ingestion ([`image_core`]), threshold
//! binarization ([`binarize`]), two-pass connected-component labeling
//! ([`labeling`]) and per-image clot metrics ([`metrics`]). The [`monitor`]
//! module runs that chain over a timed series of frames, detects clot-formation
//! onset and threshold alarms, and correlates clot burden with elapsed time
//! ([`stats`]). [`synth`] renders deterministic synthetic filter images with
//! known ground truth.

pub mod binarize;
pub mod cli;
pub mod image_core;
pub mod labeling;
pub mod metrics;
pub mod monitor;
pub mod pipeline;
pub mod plot;
pub mod stats;
pub mod synth;
