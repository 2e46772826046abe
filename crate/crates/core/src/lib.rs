//! Wearable vital-sign pipeline: ingest 1 Hz recordings, filter them by
//! admission window, device quality and heart-rate presence, aggregate to
//! hourly means, and render color-coded heat maps and baseline-relative
//! bar charts as SVG.

pub mod aggregate;
pub mod cohort;
pub mod colorscale;
pub mod config;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod quality;
pub mod render;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
pub use signal::{Sample, SignalId, VitalSample};
