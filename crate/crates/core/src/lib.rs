#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! SAR surface-filament extraction and contrast/wind dependence analysis.
//!
//! The crate covers a σ₀ raster pyramid and its `SGRD` file format, GMF-based
//! masking, multi-bracket filament extraction, correlation and measurement
//! model statistics, the wind-exponent sweep and adjustment, sightings and
//! scene ingestion, and seeded synthetic fixtures.

pub mod depstats;
pub mod error;
pub mod filament;
pub mod gmf;
pub mod ingest;
pub mod pipeline;
pub mod raster;
pub mod series;
pub mod sgrd;
pub mod sweep;
pub mod synth;
pub mod time;

pub use error::{Error, Result};
pub use raster::Grid;
