//! Decomposition of scanned printed pages into labeled regions (images,
//! headlines, sub-headlines, columns), with automatic de-skew and
//! quarter-turn orientation correction for matra-bearing scripts such as
//! Bangla.
//!
//! The stages run in this order: [`orient::auto_orient`],
//! [`edge::canny`], [`smear::smear`], [`segment::connected_black_boxes`],
//! [`classify::classify_page`]. [`pipeline::decompose`] chains them.
//! [`harness`] generates synthetic pages with ground truth and scores the
//! pipeline against it.

pub mod classify;
pub mod config;
pub mod edge;
pub mod error;
pub mod harness;
pub mod orient;
pub mod pipeline;
pub mod raster;
pub mod segment;
pub mod smear;

pub use classify::{ElementLabel, LineMetrics, Region};
pub use config::{DecompositionConfig, Length};
pub use error::{Error, Result};
pub use pipeline::{decompose, Decomposition};
pub use raster::{BBox, BinaryMap, GrayImage};
