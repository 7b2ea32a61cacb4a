//! Line and corner features from 2D LiDAR scans.
//!
//! Three line estimators are provided: a linear fit in the inverted plane
//! (`wclm`), closed-form polar regression (`arras`) and eigenvector total
//! least squares (`siadat`). Each comes with exact first-order propagation of
//! range/bearing noise to the line parameters and on to corner positions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod cli;
pub mod corners;
pub mod error;
pub mod features;
pub mod fit;
pub mod report;
pub mod scan;
pub mod segment;
pub mod svg;
pub mod world;

#[cfg(test)]
mod testutil;

pub use corners::CornerFeature;
pub use error::{Error, Result};
pub use features::{extract_feature_map, ExtractConfig, FeatureMap, LineFeature, LineParams};
pub use fit::{FitInput, Method, Weighting};
pub use scan::{NoiseModel, PolarPoint, PolarScan};
pub use segment::{segment_scan, SegmentConfig, SegmentSpan};
pub use world::{cast_scan, Pose, WorldModel};
