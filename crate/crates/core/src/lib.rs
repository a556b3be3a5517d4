//! Template-free extraction of vessel centerlines from 3D binary segmentations.
//!
//! The pipeline mirrors the usual three-block layout:
//!
//! 1. **Segmentation** stand-in: [`phantom`] generates synthetic vascular trees
//!    with ground truth and corrupts them the way a patch-wise CNN would
//!    (missing stretches, spurious blobs).
//! 2. **Labeling**: [`skeleton`] thins the mask into a curve skeleton and splits
//!    it into connected components; [`grouping`] labels the components with a
//!    geometry-aware k-NN graph.
//! 3. **Centerline extraction**: [`volume`] builds the centerline heatmap and the
//!    affinity map, and [`pathfind`] reconnects same-label segments with
//!    minimal-cost paths.
//!
//! [`metrics`] scores the result with the OV/OF/OT overlap measures and
//! [`pipeline`] wires everything together with file-based interchange.

pub mod error;
pub mod geometry;
pub mod grouping;
pub mod metrics;
pub mod pathfind;
pub mod phantom;
pub mod pipeline;
pub mod skeleton;
pub mod volume;

pub use error::{Error, Result};
pub use geometry::Voxel;
pub use grouping::{gag_distance, GroupingConfig, Metric};
pub use metrics::{MatchRule, OverlapReport};

pub use pathfind::CenterlinePath;
pub use phantom::{CorruptionSpec, VesselPhantom};
pub use pipeline::PipelineConfig;

pub use skeleton::SkeletonPointSet;
pub use volume::{HeatmapParams, Mask, ScalarVolume, Volume};
