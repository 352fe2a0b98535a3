//! PCA-based adaptive clustering (PCAAC) for point cloud denoising.
//!
//! A cloud is split into equal-volume cylinder shells around the sensor,
//! each shell is projected onto its principal plane, clustered there with
//! DBSCAN at a range-adaptive radius, and clusters below a size threshold
//! are removed before the survivors are mapped back to 3D.
//!
//! The crate also carries the baseline filters, evaluation metrics with
//! operation counting, and a synthetic labeled-scene generator.

// Matrix code reads clearer with explicit indices; `!(x > 0.0)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod baseline;
pub mod cloud;
pub mod cluster;
pub mod error;
pub mod metrics;
pub mod pca;
pub mod rng;
pub mod scene;
pub mod segment;
pub mod spatial;

pub use cloud::{LabeledCloud, NoiseLabel, Point3, Prediction};
pub use cluster::{run_pcaac, PcaacOutput, PipelineConfig};
pub use error::{Error, Result};
pub use metrics::{confusion, ConfusionCounts, OpCounts};
pub use scene::SceneSpec;
pub use spatial::NeighborSearch;
