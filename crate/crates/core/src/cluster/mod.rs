//! The PCA-based adaptive clustering filter and its building blocks.

mod dbscan;
mod pipeline;
mod silhouette;

pub use dbscan::{
    dbscan, dbscan_2d, dbscan_2d_counted, range_query, threshold_filter, ClusterLabeling,
    DbscanParams, PointLabel,
};
pub use pipeline::{
    count_clustering_ops, epsilon_for_region, run_pcaac, PcaacOutput, PipelineConfig, RegionNote,
    RegionReport, MIN_REGION_POINTS,
};
pub use silhouette::{silhouette, tune_minpts, MinptsChoice, SILHOUETTE_SAMPLE_LIMIT};
