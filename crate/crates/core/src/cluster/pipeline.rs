//! End-to-end filtering: shell segmentation, per-shell PCA reduction to the
//! principal plane, density clustering with shell-adaptive parameters,
//! cluster-size thresholding, restoration to 3D and stitching.

use rayon::prelude::*;
use serde::Serialize;

use super::dbscan::{dbscan_2d_counted, threshold_filter, DbscanParams, PointLabel};
use super::silhouette::tune_minpts;
use crate::cloud::{LabeledCloud, Point3, Prediction};
use crate::error::{Error, Result};
use crate::metrics::{OpCounts, Tally};
use crate::pca::{reduce, restore_selected, variance_ratio};
use crate::segment::{build_shells, split, CylinderShells, Region};
use crate::spatial::NeighborSearch;

/// Regions with fewer points than this skip reduction and pass through.
pub const MIN_REGION_POINTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    /// Number of cylinder shells.
    pub t: usize,
    /// Neighborhood radius of the innermost shell, meters.
    pub epsilon_1: f64,
    pub minpts_default: usize,
    pub psi_default: usize,
    pub psi_min: usize,
    pub psi_max: usize,
    pub tune_minpts: bool,
    pub minpts_search: (usize, usize),
    /// Scale `psi` with `sqrt(i)` per shell (clamped to `[psi_min, psi_max]`).
    pub psi_ramp: bool,
    pub psi_ramp_scale: f64,
    pub variance_warn_threshold: f64,
    pub search: NeighborSearch,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            t: 8,
            epsilon_1: 1.0,
            minpts_default: 10,
            psi_default: 100,
            psi_min: 50,
            psi_max: 200,
            tune_minpts: false,
            minpts_search: (4, 30),
            psi_ramp: false,
            psi_ramp_scale: 1.0,
            variance_warn_threshold: 0.95,
            search: NeighborSearch::Grid,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Contract(m));
        if self.t == 0 {
            return bad("t must be at least 1".into());
        }
        if !(self.epsilon_1 > 0.0 && self.epsilon_1.is_finite()) {
            return bad(format!(
                "epsilon_1 must be positive, got {}",
                self.epsilon_1
            ));
        }
        if self.minpts_default == 0 {
            return bad("minpts must be at least 1".into());
        }
        if self.psi_min == 0 || self.psi_min > self.psi_default || self.psi_default > self.psi_max {
            return bad(format!(
                "need 0 < psi_min <= psi <= psi_max, got {} / {} / {}",
                self.psi_min, self.psi_default, self.psi_max
            ));
        }
        let (lo, hi) = self.minpts_search;
        if lo == 0 || lo > hi {
            return bad(format!("invalid minpts search interval {lo}..={hi}"));
        }
        if !(self.psi_ramp_scale > 0.0 && self.psi_ramp_scale.is_finite()) {
            return bad("psi ramp scale must be positive".into());
        }
        if !(self.variance_warn_threshold > 0.0 && self.variance_warn_threshold <= 1.0) {
            return bad("variance warning threshold must lie in (0, 1]".into());
        }
        Ok(())
    }

    /// `key=value` summary used in reports.
    pub fn describe(&self) -> String {
        let mut s = format!(
            "t={};epsilon1={};minpts={};psi={};psi_min={};psi_max={};search={}",
            self.t,
            self.epsilon_1,
            self.minpts_default,
            self.psi_default,
            self.psi_min,
            self.psi_max,
            self.search
        );
        if self.tune_minpts {
            s.push_str(&format!(
                ";tune_minpts={}..{}",
                self.minpts_search.0, self.minpts_search.1
            ));
        }
        if self.psi_ramp {
            s.push_str(&format!(";psi_ramp={}", self.psi_ramp_scale));
        }
        s
    }

    pub fn psi_for_region(&self, i: usize) -> usize {
        if !self.psi_ramp {
            return self.psi_default;
        }
        let ramp = self.psi_default as f64 * (i as f64).sqrt() * self.psi_ramp_scale;
        (ramp.round() as usize).clamp(self.psi_min, self.psi_max)
    }
}

/// `epsilon_i = sqrt(i) * epsilon_1`.
pub fn epsilon_for_region(i: usize, epsilon_1: f64) -> f64 {
    (i as f64).sqrt() * epsilon_1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionNote {
    Empty,
    /// Too few points for a covariance; kept unfiltered.
    PassThrough,
    /// First two components explain less variance than the warning threshold.
    LowVarianceRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionReport {
    pub index: usize,
    pub points: usize,
    pub clusters: usize,
    pub variance_ratio: Option<f64>,
    pub epsilon: f64,
    pub minpts: usize,
    pub silhouette: Option<f64>,
    pub psi: usize,
    pub dbscan_noise: usize,
    pub small_cluster_points: usize,
    pub removed: usize,
    pub notes: Vec<RegionNote>,
}

#[derive(Debug, Clone)]
pub struct PcaacOutput {
    /// Survivors restored from the principal plane, stitched in shell order.
    pub filtered: LabeledCloud,
    /// Source index of every filtered point.
    pub survivors: Vec<usize>,
    /// One label per input point.
    pub predicted: Vec<Prediction>,
    pub shells: CylinderShells,
    pub regions: Vec<RegionReport>,
    /// Distance arithmetic spent in the clustering stage.
    pub ops: OpCounts,
}

impl PcaacOutput {
    pub fn removed(&self) -> usize {
        self.predicted.iter().filter(|p| p.is_noise()).count()
    }
}

struct RegionResult {
    report: RegionReport,
    /// Source indices of removed points.
    removed: Vec<usize>,
    /// Surviving (source index, restored point), ascending by source index.
    kept: Vec<(usize, Point3)>,
    ops: OpCounts,
}

pub fn run_pcaac(cloud: &LabeledCloud, config: &PipelineConfig) -> Result<PcaacOutput> {
    config.validate()?;
    let shells = build_shells(cloud, config.t)?;
    let regions = split(cloud, &shells)?;
    let results: Vec<RegionResult> = regions
        .par_iter()
        .map(|r| filter_region(r, config))
        .collect::<Result<_>>()?;

    let mut predicted = vec![Prediction::Signal; cloud.len()];
    let mut survivors = Vec::with_capacity(cloud.len());
    let mut points = Vec::with_capacity(cloud.len());
    let mut ops = OpCounts::default();
    let mut reports = Vec::with_capacity(results.len());
    for r in results {
        for &i in &r.removed {
            predicted[i] = Prediction::Noise;
        }
        for (i, p) in r.kept {
            survivors.push(i);
            points.push(p);
        }
        ops += r.ops;
        reports.push(r.report);
    }

    let mut filtered = LabeledCloud::new(points).with_sensor_origin(cloud.sensor_origin);
    if let Some(truth) = cloud.truth() {
        filtered.set_truth(survivors.iter().map(|&i| truth[i]).collect())?;
    }
    Ok(PcaacOutput {
        filtered,
        survivors,
        predicted,
        shells,
        regions: reports,
        ops,
    })
}

fn filter_region(region: &Region, config: &PipelineConfig) -> Result<RegionResult> {
    let epsilon = epsilon_for_region(region.index, config.epsilon_1);
    let psi = config.psi_for_region(region.index);
    let mut report = RegionReport {
        index: region.index,
        points: region.len(),
        clusters: 0,
        variance_ratio: None,
        epsilon,
        minpts: config.minpts_default,
        silhouette: None,
        psi,
        dbscan_noise: 0,
        small_cluster_points: 0,
        removed: 0,
        notes: Vec::new(),
    };
    if region.is_empty() {
        report.notes.push(RegionNote::Empty);
    }
    if region.len() < MIN_REGION_POINTS {
        if !region.is_empty() {
            report.notes.push(RegionNote::PassThrough);
        }
        return Ok(RegionResult {
            report,
            removed: Vec::new(),
            kept: region
                .source
                .iter()
                .copied()
                .zip(region.points.iter().copied())
                .collect(),
            ops: OpCounts::default(),
        });
    }

    let reduction = reduce(&region.points)?;
    let ratio = variance_ratio(&reduction.basis);
    report.variance_ratio = Some(ratio);
    if ratio < config.variance_warn_threshold {
        report.notes.push(RegionNote::LowVarianceRatio);
    }

    if config.tune_minpts {
        let choice = tune_minpts(
            &reduction.plane,
            epsilon,
            config.minpts_search.0..=config.minpts_search.1,
            config.minpts_default,
            config.search,
        );
        report.minpts = choice.minpts;
        report.silhouette = choice.score;
    }

    let params = DbscanParams::new(epsilon, report.minpts)?;
    let mut ops = OpCounts::default();
    let labeling = dbscan_2d_counted(&reduction.plane, &params, config.search, &mut ops);
    let flagged = threshold_filter(&labeling, psi);

    report.clusters = labeling.k;
    report.dbscan_noise = labeling.noise_count();
    report.small_cluster_points = flagged.len() - report.dbscan_noise;
    report.removed = flagged.len();

    let mut keep_mask = vec![true; region.len()];
    for &i in &flagged {
        keep_mask[i] = false;
    }
    let kept_local: Vec<usize> = (0..region.len()).filter(|&i| keep_mask[i]).collect();
    let restored = restore_selected(
        &reduction.basis,
        &reduction.plane,
        &kept_local,
        &reduction.centered.means,
    );
    Ok(RegionResult {
        report,
        removed: flagged.iter().map(|&i| region.source[i]).collect(),
        kept: kept_local
            .iter()
            .map(|&i| region.source[i])
            .zip(restored)
            .collect(),
        ops,
    })
}

/// The clustering stage alone on an unsegmented cloud, with op counting:
/// reduction to the principal plane followed by DBSCAN. Used to compare the
/// distance arithmetic of the 2D and 3D clustering routes.
pub fn count_clustering_ops<T: Tally>(
    cloud: &LabeledCloud,
    config: &PipelineConfig,
    tally: &mut T,
) -> Result<Vec<PointLabel>> {
    config.validate()?;
    let shells = build_shells(cloud, config.t)?;
    let regions = split(cloud, &shells)?;
    let mut labels = vec![PointLabel::Noise; cloud.len()];
    for region in regions.iter().filter(|r| r.len() >= MIN_REGION_POINTS) {
        let reduction = reduce(&region.points)?;
        let params = DbscanParams::new(
            epsilon_for_region(region.index, config.epsilon_1),
            config.minpts_default,
        )?;
        let l = dbscan_2d_counted(&reduction.plane, &params, config.search, tally);
        for (local, label) in l.labels.into_iter().enumerate() {
            labels[region.source[local]] = label;
        }
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::NoiseLabel;

    #[test]
    fn epsilon_schedule() {
        assert_eq!(epsilon_for_region(1, 1.0), 1.0);
        assert_eq!(epsilon_for_region(4, 1.0), 2.0);
        assert_eq!(epsilon_for_region(9, 1.0), 3.0);
        assert_eq!(epsilon_for_region(4, 0.5), 1.0);
    }

    #[test]
    fn psi_ramp_is_clamped() {
        let mut c = PipelineConfig::default();
        assert_eq!(c.psi_for_region(7), 100);
        c.psi_ramp = true;
        assert_eq!(c.psi_for_region(1), 100);
        assert_eq!(c.psi_for_region(2), 141);
        assert_eq!(c.psi_for_region(8), 200);
        c.psi_ramp_scale = 0.1;
        assert_eq!(c.psi_for_region(1), 50);
    }

    #[test]
    fn config_validation() {
        assert!(PipelineConfig::default().validate().is_ok());
        let bad = [
            PipelineConfig {
                t: 0,
                ..Default::default()
            },
            PipelineConfig {
                epsilon_1: 0.0,
                ..Default::default()
            },
            PipelineConfig {
                psi_default: 300,
                ..Default::default()
            },
            PipelineConfig {
                psi_min: 0,
                ..Default::default()
            },
            PipelineConfig {
                minpts_search: (5, 4),
                ..Default::default()
            },
            PipelineConfig {
                minpts_default: 0,
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    fn grid_patch(cx: f64, cy: f64, n: usize, spacing: f64) -> Vec<Point3> {
        let mut v = Vec::new();
        for i in 0..n {
            for j in 0..n {
                v.push(Point3::new(
                    cx + i as f64 * spacing,
                    cy + j as f64 * spacing,
                    0.01 * ((i * 7 + j * 3) % 5) as f64,
                ));
            }
        }
        v
    }

    #[test]
    fn small_regions_pass_through_and_empty_regions_are_reported() {
        // A dense patch near the sensor and two lone points in the outer shell.
        let mut pts = grid_patch(1.0, 1.0, 15, 0.3);
        pts.push(Point3::new(50.0, 0.0, 0.0));
        pts.push(Point3::new(0.0, -50.0, 0.0));
        let cloud = LabeledCloud::new(pts);
        let out = run_pcaac(
            &cloud,
            &PipelineConfig {
                t: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(out.regions.len(), 4);
        assert_eq!(out.regions[1].notes, vec![RegionNote::Empty]);
        assert_eq!(out.regions[3].notes, vec![RegionNote::PassThrough]);
        assert_eq!(out.removed(), 0);
        assert_eq!(out.filtered.len(), cloud.len());
    }

    #[test]
    fn outliers_far_from_a_structure_are_removed() {
        let mut pts = grid_patch(-3.0, -3.0, 25, 0.25);
        let mut truth = vec![NoiseLabel::Signal; pts.len()];
        for k in 0..5 {
            pts.push(Point3::new(-20.0 + 10.0 * k as f64, 25.0, 3.0));
            truth.push(NoiseLabel::IsolatedOutlier);
        }
        let cloud = LabeledCloud::with_truth(pts, truth.clone()).unwrap();
        let out = run_pcaac(
            &cloud,
            &PipelineConfig {
                t: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let expected: Vec<Prediction> = truth.iter().map(|t| t.binary()).collect();
        assert_eq!(out.predicted, expected);
        assert_eq!(out.filtered.truth().unwrap(), &truth[..625]);
        assert_eq!(out.survivors, (0..625).collect::<Vec<_>>());
    }

    #[test]
    fn removals_counted_consistently() {
        let mut pts = grid_patch(0.5, 0.5, 20, 0.3);
        pts.extend(grid_patch(30.0, 0.0, 3, 0.3));
        let cloud = LabeledCloud::new(pts);
        let out = run_pcaac(
            &cloud,
            &PipelineConfig {
                t: 2,
                ..Default::default()
            },
        )
        .unwrap();
        let total: usize = out.regions.iter().map(|r| r.removed).sum();
        assert_eq!(total, out.removed());
        assert_eq!(out.filtered.len() + out.removed(), cloud.len());
        assert_eq!(out.removed(), 9);
    }
}
