//! Silhouette scoring and silhouette-driven `minpts` selection.

use std::ops::RangeInclusive;

use serde::Serialize;

use super::dbscan::{dbscan_2d, ClusterLabeling, DbscanParams, PointLabel};
use crate::pca::PlaneData;
use crate::rng::sample_indices;
use crate::spatial::NeighborSearch;

/// Clustered points beyond this are subsampled before scoring.
pub const SILHOUETTE_SAMPLE_LIMIT: usize = 2_000;
const SUBSAMPLE_SEED: u64 = 0x005E_ED0F_5111;

/// Mean silhouette over clustered points; DBSCAN noise is ignored and members
/// of singleton clusters score 0. `None` when fewer than two clusters are
/// present or every cluster is a singleton.
pub fn silhouette(data: &PlaneData, labeling: &ClusterLabeling) -> Option<f64> {
    let clustered: Vec<usize> = labeling
        .labels
        .iter()
        .enumerate()
        .filter_map(|(i, l)| matches!(l, PointLabel::Cluster(_)).then_some(i))
        .collect();
    let picked: Vec<usize> = if clustered.len() > SILHOUETTE_SAMPLE_LIMIT {
        sample_indices(clustered.len(), SILHOUETTE_SAMPLE_LIMIT, SUBSAMPLE_SEED)
            .into_iter()
            .map(|i| clustered[i])
            .collect()
    } else {
        clustered
    };

    // Compact cluster ids over the picked points.
    let mut ids: Vec<u32> = picked
        .iter()
        .map(|&i| match labeling.labels[i] {
            PointLabel::Cluster(c) => c,
            PointLabel::Noise => unreachable!(),
        })
        .collect();
    let mut distinct = ids.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 2 {
        return None;
    }
    for id in &mut ids {
        *id = distinct.binary_search(id).unwrap() as u32;
    }
    let k = distinct.len();
    let mut sizes = vec![0usize; k];
    for &id in &ids {
        sizes[id as usize] += 1;
    }
    if sizes.iter().all(|&s| s < 2) {
        return None;
    }

    let coords: Vec<[f64; 2]> = picked.iter().map(|&i| data.coords[i]).collect();
    let mut sums = vec![0.0f64; k];
    let mut total = 0.0;
    for (p, a) in coords.iter().enumerate() {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for (q, b) in coords.iter().enumerate() {
            if p != q {
                sums[ids[q] as usize] += (a[0] - b[0]).hypot(a[1] - b[1]);
            }
        }
        let own = ids[p] as usize;
        if sizes[own] < 2 {
            continue;
        }
        let intra = sums[own] / (sizes[own] - 1) as f64;
        let inter = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = intra.max(inter);
        if denom > 0.0 {
            total += (inter - intra) / denom;
        }
    }
    Some(total / coords.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinptsChoice {
    pub minpts: usize,
    /// `None` when every candidate was unscorable and the default was used.
    pub score: Option<f64>,
}

/// Sweeps `search`, keeping the candidate with the highest silhouette; ties
/// go to the smaller value. Falls back to `default` when nothing scores.
pub fn tune_minpts(
    data: &PlaneData,
    epsilon: f64,
    search: RangeInclusive<usize>,
    default: usize,
    neighbor_search: NeighborSearch,
) -> MinptsChoice {
    let mut best: Option<MinptsChoice> = None;
    for minpts in search {
        let Ok(params) = DbscanParams::new(epsilon, minpts) else {
            continue;
        };
        let labeling = dbscan_2d(data, &params, neighbor_search);
        if let Some(score) = silhouette(data, &labeling) {
            if best.map_or(true, |b| score > b.score.unwrap_or(f64::NEG_INFINITY)) {
                best = Some(MinptsChoice {
                    minpts,
                    score: Some(score),
                });
            }
        }
    }
    best.unwrap_or(MinptsChoice {
        minpts: default,
        score: None,
    })
}
