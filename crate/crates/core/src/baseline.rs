//! Reference filters operating directly on 3D points: statistical outlier
//! removal (single and two-stage), radius outlier removal, and 3D density
//! clustering with the same cluster-size threshold as the PCAAC filter.

use serde::Serialize;

use crate::cloud::{LabeledCloud, Point3, Prediction};
use crate::cluster::{dbscan, threshold_filter, ClusterLabeling, DbscanParams};
use crate::error::{Error, Result};
use crate::metrics::{NoTally, Tally};
use crate::spatial::{brute_nearest, cell_for_occupancy, GridIndex, NeighborSearch, RangeIndex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SorParams {
    pub k_neighbors: usize,
    pub stddev_mult: f64,
}

impl Default for SorParams {
    fn default() -> Self {
        SorParams {
            k_neighbors: 10,
            stddev_mult: 1.0,
        }
    }
}

impl SorParams {
    fn validate(&self) -> Result<()> {
        if self.k_neighbors == 0 {
            return Err(Error::contract("SOR needs k_neighbors >= 1"));
        }
        if !(self.stddev_mult > 0.0 && self.stddev_mult.is_finite()) {
            return Err(Error::contract("SOR stddev multiplier must be positive"));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        format!("k={};mult={}", self.k_neighbors, self.stddev_mult)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RorParams {
    pub radius: f64,
    pub min_neighbors: usize,
}

impl Default for RorParams {
    fn default() -> Self {
        RorParams {
            radius: 1.0,
            min_neighbors: 10,
        }
    }
}

impl RorParams {
    fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::contract("ROR radius must be positive"));
        }
        if self.min_neighbors == 0 {
            return Err(Error::contract("ROR min_neighbors must be at least 1"));
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        format!(
            "radius={};min_neighbors={}",
            self.radius, self.min_neighbors
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dbscan3dParams {
    pub epsilon: f64,
    pub minpts: usize,
    pub psi: usize,
}

impl Default for Dbscan3dParams {
    fn default() -> Self {
        Dbscan3dParams {
            epsilon: 1.0,
            minpts: 10,
            psi: 100,
        }
    }
}

impl Dbscan3dParams {
    pub fn describe(&self) -> String {
        format!(
            "epsilon={};minpts={};psi={}",
            self.epsilon, self.minpts, self.psi
        )
    }
}

fn coords(points: &[Point3]) -> Vec<[f64; 3]> {
    points.iter().map(|p| p.to_array()).collect()
}

fn to_predictions(n: usize, flagged: impl IntoIterator<Item = usize>) -> Vec<Prediction> {
    let mut out = vec![Prediction::Signal; n];
    for i in flagged {
        out[i] = Prediction::Noise;
    }
    out
}

/// Mean distance from each point to its `k` nearest other points.
pub fn mean_knn_distances<T: Tally>(
    points: &[[f64; 3]],
    k: usize,
    search: NeighborSearch,
    tally: &mut T,
) -> Vec<f64> {
    let mean = |nn: Vec<(f64, usize)>| nn.iter().map(|(d2, _)| d2.sqrt()).sum::<f64>() / k as f64;
    match search {
        NeighborSearch::BruteForce => (0..points.len())
            .map(|i| mean(brute_nearest(points, i, k, tally)))
            .collect(),
        NeighborSearch::Grid => {
            let grid = GridIndex::new(points, cell_for_occupancy(points, k + 1));
            (0..points.len())
                .map(|i| mean(grid.nearest(i, k, tally)))
                .collect()
        }
    }
}

pub fn sor_filter(cloud: &LabeledCloud, params: &SorParams) -> Result<Vec<Prediction>> {
    sor_filter_counted(cloud.points(), params, NeighborSearch::Grid, &mut NoTally)
}

/// Flags points whose mean k-NN distance exceeds `mean + mult * stddev` of
/// all such means (sample standard deviation).
pub fn sor_filter_counted<T: Tally>(
    points: &[Point3],
    params: &SorParams,
    search: NeighborSearch,
    tally: &mut T,
) -> Result<Vec<Prediction>> {
    params.validate()?;
    if points.is_empty() {
        return Err(Error::contract("SOR on an empty point set"));
    }
    if points.len() <= params.k_neighbors {
        return Err(Error::contract(format!(
            "SOR needs more than k = {} points, got {}",
            params.k_neighbors,
            points.len()
        )));
    }
    let xyz = coords(points);
    let d = mean_knn_distances(&xyz, params.k_neighbors, search, tally);
    let n = d.len() as f64;
    let mu = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1.0);
    let threshold = mu + params.stddev_mult * var.sqrt();
    Ok(d.iter()
        .map(|&v| {
            if v > threshold {
                Prediction::Noise
            } else {
                Prediction::Signal
            }
        })
        .collect())
}

pub fn two_stage_sor_filter(
    cloud: &LabeledCloud,
    pass1: &SorParams,
    pass2: &SorParams,
) -> Result<Vec<Prediction>> {
    two_stage_sor_filter_counted(
        cloud.points(),
        pass1,
        pass2,
        NeighborSearch::Grid,
        &mut NoTally,
    )
}

/// SOR, then SOR again over the survivors; the result flags the union.
pub fn two_stage_sor_filter_counted<T: Tally>(
    points: &[Point3],
    pass1: &SorParams,
    pass2: &SorParams,
    search: NeighborSearch,
    tally: &mut T,
) -> Result<Vec<Prediction>> {
    let mut first = sor_filter_counted(points, pass1, search, tally)?;
    let survivors: Vec<usize> = (0..points.len())
        .filter(|&i| !first[i].is_noise())
        .collect();
    if survivors.is_empty() {
        return Err(Error::contract("second SOR pass has no surviving points"));
    }
    let kept: Vec<Point3> = survivors.iter().map(|&i| points[i]).collect();
    let second = sor_filter_counted(&kept, pass2, search, tally)?;
    for (slot, p) in survivors.iter().zip(second) {
        if p.is_noise() {
            first[*slot] = Prediction::Noise;
        }
    }
    Ok(first)
}

pub fn ror_filter(cloud: &LabeledCloud, params: &RorParams) -> Result<Vec<Prediction>> {
    ror_filter_counted(cloud.points(), params, NeighborSearch::Grid, &mut NoTally)
}

/// Flags points with fewer than `min_neighbors` other points within `radius`.
pub fn ror_filter_counted<T: Tally>(
    points: &[Point3],
    params: &RorParams,
    search: NeighborSearch,
    tally: &mut T,
) -> Result<Vec<Prediction>> {
    params.validate()?;
    let xyz = coords(points);
    let index = RangeIndex::build(&xyz, params.radius, search);
    let mut nb = Vec::new();
    Ok((0..xyz.len())
        .map(|i| {
            // Counts include the query point itself.
            if index.has_at_least(i, params.radius, params.min_neighbors + 1, &mut nb, tally) {
                Prediction::Signal
            } else {
                Prediction::Noise
            }
        })
        .collect())
}

/// DBSCAN on raw 3D coordinates.
pub fn dbscan3d<T: Tally>(
    points: &[Point3],
    params: &DbscanParams,
    search: NeighborSearch,
    tally: &mut T,
) -> ClusterLabeling {
    let xyz = coords(points);
    let index = RangeIndex::build(&xyz, params.epsilon, search);
    dbscan(&index, params, tally)
}

pub fn dbscan3d_filter(cloud: &LabeledCloud, params: &Dbscan3dParams) -> Result<Vec<Prediction>> {
    dbscan3d_filter_counted(cloud.points(), params, NeighborSearch::Grid, &mut NoTally)
}

/// 3D DBSCAN followed by removal of noise and clusters smaller than `psi`.
pub fn dbscan3d_filter_counted<T: Tally>(
    points: &[Point3],
    params: &Dbscan3dParams,
    search: NeighborSearch,
    tally: &mut T,
) -> Result<Vec<Prediction>> {
    let dp = DbscanParams::new(params.epsilon, params.minpts)?;
    let labeling = dbscan3d(points, &dp, search, tally);
    Ok(to_predictions(
        points.len(),
        threshold_filter(&labeling, params.psi),
    ))
}
