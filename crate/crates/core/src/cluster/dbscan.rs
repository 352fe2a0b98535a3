//! Density-based clustering with cluster-size thresholding.
//!
//! Semantics follow canonical DBSCAN: a point whose inclusive
//! `epsilon`-neighborhood (itself counted) holds at least `minpts` points is a
//! core point; clusters are the connected components of core points plus the
//! border points they reach. Each point's neighborhood is queried at most once.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{NoTally, Tally};
use crate::pca::PlaneData;
use crate::spatial::{brute_within, NeighborSearch, RangeIndex};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DbscanParams {
    pub epsilon: f64,
    pub minpts: usize,
}

impl DbscanParams {
    pub fn new(epsilon: f64, minpts: usize) -> Result<Self> {
        let p = DbscanParams { epsilon, minpts };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::contract(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.minpts == 0 {
            return Err(Error::contract("minpts must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PointLabel {
    /// Reached from no core point.
    Noise,
    /// 1-based cluster id.
    Cluster(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClusterLabeling {
    pub labels: Vec<PointLabel>,
    pub is_core: Vec<bool>,
    /// Number of clusters; ids run `1..=k`.
    pub k: usize,
}

impl ClusterLabeling {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Population of each cluster, indexed by `id - 1`.
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for l in &self.labels {
            if let PointLabel::Cluster(c) = l {
                sizes[*c as usize - 1] += 1;
            }
        }
        sizes
    }

    pub fn noise_count(&self) -> usize {
        self.labels
            .iter()
            .filter(|l| **l == PointLabel::Noise)
            .count()
    }
}

#[derive(Clone, Copy, PartialEq)]
enum State {
    Unvisited,
    Noise,
    Cluster(u32),
}

/// Neighborhood queries for one DBSCAN run.
///
/// On a grid, coreness is settled by an early-exit count, and the neighbors
/// of a core point are only listed from cells that still hold points outside
/// every cluster; claimed points are never pushed again anyway. Results match
/// a plain full query exactly.
struct Neighborhoods<'i, 'a, const D: usize> {
    index: &'i RangeIndex<'a, D>,
    params: DbscanParams,
    /// Per grid slot, members that are not yet in a cluster.
    unclaimed: Vec<u32>,
}

impl<'i, 'a, const D: usize> Neighborhoods<'i, 'a, D> {
    fn new(index: &'i RangeIndex<'a, D>, params: DbscanParams) -> Self {
        let unclaimed = match index {
            RangeIndex::Grid(g) => (0..g.slot_count()).map(|s| g.slot_len(s) as u32).collect(),
            RangeIndex::BruteForce(_) => Vec::new(),
        };
        Neighborhoods {
            index,
            params,
            unclaimed,
        }
    }

    fn claim(&mut self, i: usize) {
        if let RangeIndex::Grid(g) = self.index {
            self.unclaimed[g.slot_of(i)] -= 1;
        }
    }

    /// Whether `q` is core. When it is, `out` holds at least every unclaimed
    /// neighbor; otherwise its contents are unspecified.
    fn query<T: Tally>(&self, q: usize, out: &mut Vec<usize>, tally: &mut T) -> bool {
        let DbscanParams { epsilon, minpts } = self.params;
        match self.index {
            RangeIndex::Grid(g) => {
                if !g.count_at_least(q, epsilon, minpts, tally) {
                    return false;
                }
                g.within_slots(q, epsilon, out, tally, |s| self.unclaimed[s] > 0);
                true
            }
            RangeIndex::BruteForce(_) => {
                self.index.within(q, epsilon, out, tally);
                out.len() >= minpts
            }
        }
    }
}

/// DBSCAN over any fixed dimension. Cluster ids are renumbered so that they
/// ascend with each cluster's lowest member index.
pub fn dbscan<const D: usize, T: Tally>(
    index: &RangeIndex<'_, D>,
    params: &DbscanParams,
    tally: &mut T,
) -> ClusterLabeling {
    let n = index.points().len();
    let mut hood = Neighborhoods::new(index, *params);
    let mut state = vec![State::Unvisited; n];
    let mut is_core = vec![false; n];
    let mut neighbors = Vec::new();
    let mut seeds: Vec<usize> = Vec::new();
    let mut k: u32 = 0;

    for i in 0..n {
        if state[i] != State::Unvisited {
            continue;
        }
        if !hood.query(i, &mut neighbors, tally) {
            state[i] = State::Noise;
            continue;
        }
        k += 1;
        let id = k;
        state[i] = State::Cluster(id);
        hood.claim(i);
        is_core[i] = true;
        seeds.clear();
        // Points join the cluster when first reached; only those never
        // queried before go on the stack, noise ones become border points.
        let mut reach =
            |neighbors: &[usize], seeds: &mut Vec<usize>, hood: &mut Neighborhoods<'_, '_, D>| {
                for &j in neighbors {
                    match state[j] {
                        State::Cluster(_) => {}
                        State::Noise => {
                            state[j] = State::Cluster(id);
                            hood.claim(j);
                        }
                        State::Unvisited => {
                            state[j] = State::Cluster(id);
                            hood.claim(j);
                            seeds.push(j);
                        }
                    }
                }
            };
        reach(&neighbors, &mut seeds, &mut hood);
        while let Some(q) = seeds.pop() {
            if hood.query(q, &mut neighbors, tally) {
                is_core[q] = true;
                reach(&neighbors, &mut seeds, &mut hood);
            }
        }
    }

    // Renumber by ascending lowest member index.
    let mut remap = vec![0u32; k as usize + 1];
    let mut next = 0u32;
    for s in &state {
        if let State::Cluster(c) = *s {
            if remap[c as usize] == 0 {
                next += 1;
                remap[c as usize] = next;
            }
        }
    }
    let labels = state
        .into_iter()
        .map(|s| match s {
            State::Cluster(c) => PointLabel::Cluster(remap[c as usize]),
            _ => PointLabel::Noise,
        })
        .collect();
    ClusterLabeling {
        labels,
        is_core,
        k: k as usize,
    }
}

/// All points within `epsilon` of point `p` in the principal plane, itself
/// included, in ascending index order.
pub fn range_query(data: &PlaneData, p: usize, epsilon: f64) -> Vec<usize> {
    let mut out = Vec::new();
    brute_within(&data.coords, p, epsilon, &mut out, &mut NoTally);
    out
}

pub fn dbscan_2d(
    data: &PlaneData,
    params: &DbscanParams,
    search: NeighborSearch,
) -> ClusterLabeling {
    dbscan_2d_counted(data, params, search, &mut NoTally)
}

pub fn dbscan_2d_counted<T: Tally>(
    data: &PlaneData,
    params: &DbscanParams,
    search: NeighborSearch,
    tally: &mut T,
) -> ClusterLabeling {
    let index = RangeIndex::build(&data.coords, params.epsilon, search);
    dbscan(&index, params, tally)
}

/// Indices (ascending) of DBSCAN noise plus every member of a cluster with
/// fewer than `psi` points. Clusters of exactly `psi` points survive.
pub fn threshold_filter(labeling: &ClusterLabeling, psi: usize) -> Vec<usize> {
    let sizes = labeling.cluster_sizes();
    labeling
        .labels
        .iter()
        .enumerate()
        .filter(|(_, l)| match l {
            PointLabel::Noise => true,
            PointLabel::Cluster(c) => sizes[*c as usize - 1] < psi,
        })
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::OpCounts;

    fn plane(points: &[[f64; 2]]) -> PlaneData {
        PlaneData::new(points.to_vec())
    }

    fn params(eps: f64, minpts: usize) -> DbscanParams {
        DbscanParams::new(eps, minpts).unwrap()
    }

    #[test]
    fn range_query_examples() {
        let d = plane(&[[0.0, 0.0], [0.0, 0.5], [3.0, 3.0]]);
        assert_eq!(range_query(&d, 0, 1.0), vec![0, 1]);
        assert_eq!(range_query(&d, 0, 0.1), vec![0]);
        let edge = plane(&[[0.0, 0.0], [0.6, 0.8]]);
        assert_eq!(range_query(&edge, 0, 1.0), vec![0, 1]);
    }

    #[test]
    fn empty_and_single_point() {
        let empty = dbscan_2d(&PlaneData::default(), &params(1.0, 3), NeighborSearch::Grid);
        assert_eq!((empty.k, empty.len()), (0, 0));
        let one = dbscan_2d(&plane(&[[1.0, 1.0]]), &params(1.0, 2), NeighborSearch::Grid);
        assert_eq!(one.labels, vec![PointLabel::Noise]);
        let solo = dbscan_2d(
            &plane(&[[1.0, 1.0]]),
            &params(1.0, 1),
            NeighborSearch::BruteForce,
        );
        assert_eq!(solo.labels, vec![PointLabel::Cluster(1)]);
    }

    #[test]
    fn sparse_grid_is_all_noise() {
        let mut pts = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                pts.push([i as f64 * 0.5, j as f64 * 0.5]);
            }
        }
        // Largest neighborhood (the centre) holds 5 points.
        let l = dbscan_2d(&plane(&pts), &params(0.6, 9), NeighborSearch::Grid);
        assert_eq!(l.k, 0);
        assert_eq!(l.noise_count(), 9);
        let counts: Vec<usize> = (0..9)
            .map(|i| range_query(&plane(&pts), i, 0.6).len())
            .collect();
        assert_eq!(counts.iter().max(), Some(&5));
    }

    #[test]
    fn border_point_relabelled_from_noise() {
        // Point 0 is scanned first, found non-core, and later reached from
        // the core at index 1.
        let pts = [[-0.9, 0.0], [0.0, 0.0], [0.1, 0.0], [0.2, 0.0]];
        let l = dbscan_2d(&plane(&pts), &params(1.0, 4), NeighborSearch::BruteForce);
        assert_eq!(l.k, 1);
        assert!(l.labels.iter().all(|x| *x == PointLabel::Cluster(1)));
        assert!(!l.is_core[0] && l.is_core[1]);
    }

    #[test]
    fn numbering_follows_lowest_member() {
        let pts = [[10.0, 0.0], [0.0, 0.0], [0.1, 0.0], [10.1, 0.0]];
        let l = dbscan_2d(&plane(&pts), &params(0.5, 2), NeighborSearch::Grid);
        assert_eq!(
            l.labels,
            vec![
                PointLabel::Cluster(1),
                PointLabel::Cluster(2),
                PointLabel::Cluster(2),
                PointLabel::Cluster(1)
            ]
        );
    }

    #[test]
    fn brute_force_counts_every_pair_once_per_query() {
        let pts: Vec<[f64; 2]> = (0..50).map(|i| [i as f64 * 0.1, 0.0]).collect();
        let mut ops = OpCounts::default();
        dbscan_2d_counted(
            &plane(&pts),
            &params(0.25, 3),
            NeighborSearch::BruteForce,
            &mut ops,
        );
        assert_eq!(ops.multiplications, 2 * 50 * 50);
        assert_eq!(ops.additions, 3 * 50 * 50);
    }

    #[test]
    fn threshold_examples() {
        let mut labels = vec![PointLabel::Cluster(1); 150];
        labels.extend(vec![PointLabel::Cluster(2); 30]);
        labels.push(PointLabel::Noise);
        let l = ClusterLabeling {
            is_core: vec![false; labels.len()],
            labels,
            k: 2,
        };
        let flagged = threshold_filter(&l, 100);
        assert_eq!(flagged.len(), 31);
        assert_eq!(flagged[0], 150);
        assert_eq!(threshold_filter(&l, 0), vec![180]);
        // Exactly psi members survive.
        assert_eq!(threshold_filter(&l, 30), vec![180]);
        assert_eq!(threshold_filter(&l, 31).len(), 31);
    }

    #[test]
    fn invalid_params() {
        assert!(DbscanParams::new(0.0, 3).is_err());
        assert!(DbscanParams::new(f64::NAN, 3).is_err());
        assert!(DbscanParams::new(1.0, 0).is_err());
    }
}
