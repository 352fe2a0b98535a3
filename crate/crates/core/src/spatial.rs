//! Fixed-radius and k-nearest-neighbor queries over 2D and 3D points.
//!
//! Queries run either as a brute-force scan or through a uniform grid index.
//! Both return exactly the same neighbor sets; the scan doubles as the oracle
//! for the grid. Every distance evaluation is reported to a [`Tally`].

use serde::{Deserialize, Serialize};

use crate::metrics::Tally;

/// Squared Euclidean distance, recording `D` multiplications and `2D - 1`
/// additions (one subtraction per axis plus the running sum).
#[inline(always)]
pub fn squared_distance<const D: usize, T: Tally>(
    a: &[f64; D],
    b: &[f64; D],
    tally: &mut T,
) -> f64 {
    let mut sum = 0.0;
    for axis in 0..D {
        let d = a[axis] - b[axis];
        sum += d * d;
    }
    tally.record((2 * D - 1) as u64, D as u64);
    sum
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeighborSearch {
    #[default]
    Grid,
    BruteForce,
}

impl std::str::FromStr for NeighborSearch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grid" => Ok(NeighborSearch::Grid),
            "brute" | "brute-force" => Ok(NeighborSearch::BruteForce),
            other => Err(format!(
                "unknown neighbor search {other:?} (expected grid or brute)"
            )),
        }
    }
}

impl std::fmt::Display for NeighborSearch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NeighborSearch::Grid => "grid",
            NeighborSearch::BruteForce => "brute",
        })
    }
}

/// Upper bound on dense cell tables, in cells.
const DENSE_CELL_LIMIT: u64 = 1 << 22;

enum CellTable<const D: usize> {
    /// `starts[c]..starts[c + 1]` indexes `order` for linear cell id `c`.
    Dense { dims: [u64; D], starts: Vec<u32> },
    /// Occupied cells only, sorted by key.
    Sparse {
        keys: Vec<[i64; D]>,
        starts: Vec<u32>,
    },
}

/// Uniform grid over a point set. Cells are cubes of side `cell`.
pub struct GridIndex<'a, const D: usize> {
    points: &'a [[f64; D]],
    origin: [f64; D],
    cell: f64,
    /// Upper cell coordinate (inclusive) per axis.
    max_cell: [i64; D],
    /// Point indices grouped by cell, ascending within a cell.
    order: Vec<u32>,
    table: CellTable<D>,
    /// Table slot of each point's cell.
    slots: Vec<u32>,
}

impl<'a, const D: usize> GridIndex<'a, D> {
    pub fn new(points: &'a [[f64; D]], cell: f64) -> Self {
        assert!(
            cell > 0.0 && cell.is_finite(),
            "grid cell size must be positive"
        );
        assert!(
            points.len() < u32::MAX as usize,
            "too many points for the grid index"
        );
        let mut origin = [0.0; D];
        let mut max_cell = [0i64; D];
        if let Some(first) = points.first() {
            let mut lo = *first;
            let mut hi = *first;
            for p in points {
                for a in 0..D {
                    lo[a] = lo[a].min(p[a]);
                    hi[a] = hi[a].max(p[a]);
                }
            }
            origin = lo;
            for a in 0..D {
                max_cell[a] = (((hi[a] - lo[a]) / cell).floor()).min(i64::MAX as f64 / 4.0) as i64;
            }
        }

        let keys: Vec<[i64; D]> = points.iter().map(|p| cell_of(p, &origin, cell)).collect();
        let mut dims = [0u64; D];
        let mut total: Option<u64> = Some(1);
        for a in 0..D {
            dims[a] = max_cell[a] as u64 + 1;
            total = total.and_then(|t| t.checked_mul(dims[a]));
        }
        let (table, order, slots) = match total {
            Some(t) if t <= DENSE_CELL_LIMIT.max(8 * points.len() as u64) => {
                // Counting sort by linear cell id keeps indices ascending
                // within each cell.
                let slots: Vec<u32> = keys.iter().map(|k| linear(k, &dims) as u32).collect();
                let mut starts = vec![0u32; t as usize + 1];
                for &s in &slots {
                    starts[s as usize + 1] += 1;
                }
                for c in 1..starts.len() {
                    starts[c] += starts[c - 1];
                }
                let mut next = starts.clone();
                let mut order = vec![0u32; points.len()];
                for (i, &s) in slots.iter().enumerate() {
                    order[next[s as usize] as usize] = i as u32;
                    next[s as usize] += 1;
                }
                (CellTable::Dense { dims, starts }, order, slots)
            }
            _ => {
                let mut keyed: Vec<([i64; D], u32)> = keys
                    .iter()
                    .enumerate()
                    .map(|(i, k)| (*k, i as u32))
                    .collect();
                keyed.sort_unstable();
                let mut cell_keys = Vec::new();
                let mut starts = Vec::new();
                let mut slots = vec![0u32; points.len()];
                for (pos, (k, i)) in keyed.iter().enumerate() {
                    if cell_keys.last() != Some(k) {
                        cell_keys.push(*k);
                        starts.push(pos as u32);
                    }
                    slots[*i as usize] = (cell_keys.len() - 1) as u32;
                }
                starts.push(keyed.len() as u32);
                let order = keyed.iter().map(|&(_, i)| i).collect();
                (
                    CellTable::Sparse {
                        keys: cell_keys,
                        starts,
                    },
                    order,
                    slots,
                )
            }
        };

        GridIndex {
            points,
            origin,
            cell,
            max_cell,
            order,
            table,
            slots,
        }
    }

    /// Number of cell slots; slot ids run `0..slot_count()`.
    pub fn slot_count(&self) -> usize {
        match &self.table {
            CellTable::Dense { starts, .. } | CellTable::Sparse { starts, .. } => starts.len() - 1,
        }
    }

    /// Slot of the cell holding point `i`.
    pub fn slot_of(&self, i: usize) -> usize {
        self.slots[i] as usize
    }

    pub fn slot_len(&self, slot: usize) -> usize {
        let starts = match &self.table {
            CellTable::Dense { starts, .. } | CellTable::Sparse { starts, .. } => starts,
        };
        (starts[slot + 1] - starts[slot]) as usize
    }

    /// True when every pair of points sharing a cell lies within `radius`.
    pub fn cells_within(&self, radius: f64) -> bool {
        self.cell * (D as f64).sqrt() * (1.0 + 1e-9) <= radius
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    fn slot(&self, key: &[i64; D]) -> Option<usize> {
        for a in 0..D {
            if key[a] < 0 || key[a] > self.max_cell[a] {
                return None;
            }
        }
        match &self.table {
            CellTable::Dense { dims, .. } => Some(linear(key, dims)),
            CellTable::Sparse { keys, .. } => keys.binary_search(key).ok(),
        }
    }

    fn slot_members(&self, slot: usize) -> &[u32] {
        let starts = match &self.table {
            CellTable::Dense { starts, .. } | CellTable::Sparse { starts, .. } => starts,
        };
        &self.order[starts[slot] as usize..starts[slot + 1] as usize]
    }

    fn members(&self, key: &[i64; D]) -> &[u32] {
        match self.slot(key) {
            Some(slot) => self.slot_members(slot),
            None => &[],
        }
    }

    /// All indices within `radius` (inclusive) of point `query`, itself
    /// included. Cells wholly outside the ball are skipped and cells wholly
    /// inside it are taken without per-point distances; each such box test
    /// is tallied like one distance evaluation.
    pub fn within<T: Tally>(&self, query: usize, radius: f64, out: &mut Vec<usize>, tally: &mut T) {
        self.within_slots(query, radius, out, tally, |_| true);
    }

    /// [`within`](Self::within) restricted to cells whose slot passes `visit`.
    pub fn within_slots<T: Tally>(
        &self,
        query: usize,
        radius: f64,
        out: &mut Vec<usize>,
        tally: &mut T,
        visit: impl Fn(usize) -> bool,
    ) {
        out.clear();
        let q = &self.points[query];
        let r2 = radius * radius;
        let center = cell_of(q, &self.origin, self.cell);
        for_each_offset::<D>(self.reach(radius), |off| {
            let key = shifted(&center, off);
            let Some(slot) = self.slot(&key) else {
                return true;
            };
            let members = self.slot_members(slot);
            if members.is_empty() || !visit(slot) {
                return true;
            }
            match self.relation(q, &key, r2, tally) {
                Relation::Outside => {}
                Relation::Inside => out.extend(members.iter().map(|&j| j as usize)),
                Relation::Partial => {
                    for &j in members {
                        let j = j as usize;
                        if squared_distance(q, &self.points[j], tally) <= r2 {
                            out.push(j);
                        }
                    }
                }
            }
            true
        });
    }

    /// Whether at least `need` points (the query included) lie within
    /// `radius`; stops scanning as soon as the answer is known.
    pub fn count_at_least<T: Tally>(
        &self,
        query: usize,
        radius: f64,
        need: usize,
        tally: &mut T,
    ) -> bool {
        let q = &self.points[query];
        let r2 = radius * radius;
        let center = cell_of(q, &self.origin, self.cell);
        let in_cell = |key: &[i64; D], tally: &mut T| -> usize {
            let members = self.members(key);
            if members.is_empty() {
                return 0;
            }
            match self.relation(q, key, r2, tally) {
                Relation::Outside => 0,
                Relation::Inside => members.len(),
                Relation::Partial => members
                    .iter()
                    .filter(|&&j| squared_distance(q, &self.points[j as usize], tally) <= r2)
                    .count(),
            }
        };
        // The query's own cell first: it often settles the count alone.
        let mut count = in_cell(&center, tally);
        if count < need {
            for_each_offset::<D>(self.reach(radius), |off| {
                if off.iter().all(|&o| o == 0) {
                    return true;
                }
                count += in_cell(&shifted(&center, off), tally);
                count < need
            });
        }
        count >= need
    }

    fn reach(&self, radius: f64) -> i64 {
        ((radius / self.cell).ceil() as i64).max(1)
    }

    /// Where cell `key` lies relative to the ball of squared radius `r2`
    /// around `q`. Tallied as two distance evaluations.
    #[inline]
    fn relation<T: Tally>(&self, q: &[f64; D], key: &[i64; D], r2: f64, tally: &mut T) -> Relation {
        // Boxes are padded so rounding in `cell_of` never puts a member
        // outside its cell's box.
        let pad = self.cell * 1e-9;
        let (mut near, mut far) = (0.0, 0.0);
        for a in 0..D {
            let lo = self.origin[a] + key[a] as f64 * self.cell - pad;
            let hi = lo + self.cell + 2.0 * pad;
            let (dl, dh) = (q[a] - lo, hi - q[a]);
            let gap = if dl < 0.0 {
                -dl
            } else if dh < 0.0 {
                -dh
            } else {
                0.0
            };
            let span = dl.abs().max(dh.abs());
            near += gap * gap;
            far += span * span;
        }
        tally.record(2 * (2 * D as u64 - 1), 2 * D as u64);
        if near > r2 {
            Relation::Outside
        } else if far <= r2 {
            Relation::Inside
        } else {
            Relation::Partial
        }
    }

    /// The `k` nearest other points of `query` as `(squared distance, index)`,
    /// nearest first; ties go to the lower index. Returns fewer than `k` only
    /// when the set has fewer than `k + 1` points.
    pub fn nearest<T: Tally>(&self, query: usize, k: usize, tally: &mut T) -> Vec<(f64, usize)> {
        let q = &self.points[query];
        let center = cell_of(q, &self.origin, self.cell);
        let mut found: Vec<(f64, usize)> = Vec::new();
        if k == 0 {
            return found;
        }
        // Rings beyond this reach never intersect the grid.
        let mut reach = 0i64;
        for a in 0..D {
            reach = reach.max(center[a]).max(self.max_cell[a] - center[a]);
        }
        // Rings over mostly empty sparse grids can be vast; past this many
        // cells a plain scan is cheaper.
        let budget = match &self.table {
            CellTable::Dense { starts, .. } => starts.len(),
            CellTable::Sparse { keys, .. } => 4 * keys.len() + 3usize.pow(D as u32),
        };
        let mut visited = 0usize;
        for ring in 0..=reach {
            if visited > budget {
                return brute_nearest(self.points, query, k, tally);
            }
            for_each_ring_offset::<D>(ring, &center, &self.max_cell, |key| {
                visited += 1;
                for &j in self.members(key) {
                    let j = j as usize;
                    if j != query {
                        found.push((squared_distance(q, &self.points[j], tally), j));
                    }
                }
            });
            if found.len() >= k {
                // Unvisited points lie at least `ring` whole cells away.
                let covered = ring as f64 * self.cell;
                keep_smallest(&mut found, k);
                if found[k - 1].0 < covered * covered {
                    break;
                }
            }
        }
        keep_smallest(&mut found, k);
        found
    }
}

fn keep_smallest(found: &mut Vec<(f64, usize)>, k: usize) {
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if found.len() > k {
        found.select_nth_unstable_by(k - 1, cmp);
        found.truncate(k);
    }
    found.sort_unstable_by(cmp);
}

#[inline]
fn cell_of<const D: usize>(p: &[f64; D], origin: &[f64; D], cell: f64) -> [i64; D] {
    let mut k = [0i64; D];
    for a in 0..D {
        k[a] = ((p[a] - origin[a]) / cell).floor() as i64;
    }
    k
}

#[inline]
fn linear<const D: usize>(key: &[i64; D], dims: &[u64; D]) -> usize {
    // Axis 0 most significant, matching the lexicographic sort of keys.
    let mut idx = 0u64;
    for a in 0..D {
        idx = idx * dims[a] + key[a] as u64;
    }
    idx as usize
}

enum Relation {
    Outside,
    Inside,
    Partial,
}

#[inline]
fn shifted<const D: usize>(key: &[i64; D], off: &[i64; D]) -> [i64; D] {
    let mut k = *key;
    for a in 0..D {
        k[a] += off[a];
    }
    k
}

/// Calls `f` for every offset in `[-r, r]^D` until it returns false.
fn for_each_offset<const D: usize>(r: i64, mut f: impl FnMut(&[i64; D]) -> bool) {
    let mut off = [-r; D];
    loop {
        if !f(&off) {
            return;
        }
        let mut a = 0;
        loop {
            if a == D {
                return;
            }
            if off[a] < r {
                off[a] += 1;
                break;
            }
            off[a] = -r;
            a += 1;
        }
    }
}

/// Calls `f` for every in-grid cell at Chebyshev distance exactly `ring`
/// from `center`.
fn for_each_ring_offset<const D: usize>(
    ring: i64,
    center: &[i64; D],
    max_cell: &[i64; D],
    mut f: impl FnMut(&[i64; D]),
) {
    let mut lo = [0i64; D];
    let mut hi = [0i64; D];
    for a in 0..D {
        lo[a] = (center[a] - ring).max(0);
        hi[a] = (center[a] + ring).min(max_cell[a]);
        if lo[a] > hi[a] {
            return;
        }
    }
    let mut key = lo;
    loop {
        let on_ring = (0..D).any(|a| (key[a] - center[a]).abs() == ring);
        if on_ring {
            f(&key);
        } else {
            // Interior run along axis 0: jump straight to the far face.
            let far = center[0] + ring;
            if key[0] < far && far <= hi[0] && ring > 0 {
                key[0] = far;
                continue;
            }
        }
        let mut a = 0;
        loop {
            if a == D {
                return;
            }
            if key[a] < hi[a] {
                key[a] += 1;
                break;
            }
            key[a] = lo[a];
            a += 1;
        }
    }
}

/// Range queries over a point set, by brute force or through a grid sized
/// for one fixed radius.
pub enum RangeIndex<'a, const D: usize> {
    BruteForce(&'a [[f64; D]]),
    Grid(GridIndex<'a, D>),
}

impl<'a, const D: usize> RangeIndex<'a, D> {
    pub fn build(points: &'a [[f64; D]], radius: f64, search: NeighborSearch) -> Self {
        match search {
            NeighborSearch::BruteForce => RangeIndex::BruteForce(points),
            NeighborSearch::Grid => {
                // Cells as wide as the radius measured fastest in 2D and 3D.
                RangeIndex::Grid(GridIndex::new(points, radius))
            }
        }
    }

    pub fn points(&self) -> &'a [[f64; D]] {
        match self {
            RangeIndex::BruteForce(p) => p,
            RangeIndex::Grid(g) => g.points,
        }
    }

    /// Indices within `radius` of point `query` (inclusive, self included).
    /// The order of `out` is unspecified.
    pub fn within<T: Tally>(&self, query: usize, radius: f64, out: &mut Vec<usize>, tally: &mut T) {
        match self {
            RangeIndex::BruteForce(points) => brute_within(points, query, radius, out, tally),
            RangeIndex::Grid(g) => g.within(query, radius, out, tally),
        }
    }

    /// Whether at least `need` points (self included) lie within `radius`.
    /// The grid stops early; brute force always scans every point.
    pub fn has_at_least<T: Tally>(
        &self,
        query: usize,
        radius: f64,
        need: usize,
        out: &mut Vec<usize>,
        tally: &mut T,
    ) -> bool {
        match self {
            RangeIndex::BruteForce(points) => {
                brute_within(points, query, radius, out, tally);
                out.len() >= need
            }
            RangeIndex::Grid(g) => g.count_at_least(query, radius, need, tally),
        }
    }
}

pub fn brute_within<const D: usize, T: Tally>(
    points: &[[f64; D]],
    query: usize,
    radius: f64,
    out: &mut Vec<usize>,
    tally: &mut T,
) {
    out.clear();
    let q = &points[query];
    let r2 = radius * radius;
    for (j, p) in points.iter().enumerate() {
        if squared_distance(q, p, tally) <= r2 {
            out.push(j);
        }
    }
}

/// k nearest other points by full scan, same ordering as [`GridIndex::nearest`].
pub fn brute_nearest<const D: usize, T: Tally>(
    points: &[[f64; D]],
    query: usize,
    k: usize,
    tally: &mut T,
) -> Vec<(f64, usize)> {
    let q = &points[query];
    let mut found: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != query)
        .map(|(j, p)| (squared_distance(q, p, tally), j))
        .collect();
    if k == 0 {
        return Vec::new();
    }
    keep_smallest(&mut found, k);
    found
}

/// Cell edge giving roughly `per_cell` points per occupied cell.
pub fn cell_for_occupancy<const D: usize>(points: &[[f64; D]], per_cell: usize) -> f64 {
    if points.len() < 2 {
        return 1.0;
    }
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        for a in 0..D {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let max_extent = (0..D).map(|a| hi[a] - lo[a]).fold(0.0, f64::max);
    if max_extent <= 0.0 {
        return 1.0;
    }
    let per_cell = per_cell.max(1) as f64;
    // Start from a box filled uniformly; flat axes get a small floor so the
    // volume does not vanish.
    let floor = max_extent * 1e-3;
    let volume: f64 = (0..D).map(|a| (hi[a] - lo[a]).max(floor)).product();
    let min_cell = max_extent * 1e-6;
    let mut cell = (volume * per_cell / points.len() as f64)
        .powf(1.0 / D as f64)
        .clamp(min_cell, max_extent);
    // Real clouds hug surfaces and leave most of the box empty; shrink until
    // the occupied cells are not overfull.
    let mut keys: Vec<[i64; D]> = Vec::with_capacity(points.len());
    for _ in 0..8 {
        keys.clear();
        keys.extend(points.iter().map(|p| cell_of(p, &lo, cell)));
        keys.sort_unstable();
        keys.dedup();
        let avg = points.len() as f64 / keys.len() as f64;
        if avg <= 2.0 * per_cell || cell <= min_cell {
            break;
        }
        cell = (cell * (per_cell / avg).powf(1.0 / D as f64)).max(min_cell);
    }
    cell
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{NoTally, OpCounts};
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn random_points<const D: usize>(rng: &mut StdRng, n: usize, span: f64) -> Vec<[f64; D]> {
        (0..n)
            .map(|_| {
                let mut p = [0.0; D];
                for v in &mut p {
                    *v = rng.gen_range(-span..span);
                }
                p
            })
            .collect()
    }

    #[test]
    fn distance_op_costs() {
        let mut ops = OpCounts::default();
        squared_distance(&[0.0, 0.0], &[3.0, 4.0], &mut ops);
        assert_eq!(
            ops,
            OpCounts {
                additions: 3,
                multiplications: 2
            }
        );
        let mut ops = OpCounts::default();
        let d = squared_distance(&[0.0, 0.0, 0.0], &[1.0, 2.0, 2.0], &mut ops);
        assert_eq!(d, 9.0);
        assert_eq!(
            ops,
            OpCounts {
                additions: 5,
                multiplications: 3
            }
        );
    }

    #[test]
    fn grid_range_matches_scan_2d_and_3d() {
        let mut rng = StdRng::seed_from_u64(7);
        for trial in 0..20 {
            let r = rng.gen_range(0.1..2.0);
            let p2 = random_points::<2>(&mut rng, 300, 5.0);
            let grid = GridIndex::new(&p2, r);
            let p3 = random_points::<3>(&mut rng, 300, 5.0);
            let grid3 = GridIndex::new(&p3, r);
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for q in 0..300 {
                grid.within(q, r, &mut a, &mut NoTally);
                brute_within(&p2, q, r, &mut b, &mut NoTally);
                a.sort_unstable();
                assert_eq!(a, b, "2d trial {trial} query {q}");
                grid3.within(q, r, &mut a, &mut NoTally);
                brute_within(&p3, q, r, &mut b, &mut NoTally);
                a.sort_unstable();
                assert_eq!(a, b, "3d trial {trial} query {q}");
            }
        }
    }

    #[test]
    fn boundary_distance_is_inclusive() {
        let pts = [[0.0, 0.0], [0.0, 1.0], [5.0, 5.0]];
        let grid = GridIndex::new(&pts, 1.0);
        let mut out = Vec::new();
        grid.within(0, 1.0, &mut out, &mut NoTally);
        out.sort_unstable();
        assert_eq!(out, vec![0, 1]);
    }

    #[test]
    fn sparse_table_used_for_huge_extents() {
        let pts = [[0.0, 0.0, 0.0], [1e6, 1e6, 1e6], [1e6 + 0.5, 1e6, 1e6]];
        let grid = GridIndex::new(&pts, 1.0);
        assert!(matches!(grid.table, CellTable::Sparse { .. }));
        let mut out = Vec::new();
        grid.within(1, 1.0, &mut out, &mut NoTally);
        out.sort_unstable();
        assert_eq!(out, vec![1, 2]);
        assert_eq!(grid.nearest(0, 1, &mut NoTally)[0].1, 1);
    }

    #[test]
    fn grid_knn_matches_scan() {
        let mut rng = StdRng::seed_from_u64(11);
        for trial in 0..10 {
            let mut pts = random_points::<3>(&mut rng, 400, 10.0);
            // A few far outliers and exact duplicates.
            pts.push([80.0, -60.0, 3.0]);
            pts.push(pts[3]);
            let cell = cell_for_occupancy(&pts, 4 + trial);
            let grid = GridIndex::new(&pts, cell);
            for k in [1, 5, 12] {
                for q in (0..pts.len()).step_by(7) {
                    let a = grid.nearest(q, k, &mut NoTally);
                    let b = brute_nearest(&pts, q, k, &mut NoTally);
                    assert_eq!(a, b, "trial {trial} k {k} q {q}");
                }
            }
        }
    }

    #[test]
    fn knn_on_tiny_sets() {
        let pts = [[0.0, 0.0], [1.0, 0.0]];
        let grid = GridIndex::new(&pts, 0.3);
        assert_eq!(grid.nearest(0, 5, &mut NoTally), vec![(1.0, 1)]);
        assert!(grid.nearest(0, 0, &mut NoTally).is_empty());
    }
}
