//! Principal component reduction of a 3D region to its principal plane, and
//! restoration back to 3D.
//!
//! The covariance uses the population divisor `m`. Eigenpairs come from a
//! cyclic Jacobi solver with a fixed sign convention, so identical inputs give
//! bit-identical bases.

use crate::cloud::Point3;
use crate::error::{Error, Result};

pub type Mat3 = [[f64; 3]; 3];

/// Zero-mean copy of a region's coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredData {
    /// One centred column per point.
    pub columns: Vec<[f64; 3]>,
    pub means: [f64; 3],
}

impl CenteredData {
    pub fn count(&self) -> usize {
        self.columns.len()
    }
}

/// Eigen-decomposition of a region covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    /// Sorted non-increasing, clamped at zero.
    pub eigenvalues: [f64; 3],
    /// `vectors[i]` is the unit eigenvector for `eigenvalues[i]`, i.e. the
    /// i-th column of `E` and the i-th row of `E^T`.
    pub vectors: [[f64; 3]; 3],
}

impl PcaBasis {
    /// The 2x3 projection: first two rows of `E^T`.
    pub fn projection(&self) -> [[f64; 3]; 2] {
        [self.vectors[0], self.vectors[1]]
    }

    /// `E` with eigenvectors as columns.
    pub fn matrix(&self) -> Mat3 {
        let v = &self.vectors;
        [
            [v[0][0], v[1][0], v[2][0]],
            [v[0][1], v[1][1], v[2][1]],
            [v[0][2], v[1][2], v[2][2]],
        ]
    }
}

/// Points expressed in (first, second) principal component coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlaneData {
    pub coords: Vec<[f64; 2]>,
}

impl PlaneData {
    pub fn new(coords: Vec<[f64; 2]>) -> Self {
        PlaneData { coords }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Keeps the columns at `indices`, in the given order.
    pub fn select(&self, indices: &[usize]) -> PlaneData {
        PlaneData::new(indices.iter().map(|&i| self.coords[i]).collect())
    }
}

pub fn center(points: &[Point3]) -> Result<CenteredData> {
    if points.is_empty() {
        return Err(Error::contract("cannot centre an empty point set"));
    }
    let m = points.len() as f64;
    let mut sum = [0.0; 3];
    for p in points {
        sum[0] += p.x;
        sum[1] += p.y;
        sum[2] += p.z;
    }
    let means = [sum[0] / m, sum[1] / m, sum[2] / m];
    let columns = points
        .iter()
        .map(|p| [p.x - means[0], p.y - means[1], p.z - means[2]])
        .collect();
    Ok(CenteredData { columns, means })
}

/// `C = (1/m) * xi * xi^T`, exactly symmetric.
pub fn covariance(data: &CenteredData) -> Mat3 {
    let m = data.count().max(1) as f64;
    let mut c = [[0.0; 3]; 3];
    for col in &data.columns {
        for a in 0..3 {
            for b in a..3 {
                c[a][b] += col[a] * col[b];
            }
        }
    }
    for a in 0..3 {
        for b in a..3 {
            c[a][b] /= m;
            c[b][a] = c[a][b];
        }
    }
    c
}

const MAX_SWEEPS: usize = 50;

fn inf_norm(c: &Mat3) -> f64 {
    c.iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Symmetric 3x3 eigen-decomposition by cyclic Jacobi rotations.
pub fn eigen_sym3(c: &Mat3) -> Result<PcaBasis> {
    if c.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::contract("covariance has non-finite entries"));
    }
    let norm = inf_norm(c);
    let sym_tol = 1e-9 * norm.max(1.0);
    for a in 0..3 {
        for b in (a + 1)..3 {
            if (c[a][b] - c[b][a]).abs() > sym_tol {
                return Err(Error::contract(format!(
                    "matrix is not symmetric: entry ({a},{b}) = {} vs {}",
                    c[a][b], c[b][a]
                )));
            }
        }
    }

    let mut a = *c;
    // Work on the exactly symmetrised upper triangle.
    for i in 0..3 {
        for j in (i + 1)..3 {
            a[j][i] = a[i][j];
        }
    }
    let mut v: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    // An off-diagonal entry is negligible relative to its own diagonal pair,
    // which keeps small eigenvalues and their vectors accurate.
    let negligible = |a: &Mat3, p: usize, q: usize| {
        a[p][q].abs() <= f64::EPSILON * (a[p][p] * a[q][q]).abs().sqrt()
    };
    const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];
    let mut converged = PAIRS.iter().all(|&(p, q)| negligible(&a, p, q));
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        for (p, q) in PAIRS {
            if !negligible(&a, p, q) {
                rotate(&mut a, &mut v, p, q);
            }
        }
        converged = PAIRS.iter().all(|&(p, q)| negligible(&a, p, q));
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "Jacobi iteration did not converge in {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order = [0usize, 1, 2];
    // Stable sort: exact ties keep the original column order.
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));

    let clamp_tol = 1e-10 * norm.max(1.0);
    let mut eigenvalues = [0.0; 3];
    let mut vectors = [[0.0; 3]; 3];
    for (slot, &col) in order.iter().enumerate() {
        let mut lambda = a[col][col];
        if lambda < 0.0 {
            if lambda < -clamp_tol {
                return Err(Error::contract(format!(
                    "matrix is not positive semidefinite (eigenvalue {lambda})"
                )));
            }
            lambda = 0.0;
        }
        eigenvalues[slot] = lambda;
        let mut e = [v[0][col], v[1][col], v[2][col]];
        // Largest-magnitude entry positive; first index wins ties.
        let mut lead = 0;
        for k in 1..3 {
            if e[k].abs() > e[lead].abs() {
                lead = k;
            }
        }
        if e[lead] < 0.0 {
            for x in &mut e {
                *x = -*x;
            }
        }
        vectors[slot] = e;
    }
    Ok(PcaBasis {
        eigenvalues,
        vectors,
    })
}

/// One Jacobi rotation zeroing `a[p][q]`; accumulates the rotation into `v`.
fn rotate(a: &mut Mat3, v: &mut Mat3, p: usize, q: usize) {
    let apq = a[p][q];
    let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
    let t = if theta.abs() > 1e150 {
        0.5 / theta
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // a <- J^T a J, with J the identity except J[p][p] = J[q][q] = c,
    // J[p][q] = s, J[q][p] = -s.
    let r = 3 - p - q;
    let app = a[p][p];
    let aqq = a[q][q];
    let arp = a[r][p];
    let arq = a[r][q];
    a[p][p] = app - t * apq;
    a[q][q] = aqq + t * apq;
    a[p][q] = 0.0;
    a[q][p] = 0.0;
    a[r][p] = c * arp - s * arq;
    a[p][r] = a[r][p];
    a[r][q] = s * arp + c * arq;
    a[q][r] = a[r][q];

    for row in v.iter_mut() {
        let vp = row[p];
        let vq = row[q];
        row[p] = c * vp - s * vq;
        row[q] = s * vp + c * vq;
    }
}

/// `Y = P * xi`: each centred column mapped onto the principal plane.
pub fn project(basis: &PcaBasis, data: &CenteredData) -> PlaneData {
    let [e1, e2] = basis.projection();
    PlaneData::new(
        data.columns
            .iter()
            .map(|col| [dot(&e1, col), dot(&e2, col)])
            .collect(),
    )
}

/// `xi' = P^T * Y' + mean` for every retained plane point.
pub fn restore(basis: &PcaBasis, filtered: &PlaneData, means: &[f64; 3]) -> Vec<Point3> {
    filtered
        .coords
        .iter()
        .map(|c| restore_one(basis, c, means))
        .collect()
}

/// [`restore`] of the columns at `indices` only, in the given order.
pub fn restore_selected(
    basis: &PcaBasis,
    plane: &PlaneData,
    indices: &[usize],
    means: &[f64; 3],
) -> Vec<Point3> {
    indices
        .iter()
        .map(|&i| restore_one(basis, &plane.coords[i], means))
        .collect()
}

#[inline]
fn restore_one(basis: &PcaBasis, &[f, s]: &[f64; 2], means: &[f64; 3]) -> Point3 {
    let [e1, e2] = basis.projection();
    Point3::new(
        e1[0] * f + e2[0] * s + means[0],
        e1[1] * f + e2[1] * s + means[1],
        e1[2] * f + e2[2] * s + means[2],
    )
}

/// Share of total variance captured by the first two components. A region
/// with zero total variance reports 1.
pub fn variance_ratio(basis: &PcaBasis) -> f64 {
    let [l1, l2, l3] = basis.eigenvalues;
    let total = l1 + l2 + l3;
    if total <= 0.0 {
        1.0
    } else {
        (l1 + l2) / total
    }
}

/// The complete reduction of one region.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub centered: CenteredData,
    pub basis: PcaBasis,
    pub plane: PlaneData,
}

pub fn reduce(points: &[Point3]) -> Result<Reduction> {
    let centered = center(points)?;
    let basis = eigen_sym3(&covariance(&centered))?;
    let plane = project(&basis, &centered);
    Ok(Reduction {
        centered,
        basis,
        plane,
    })
}

#[inline]
fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{rngs::StdRng, Rng, SeedableRng};

    fn residual(c: &Mat3, basis: &PcaBasis) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            let e = basis.vectors[i];
            for r in 0..3 {
                let ce = c[r][0] * e[0] + c[r][1] * e[1] + c[r][2] * e[2];
                worst = worst.max((ce - basis.eigenvalues[i] * e[r]).abs());
            }
        }
        worst
    }

    fn random_cloud(rng: &mut StdRng, n: usize) -> Vec<Point3> {
        // Random anisotropic, rotated blob.
        let sx = rng.gen_range(0.1..20.0);
        let sy = rng.gen_range(0.1..20.0);
        let sz = rng.gen_range(0.0..5.0);
        let (a, b) = (rng.gen_range(0.0..6.3f64), rng.gen_range(0.0..6.3f64));
        (0..n)
            .map(|_| {
                let (u, v, w) = (
                    rng.gen_range(-1.0..1.0) * sx,
                    rng.gen_range(-1.0..1.0) * sy,
                    rng.gen_range(-1.0..1.0) * sz,
                );
                let x = u * a.cos() - v * a.sin();
                let y = u * a.sin() + v * a.cos();
                let z = w * b.cos() + y * b.sin() * 0.3;
                Point3::new(x + 3.0, y - 7.0, z + 1.0)
            })
            .collect()
    }

    #[test]
    fn center_two_points() {
        let c = center(&[Point3::new(1.0, 0.0, 0.0), Point3::new(3.0, 0.0, 0.0)]).unwrap();
        assert_eq!(c.means, [2.0, 0.0, 0.0]);
        assert_eq!(c.columns, vec![[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
    }

    #[test]
    fn center_single_point_and_empty() {
        let p = Point3::new(4.0, -2.0, 9.5);
        let c = center(&[p]).unwrap();
        assert_eq!(c.means, [4.0, -2.0, 9.5]);
        assert_eq!(c.columns, vec![[0.0; 3]]);
        assert!(matches!(center(&[]), Err(Error::Contract(_))));
    }

    #[test]
    fn covariance_by_hand() {
        let c = center(&[Point3::new(1.0, 0.0, 0.0), Point3::new(3.0, 0.0, 0.0)]).unwrap();
        assert_eq!(
            covariance(&c),
            [[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]
        );
        let z = center(&[Point3::new(5.0, 5.0, 5.0)]).unwrap();
        assert_eq!(covariance(&z), [[0.0; 3]; 3]);
    }

    #[test]
    fn covariance_matches_per_entry_accumulation() {
        let mut rng = StdRng::seed_from_u64(3);
        let pts = random_cloud(&mut rng, 100);
        let data = center(&pts).unwrap();
        let c = covariance(&data);
        // Independent route: per-entry sums over the raw coordinates.
        let m = pts.len() as f64;
        let coord = |p: &Point3, a: usize| p.to_array()[a];
        for a in 0..3 {
            for b in 0..3 {
                let ma: f64 = pts.iter().map(|p| coord(p, a)).sum::<f64>() / m;
                let mb: f64 = pts.iter().map(|p| coord(p, b)).sum::<f64>() / m;
                let mut acc = 0.0;
                for p in &pts {
                    acc += (coord(p, a) - ma) * (coord(p, b) - mb);
                }
                assert!((c[a][b] - acc / m).abs() < 1e-12, "entry {a}{b}");
            }
        }
    }

    #[test]
    fn diagonal_matrix_is_sorted_permutation() {
        let b = eigen_sym3(&[[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 4.0]]).unwrap();
        assert_eq!(b.eigenvalues, [4.0, 2.0, 1.0]);
        assert_eq!(
            b.vectors,
            [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
        );
    }

    #[test]
    fn identity_is_isotropic() {
        let i3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let b = eigen_sym3(&i3).unwrap();
        assert_eq!(b.eigenvalues, [1.0, 1.0, 1.0]);
        assert!(residual(&i3, &b) <= 1e-8);
    }

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        let asym = [[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(eigen_sym3(&asym), Err(Error::Contract(_))));
        let indefinite = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(matches!(eigen_sym3(&indefinite), Err(Error::Contract(_))));
        let tiny_negative = [[1.0, 0.0, 0.0], [0.0, -1e-12, 0.0], [0.0, 0.0, 1.0]];
        assert_eq!(eigen_sym3(&tiny_negative).unwrap().eigenvalues[2], 0.0);
    }

    #[test]
    fn random_covariances_diagonalise() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..200 {
            let a: Vec<[f64; 3]> = (0..6)
                .map(|_| {
                    [
                        rng.gen_range(-3.0..3.0),
                        rng.gen_range(-3.0..3.0),
                        rng.gen_range(-3.0..3.0),
                    ]
                })
                .collect();
            let mut c = [[0.0; 3]; 3];
            for col in &a {
                for i in 0..3 {
                    for j in 0..3 {
                        c[i][j] += col[i] * col[j] / a.len() as f64;
                    }
                }
            }
            let b = eigen_sym3(&c).unwrap();
            let e = b.matrix();
            // E^T C E
            for i in 0..3 {
                for j in 0..3 {
                    let mut s = 0.0;
                    for r in 0..3 {
                        for k in 0..3 {
                            s += e[r][i] * c[r][k] * e[k][j];
                        }
                    }
                    if i != j {
                        assert!(s.abs() <= 1e-8, "off-diagonal {s}");
                    } else {
                        assert!((s - b.eigenvalues[i]).abs() <= 1e-8);
                    }
                }
            }
            assert!(residual(&c, &b) <= 1e-8 * b.eigenvalues[0].max(1.0));
            assert!(b.eigenvalues[0] >= b.eigenvalues[1] && b.eigenvalues[1] >= b.eigenvalues[2]);
        }
    }

    #[test]
    fn sign_convention_makes_lead_entry_positive() {
        let mut rng = StdRng::seed_from_u64(9);
        let pts = random_cloud(&mut rng, 50);
        let b = reduce(&pts).unwrap().basis;
        for e in b.vectors {
            let lead = e
                .iter()
                .cloned()
                .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn projection_of_axis_data() {
        let pts = [Point3::new(1.0, 0.0, 0.0), Point3::new(3.0, 0.0, 0.0)];
        let r = reduce(&pts).unwrap();
        assert_eq!(r.basis.eigenvalues[0], 1.0);
        assert_eq!(r.plane.coords, vec![[-1.0, 0.0], [1.0, 0.0]]);
    }

    #[test]
    fn first_component_variance_is_largest_eigenvalue() {
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..20 {
            let pts = random_cloud(&mut rng, 200);
            let r = reduce(&pts).unwrap();
            let m = pts.len() as f64;
            let var1: f64 = r.plane.coords.iter().map(|c| c[0] * c[0]).sum::<f64>() / m;
            let var2: f64 = r.plane.coords.iter().map(|c| c[1] * c[1]).sum::<f64>() / m;
            assert!((var1 - r.basis.eigenvalues[0]).abs() <= 1e-9 * r.basis.eigenvalues[0]);
            assert!((var2 - r.basis.eigenvalues[1]).abs() <= 1e-9 * r.basis.eigenvalues[0]);
        }
    }

    #[test]
    fn planar_region_round_trips() {
        let mut rng = StdRng::seed_from_u64(4);
        let pts: Vec<_> = (0..100)
            .map(|_| Point3::new(rng.gen_range(-10.0..10.0), rng.gen_range(-3.0..3.0), 5.0))
            .collect();
        let r = reduce(&pts).unwrap();
        assert_eq!(r.basis.eigenvalues[2], 0.0);
        assert_eq!(variance_ratio(&r.basis), 1.0);
        let back = restore(&r.basis, &r.plane, &r.centered.means);
        for (a, b) in pts.iter().zip(&back) {
            assert!(
                (a.x - b.x).abs() <= 1e-9 && (a.y - b.y).abs() <= 1e-9 && (a.z - b.z).abs() <= 1e-9
            );
        }
        // Pairwise distances survive the projection.
        for i in (0..100).step_by(9) {
            for j in (0..100).step_by(13) {
                let d3 = pts[i].distance(&pts[j]);
                let [f1, s1] = r.plane.coords[i];
                let [f2, s2] = r.plane.coords[j];
                assert!((d3 - (f1 - f2).hypot(s1 - s2)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn restoration_error_is_the_discarded_component() {
        let mut rng = StdRng::seed_from_u64(8);
        let pts = random_cloud(&mut rng, 150);
        let r = reduce(&pts).unwrap();
        let back = restore(&r.basis, &r.plane, &r.centered.means);
        let e3 = r.basis.vectors[2];
        for ((p, q), col) in pts.iter().zip(&back).zip(&r.centered.columns) {
            // Independent oracle: the component of the centred point along e3.
            let along = col[0] * e3[0] + col[1] * e3[1] + col[2] * e3[2];
            let err = p.distance(q);
            assert!((err - along.abs()).abs() <= 1e-9, "{err} vs {along}");
        }
        assert!(restore(&r.basis, &PlaneData::default(), &r.centered.means).is_empty());
    }

    #[test]
    fn variance_ratio_examples() {
        let basis = |l: [f64; 3]| PcaBasis {
            eigenvalues: l,
            vectors: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        };
        assert!((variance_ratio(&basis([4.0, 2.0, 1.0])) - 6.0 / 7.0).abs() < 1e-15);
        assert_eq!(variance_ratio(&basis([1.0, 1.0, 0.0])), 1.0);
        assert!((variance_ratio(&basis([1.0, 1.0, 1.0])) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(variance_ratio(&basis([0.0, 0.0, 0.0])), 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn trace_preserved_and_projection_nonexpansive(
            raw in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0, -5.0f64..5.0), 3..60)
        ) {
            let pts: Vec<Point3> = raw.iter().map(|&(x, y, z)| Point3::new(x, y, z)).collect();
            let r = reduce(&pts).unwrap();
            let c = covariance(&r.centered);
            let trace = c[0][0] + c[1][1] + c[2][2];
            let sum: f64 = r.basis.eigenvalues.iter().sum();
            prop_assert!((trace - sum).abs() <= 1e-9 * trace.max(1e-300));
            for i in 0..pts.len() {
                for j in 0..pts.len() {
                    let [f1, s1] = r.plane.coords[i];
                    let [f2, s2] = r.plane.coords[j];
                    prop_assert!((f1 - f2).hypot(s1 - s2) <= pts[i].distance(&pts[j]) + 1e-9);
                }
            }
            // Determinism.
            prop_assert_eq!(reduce(&pts).unwrap().basis, r.basis);
        }
    }
}
