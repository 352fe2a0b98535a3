//! Synthetic labeled scenes: a grass disc around the sensor, box-shell
//! buildings, sparse lamp posts, ellipsoid tree canopies, and the three noise
//! categories (isolated outliers, clustered noise balls, near-signal jitter).
//!
//! Generation is a pure function of the spec; every random draw comes from a
//! single [`XorShift64Star`] stream seeded with `spec.seed`, consumed in the
//! fixed order ground, buildings, lamps, trees, outliers, clustered noise,
//! near-signal noise.

mod spec_file;

use std::collections::HashMap;
use std::ops::Range;

use serde::Serialize;

use crate::cloud::{Interval, LabeledCloud, NoiseLabel, Point3};
use crate::error::{Error, Result};
use crate::rng::XorShift64Star;

pub use spec_file::{load_spec, parse_spec};

/// Minimum distance from any isolated outlier to the nearest signal point.
pub const OUTLIER_CLEARANCE: f64 = 5.0;
/// Rejection-sampling attempts allowed per requested outlier.
pub const OUTLIER_RETRIES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extent {
    pub x: Interval,
    pub y: Interval,
    pub z: Interval,
}

impl Default for Extent {
    fn default() -> Self {
        Extent {
            x: Interval {
                min: -80.0,
                max: 80.0,
            },
            y: Interval {
                min: -80.0,
                max: 80.0,
            },
            z: Interval {
                min: 0.0,
                max: 20.0,
            },
        }
    }
}

impl Extent {
    pub fn contains(&self, p: &Point3) -> bool {
        let inside = |iv: &Interval, v: f64| iv.min <= v && v <= iv.max;
        inside(&self.x, p.x) && inside(&self.y, p.y) && inside(&self.z, p.z)
    }

    fn contains_box(&self, lo: [f64; 3], hi: [f64; 3]) -> bool {
        self.contains(&Point3::from_array(lo)) && self.contains(&Point3::from_array(hi))
    }

    fn clamp(&self, p: Point3) -> Point3 {
        Point3::new(
            p.x.clamp(self.x.min, self.x.max),
            p.y.clamp(self.y.min, self.y.max),
            p.z.clamp(self.z.min, self.z.max),
        )
    }
}

/// Jittered grid on an annulus `blind_radius <= r <= radius` around `center`,
/// at height `extent.z.min + roughness * u`, `u` uniform in `[0, 1)`.
/// Building footprints are left empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ground {
    pub center: [f64; 2],
    pub radius: f64,
    pub blind_radius: f64,
    pub spacing: f64,
    pub roughness: f64,
}

/// Walls and roof of an axis-aligned box standing on the extent floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Building {
    pub center: [f64; 2],
    /// Extent along x.
    pub width: f64,
    /// Extent along y.
    pub depth: f64,
    pub height: f64,
    pub spacing: f64,
}

/// A vertical column of points every `spacing` meters up to `height`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lamp {
    pub position: [f64; 2],
    pub height: f64,
    pub spacing: f64,
}

/// `count` points uniform inside an axis-aligned ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tree {
    pub center: [f64; 3],
    pub radii: [f64; 3],
    pub count: usize,
}

/// `count` points uniform inside a ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseBall {
    pub center: [f64; 3],
    pub radius: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NearSignalNoise {
    pub stddev: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneSpec {
    pub seed: u64,
    pub extent: Extent,
    pub sensor: [f64; 3],
    pub ground: Option<Ground>,
    pub buildings: Vec<Building>,
    pub lamps: Vec<Lamp>,
    pub trees: Vec<Tree>,
    pub outlier_count: usize,
    pub cluster_noise: Vec<NoiseBall>,
    pub near_signal_noise: NearSignalNoise,
}

impl Default for SceneSpec {
    /// The frozen default scene: two buildings, a lamp post near the middle,
    /// a grass disc, one tree, and scattered noise. About 33k points.
    fn default() -> Self {
        SceneSpec {
            seed: 2024,
            extent: Extent::default(),
            sensor: [0.0, 0.0, 0.0],
            ground: Some(Ground {
                center: [0.0, 0.0],
                radius: 32.0,
                blind_radius: 3.0,
                spacing: 0.34,
                roughness: 0.05,
            }),
            buildings: vec![
                Building {
                    center: [-18.0, 12.0],
                    width: 14.0,
                    depth: 10.0,
                    height: 8.0,
                    spacing: 0.45,
                },
                Building {
                    center: [16.0, -14.0],
                    width: 12.0,
                    depth: 16.0,
                    height: 10.0,
                    spacing: 0.45,
                },
            ],
            lamps: vec![Lamp {
                position: [3.0, 8.0],
                height: 10.0,
                spacing: 0.5,
            }],
            trees: vec![Tree {
                center: [-8.0, -15.0, 4.5],
                radii: [2.5, 2.5, 3.0],
                count: 1200,
            }],
            outlier_count: 80,
            cluster_noise: vec![
                ball([45.0, 20.0, 3.0]),
                ball([-50.0, -30.0, 6.0]),
                ball([10.0, 55.0, 2.0]),
                ball([-40.0, 45.0, 9.0]),
                ball([60.0, -50.0, 4.0]),
                ball([-15.0, -60.0, 12.0]),
                // Clutter close to the sensor, inside the ground's blind zone.
                ball([0.0, 0.0, 1.5]),
            ],
            near_signal_noise: NearSignalNoise {
                stddev: 0.3,
                count: 30,
            },
        }
    }
}

fn ball(center: [f64; 3]) -> NoiseBall {
    NoiseBall {
        center,
        radius: 1.2,
        count: 25,
    }
}

impl SceneSpec {
    /// No features and no noise; generates an empty cloud.
    pub fn empty() -> Self {
        SceneSpec {
            seed: 0,
            extent: Extent::default(),
            sensor: [0.0, 0.0, 0.0],
            ground: None,
            buildings: Vec::new(),
            lamps: Vec::new(),
            trees: Vec::new(),
            outlier_count: 0,
            cluster_noise: Vec::new(),
            near_signal_noise: NearSignalNoise {
                stddev: 0.0,
                count: 0,
            },
        }
    }

    /// Same geometry with roughly `factor` times as many points: surface
    /// spacings shrink by `sqrt(factor)`, line spacings by `factor`, and all
    /// counts grow by `factor`.
    pub fn scaled(&self, factor: f64) -> SceneSpec {
        let area = factor.sqrt();
        let count = |c: usize| (c as f64 * factor).round() as usize;
        let mut s = self.clone();
        if let Some(g) = &mut s.ground {
            g.spacing /= area;
        }
        for b in &mut s.buildings {
            b.spacing /= area;
        }
        for l in &mut s.lamps {
            l.spacing /= factor;
        }
        for t in &mut s.trees {
            t.count = count(t.count);
        }
        s.outlier_count = count(s.outlier_count);
        for b in &mut s.cluster_noise {
            b.count = count(b.count);
        }
        s.near_signal_noise.count = count(s.near_signal_noise.count);
        s
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::contract(what));
        let e = &self.extent;
        for (name, iv) in [("x", e.x), ("y", e.y), ("z", e.z)] {
            if !(iv.min.is_finite() && iv.max.is_finite() && iv.min < iv.max) {
                return bad(format!(
                    "extent {name} must be a finite, non-empty interval"
                ));
            }
        }
        let floor = e.z.min;
        if let Some(g) = &self.ground {
            if !(g.spacing > 0.0 && g.radius > 0.0 && g.blind_radius >= 0.0 && g.roughness >= 0.0) {
                return bad("ground spacing and radius must be positive".into());
            }
            let [cx, cy] = g.center;
            let lo = [cx - g.radius, cy - g.radius, floor];
            let hi = [cx + g.radius, cy + g.radius, floor + g.roughness];
            if !e.contains_box(lo, hi) {
                return bad("ground disc leaves the extent".into());
            }
        }
        for (i, b) in self.buildings.iter().enumerate() {
            if !(b.spacing > 0.0 && b.width > 0.0 && b.depth > 0.0 && b.height > 0.0) {
                return bad(format!("building {i} needs positive size and spacing"));
            }
            let (lo, hi) = b.bounds(floor);
            if !e.contains_box(lo, hi) {
                return bad(format!("building {i} leaves the extent"));
            }
        }
        for (i, l) in self.lamps.iter().enumerate() {
            if !(l.spacing > 0.0 && l.height > 0.0) {
                return bad(format!("lamp {i} needs positive height and spacing"));
            }
            let [x, y] = l.position;
            if !e.contains_box([x, y, floor], [x, y, floor + l.height]) {
                return bad(format!("lamp {i} leaves the extent"));
            }
        }
        for (i, t) in self.trees.iter().enumerate() {
            if t.radii.iter().any(|r| !(*r > 0.0)) {
                return bad(format!("tree {i} needs positive radii"));
            }
            let lo = [0, 1, 2].map(|k| t.center[k] - t.radii[k]);
            let hi = [0, 1, 2].map(|k| t.center[k] + t.radii[k]);
            if !e.contains_box(lo, hi) {
                return bad(format!("tree {i} leaves the extent"));
            }
        }
        for (i, b) in self.cluster_noise.iter().enumerate() {
            if !(b.radius > 0.0) {
                return bad(format!("noise ball {i} needs a positive radius"));
            }
            let lo = b.center.map(|c| c - b.radius);
            let hi = b.center.map(|c| c + b.radius);
            if !e.contains_box(lo, hi) {
                return bad(format!("noise ball {i} leaves the extent"));
            }
        }
        let n = &self.near_signal_noise;
        if !(n.stddev >= 0.0 && n.stddev.is_finite()) {
            return bad("near-signal stddev must be finite and non-negative".into());
        }
        if !e.contains(&Point3::from_array(self.sensor)) {
            return bad("sensor lies outside the extent".into());
        }
        Ok(())
    }
}

impl Building {
    fn bounds(&self, floor: f64) -> ([f64; 3], [f64; 3]) {
        let [cx, cy] = self.center;
        (
            [cx - self.width / 2.0, cy - self.depth / 2.0, floor],
            [
                cx + self.width / 2.0,
                cy + self.depth / 2.0,
                floor + self.height,
            ],
        )
    }

    fn covers(&self, x: f64, y: f64) -> bool {
        let [cx, cy] = self.center;
        (x - cx).abs() <= self.width / 2.0 && (y - cy).abs() <= self.depth / 2.0
    }
}

/// One generated feature: its points occupy `range` in the output cloud.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeatureCount {
    pub feature: String,
    pub label: NoiseLabel,
    pub points: usize,
    pub range: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SceneManifest {
    pub features: Vec<FeatureCount>,
    /// Point totals indexed by [`NoiseLabel::code`].
    pub totals: [usize; 4],
}

impl SceneManifest {
    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn total(&self) -> usize {
        self.totals.iter().sum()
    }

    pub fn feature(&self, name: &str) -> Option<&FeatureCount> {
        self.features.iter().find(|f| f.feature == name)
    }
}

struct Builder {
    points: Vec<Point3>,
    truth: Vec<NoiseLabel>,
    manifest: SceneManifest,
}

impl Builder {
    fn feature(&mut self, name: String, label: NoiseLabel, pts: Vec<Point3>) {
        let start = self.points.len();
        let n = pts.len();
        self.points.extend(pts);
        self.truth.extend(std::iter::repeat(label).take(n));
        self.manifest.totals[label.code() as usize] += n;
        self.manifest.features.push(FeatureCount {
            feature: name,
            label,
            points: n,
            range: start..start + n,
        });
    }
}

pub fn generate(spec: &SceneSpec) -> Result<LabeledCloud> {
    generate_with_manifest(spec).map(|(cloud, _)| cloud)
}

/// Per-feature point counts and label totals of the scene `spec` generates.
pub fn describe(spec: &SceneSpec) -> Result<SceneManifest> {
    generate_with_manifest(spec).map(|(_, m)| m)
}

pub fn generate_with_manifest(spec: &SceneSpec) -> Result<(LabeledCloud, SceneManifest)> {
    spec.validate()?;
    let mut rng = XorShift64Star::new(spec.seed);
    let floor = spec.extent.z.min;
    let mut b = Builder {
        points: Vec::new(),
        truth: Vec::new(),
        manifest: SceneManifest::default(),
    };

    if let Some(g) = &spec.ground {
        b.feature(
            "ground".into(),
            NoiseLabel::Signal,
            ground_points(g, &spec.buildings, floor, &mut rng),
        );
    }
    for (i, bld) in spec.buildings.iter().enumerate() {
        b.feature(
            format!("building[{i}]"),
            NoiseLabel::Signal,
            building_points(bld, floor),
        );
    }
    for (i, l) in spec.lamps.iter().enumerate() {
        let n = (l.height / l.spacing + 1e-9).floor() as usize;
        let [x, y] = l.position;
        let pts = (1..=n)
            .map(|k| Point3::new(x, y, floor + k as f64 * l.spacing))
            .collect();
        b.feature(format!("lamp[{i}]"), NoiseLabel::Signal, pts);
    }
    for (i, t) in spec.trees.iter().enumerate() {
        let pts = (0..t.count)
            .map(|_| {
                let u = unit_ball(&mut rng);
                Point3::from_array([0, 1, 2].map(|k| t.center[k] + t.radii[k] * u[k]))
            })
            .collect();
        b.feature(format!("tree[{i}]"), NoiseLabel::Signal, pts);
    }

    let signal_end = b.points.len();
    if spec.outlier_count > 0 {
        let pts = outliers(spec, &b.points[..signal_end], &mut rng)?;
        b.feature("isolated_outliers".into(), NoiseLabel::IsolatedOutlier, pts);
    }
    for (i, nb) in spec.cluster_noise.iter().enumerate() {
        let pts = (0..nb.count)
            .map(|_| {
                let u = unit_ball(&mut rng);
                Point3::from_array([0, 1, 2].map(|k| nb.center[k] + nb.radius * u[k]))
            })
            .collect();
        b.feature(
            format!("cluster_noise[{i}]"),
            NoiseLabel::ClusteredNoise,
            pts,
        );
    }
    let near = &spec.near_signal_noise;
    if near.count > 0 {
        if signal_end == 0 {
            return Err(Error::Generation(
                "near-signal noise requested but the scene has no signal".into(),
            ));
        }
        let pts = (0..near.count)
            .map(|_| {
                let base = b.points[rng.below(signal_end)];
                let p = Point3::new(
                    base.x + near.stddev * rng.normal(),
                    base.y + near.stddev * rng.normal(),
                    base.z + near.stddev * rng.normal(),
                );
                spec.extent.clamp(p)
            })
            .collect();
        b.feature("near_signal_noise".into(), NoiseLabel::NearSignalNoise, pts);
    }

    let Builder {
        points,
        truth,
        manifest,
    } = b;
    let cloud = LabeledCloud::with_truth(points, truth)?
        .with_sensor_origin(Point3::from_array(spec.sensor));
    Ok((cloud, manifest))
}

fn ground_points(
    g: &Ground,
    buildings: &[Building],
    floor: f64,
    rng: &mut XorShift64Star,
) -> Vec<Point3> {
    let steps = (g.radius / g.spacing).ceil() as i64;
    let jitter = 0.3 * g.spacing;
    let mut out = Vec::new();
    for i in -steps..=steps {
        for j in -steps..=steps {
            let x = g.center[0] + i as f64 * g.spacing + rng.uniform(-jitter, jitter);
            let y = g.center[1] + j as f64 * g.spacing + rng.uniform(-jitter, jitter);
            let z = floor + g.roughness * rng.next_f64();
            let r = (x - g.center[0]).hypot(y - g.center[1]);
            if r < g.blind_radius || r > g.radius || buildings.iter().any(|b| b.covers(x, y)) {
                continue;
            }
            out.push(Point3::new(x, y, z));
        }
    }
    out
}

/// Cell-centred samples covering `[0, len]` at roughly `spacing`.
fn stations(len: f64, spacing: f64) -> impl Iterator<Item = f64> {
    let n = (len / spacing).round().max(1.0) as usize;
    let step = len / n as f64;
    (0..n).map(move |k| (k as f64 + 0.5) * step)
}

fn building_points(b: &Building, floor: f64) -> Vec<Point3> {
    let (lo, hi) = b.bounds(floor);
    let mut out = Vec::new();
    for z in stations(b.height, b.spacing) {
        for u in stations(b.width, b.spacing) {
            out.push(Point3::new(lo[0] + u, lo[1], floor + z));
            out.push(Point3::new(lo[0] + u, hi[1], floor + z));
        }
        for v in stations(b.depth, b.spacing) {
            out.push(Point3::new(lo[0], lo[1] + v, floor + z));
            out.push(Point3::new(hi[0], lo[1] + v, floor + z));
        }
    }
    for u in stations(b.width, b.spacing) {
        for v in stations(b.depth, b.spacing) {
            out.push(Point3::new(lo[0] + u, lo[1] + v, hi[2]));
        }
    }
    out
}

fn unit_ball(rng: &mut XorShift64Star) -> [f64; 3] {
    loop {
        let v = [
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
        ];
        if v.iter().map(|c| c * c).sum::<f64>() <= 1.0 {
            return v;
        }
    }
}

type Cell = (i64, i64, i64);

/// Bucketed signal points for clearance checks.
struct Clearance<'a> {
    points: &'a [Point3],
    cells: HashMap<Cell, Vec<usize>>,
}

impl<'a> Clearance<'a> {
    fn new(points: &'a [Point3]) -> Self {
        let mut cells: HashMap<Cell, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::cell(p)).or_default().push(i);
        }
        Clearance { points, cells }
    }

    fn cell(p: &Point3) -> Cell {
        let f = |v: f64| (v / OUTLIER_CLEARANCE).floor() as i64;
        (f(p.x), f(p.y), f(p.z))
    }

    fn is_clear(&self, p: &Point3) -> bool {
        let (cx, cy, cz) = Self::cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) {
                        if ids
                            .iter()
                            .any(|&i| self.points[i].distance(p) < OUTLIER_CLEARANCE)
                        {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

fn outliers(spec: &SceneSpec, signal: &[Point3], rng: &mut XorShift64Star) -> Result<Vec<Point3>> {
    let clearance = Clearance::new(signal);
    let e = &spec.extent;
    let mut out = Vec::with_capacity(spec.outlier_count);
    let budget = OUTLIER_RETRIES * spec.outlier_count;
    let mut attempts = 0;
    while out.len() < spec.outlier_count {
        if attempts == budget {
            return Err(Error::Generation(format!(
                "placed only {} of {} isolated outliers after {budget} attempts; the extent is saturated",
                out.len(),
                spec.outlier_count
            )));
        }
        attempts += 1;
        let p = Point3::new(
            rng.uniform(e.x.min, e.x.max),
            rng.uniform(e.y.min, e.y.max),
            rng.uniform(e.z.min, e.z.max),
        );
        if clearance.is_clear(&p) {
            out.push(p);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> SceneSpec {
        SceneSpec {
            seed: 7,
            ground: Some(Ground {
                center: [0.0, 0.0],
                radius: 10.0,
                blind_radius: 1.0,
                spacing: 0.5,
                roughness: 0.05,
            }),
            buildings: vec![Building {
                center: [4.0, 4.0],
                width: 3.0,
                depth: 2.0,
                height: 3.0,
                spacing: 0.5,
            }],
            lamps: vec![Lamp {
                position: [-3.0, 2.0],
                height: 5.0,
                spacing: 0.5,
            }],
            trees: vec![Tree {
                center: [-4.0, -4.0, 3.0],
                radii: [1.0, 1.0, 1.5],
                count: 100,
            }],
            outlier_count: 20,
            cluster_noise: vec![NoiseBall {
                center: [30.0, 30.0, 5.0],
                radius: 1.0,
                count: 15,
            }],
            near_signal_noise: NearSignalNoise {
                stddev: 0.3,
                count: 10,
            },
            ..SceneSpec::empty()
        }
    }

    #[test]
    fn noise_free_spec_is_all_signal() {
        let spec = SceneSpec {
            outlier_count: 0,
            cluster_noise: vec![],
            near_signal_noise: NearSignalNoise {
                stddev: 0.3,
                count: 0,
            },
            ..small_spec()
        };
        let c = generate(&spec).unwrap();
        assert!(!c.is_empty());
        assert!(c.truth().unwrap().iter().all(|l| *l == NoiseLabel::Signal));
    }

    #[test]
    fn manifest_matches_histogram() {
        let (c, m) = generate_with_manifest(&small_spec()).unwrap();
        assert_eq!(c.truth_histogram().unwrap(), m.totals);
        assert_eq!(m.total(), c.len());
        assert_eq!(describe(&small_spec()).unwrap(), m);
        assert_eq!(m.feature("lamp[0]").unwrap().points, 10);
        assert_eq!(m.feature("tree[0]").unwrap().points, 100);
        assert_eq!(m.totals[1], 20);
        assert_eq!(m.totals[2], 15);
        assert_eq!(m.totals[3], 10);
    }

    #[test]
    fn empty_spec_gives_empty_manifest() {
        let (c, m) = generate_with_manifest(&SceneSpec::empty()).unwrap();
        assert!(c.is_empty());
        assert!(m.is_empty());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&small_spec()).unwrap();
        let b = generate(&small_spec()).unwrap();
        assert_eq!(a, b);
        let c = generate(&small_spec().with_seed(8)).unwrap();
        assert_ne!(a.points(), c.points());
    }

    #[test]
    fn outliers_keep_their_distance() {
        let (c, m) = generate_with_manifest(&small_spec()).unwrap();
        let truth = c.truth().unwrap();
        let signal: Vec<_> = (0..c.len())
            .filter(|&i| truth[i] == NoiseLabel::Signal)
            .collect();
        for i in m.feature("isolated_outliers").unwrap().range.clone() {
            assert_eq!(truth[i], NoiseLabel::IsolatedOutlier);
            for &s in &signal {
                assert!(c.points()[i].distance(&c.points()[s]) >= OUTLIER_CLEARANCE);
            }
        }
    }

    #[test]
    fn everything_inside_extent() {
        let spec = small_spec();
        let c = generate(&spec).unwrap();
        assert!(c.points().iter().all(|p| spec.extent.contains(p)));
        let big = generate(&SceneSpec::default()).unwrap();
        assert!(big
            .points()
            .iter()
            .all(|p| SceneSpec::default().extent.contains(p)));
    }

    #[test]
    fn saturated_extent_fails() {
        // Every point of the box lies within 4.6 m of the ground disc.
        let spec = SceneSpec {
            extent: Extent {
                x: Interval {
                    min: -10.0,
                    max: 10.0,
                },
                y: Interval {
                    min: -10.0,
                    max: 10.0,
                },
                z: Interval { min: 0.0, max: 2.0 },
            },
            ground: small_spec().ground,
            outlier_count: 5,
            ..SceneSpec::empty()
        };
        assert!(matches!(generate(&spec), Err(Error::Generation(_))));
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        let mut spec = small_spec();
        spec.buildings[0].center = [79.0, 0.0];
        assert!(matches!(generate(&spec), Err(Error::Contract(_))));
        let mut spec = small_spec();
        spec.lamps[0].spacing = 0.0;
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn default_scene_has_expected_scale() {
        let m = describe(&SceneSpec::default()).unwrap();
        let n = m.total() as f64;
        assert!((n - 32_839.0).abs() <= 0.1 * 32_839.0, "{n}");
        for f in m
            .features
            .iter()
            .filter(|f| f.feature.starts_with("building"))
        {
            assert!(f.points >= 100, "{} has {}", f.feature, f.points);
        }
        assert_eq!(m.feature("lamp[0]").unwrap().points, 20);
    }

    #[test]
    fn scaling_multiplies_counts() {
        let base = describe(&small_spec()).unwrap().total() as f64;
        let big = describe(&small_spec().scaled(3.0)).unwrap().total() as f64;
        assert!((big / base - 3.0).abs() < 0.3, "{}", big / base);
    }
}
