//! Equal-volume cylinder shells around the sensor.
//!
//! Shell `i` (1-based) covers horizontal distances in `(r_{i-1}, r_i]` with
//! `r_i = sqrt(i) * r_1` and `r_1 = r_max / sqrt(t)`, so every shell has the
//! same footprint area.

use serde::Serialize;

use crate::cloud::{LabeledCloud, Point3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CylinderShells {
    t: usize,
    r1: f64,
    r_max: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub center: Point3,
    /// `radius(0..=t)`, cached.
    #[serde(skip)]
    bounds: Vec<f64>,
}

impl CylinderShells {
    pub fn new(t: usize, r_max: f64, z_min: f64, z_max: f64, center: Point3) -> Result<Self> {
        if t == 0 {
            return Err(Error::contract("shell count must be at least 1"));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::Degenerate(format!(
                "outer radius must be positive, got {r_max}"
            )));
        }
        let r1 = r_max / (t as f64).sqrt();
        let bounds = (0..=t)
            .map(|i| match i {
                0 => 0.0,
                i if i == t => r_max,
                i => (i as f64).sqrt() * r1,
            })
            .collect();
        Ok(CylinderShells {
            t,
            r1,
            r_max,
            z_min,
            z_max,
            center,
            bounds,
        })
    }

    pub fn count(&self) -> usize {
        self.t
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    /// Outer radius of shell `i`, `1 <= i <= t`. The outermost radius is the
    /// measured `r_max` itself (mathematically equal to `sqrt(t) * r_1`) so the
    /// farthest point always falls inside.
    pub fn radius(&self, i: usize) -> f64 {
        assert!(i <= self.t, "shell index {i} beyond {}", self.t);
        self.bounds[i]
    }

    pub fn radii(&self) -> Vec<f64> {
        (1..=self.t).map(|i| self.radius(i)).collect()
    }

    pub fn height(&self) -> f64 {
        self.z_max - self.z_min
    }

    pub fn shell_volume(&self, i: usize) -> f64 {
        let (outer, inner) = (self.radius(i), self.radius(i - 1));
        std::f64::consts::PI * (outer * outer - inner * inner) * self.height()
    }

    /// 1-based index of the shell containing `p`; a point exactly on `r_i`
    /// belongs to shell `i`.
    pub fn assign_region(&self, p: &Point3) -> Result<usize> {
        let d = p.horizontal_distance(&self.center);
        if !(d <= self.r_max) {
            return Err(Error::OutOfDomain {
                distance: d,
                outer: self.r_max,
            });
        }
        let q = d / self.r1;
        let mut i = ((q * q).ceil() as usize).clamp(1, self.t);
        while i > 1 && d <= self.bounds[i - 1] {
            i -= 1;
        }
        while d > self.bounds[i] {
            i += 1;
        }
        Ok(i)
    }
}

pub fn build_shells(cloud: &LabeledCloud, t: usize) -> Result<CylinderShells> {
    if cloud.is_empty() {
        return Err(Error::contract("cannot segment an empty cloud"));
    }
    if t == 0 {
        return Err(Error::contract("shell count must be at least 1"));
    }
    let center = cloud.sensor_origin;
    let mut r_max: f64 = 0.0;
    let mut z_min = f64::INFINITY;
    let mut z_max = f64::NEG_INFINITY;
    for p in cloud.points() {
        r_max = r_max.max(p.horizontal_distance(&center));
        z_min = z_min.min(p.z);
        z_max = z_max.max(p.z);
    }
    if r_max == 0.0 {
        return Err(Error::Degenerate(
            "every point lies on the sensor axis (r_max = 0)".into(),
        ));
    }
    CylinderShells::new(t, r_max, z_min, z_max, center)
}

/// The points of one shell and where they came from.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Region {
    /// 1-based shell index.
    pub index: usize,
    /// Positions in the source cloud, ascending.
    pub source: Vec<usize>,
    pub points: Vec<Point3>,
}

impl Region {
    pub fn len(&self) -> usize {
        self.source.len()
    }

    pub fn is_empty(&self) -> bool {
        self.source.is_empty()
    }
}

/// Partitions the cloud into `t` regions (empty ones included), in shell order.
pub fn split(cloud: &LabeledCloud, shells: &CylinderShells) -> Result<Vec<Region>> {
    let assigned = cloud
        .points()
        .iter()
        .map(|p| shells.assign_region(p))
        .collect::<Result<Vec<usize>>>()?;
    let mut sizes = vec![0usize; shells.count()];
    for &r in &assigned {
        sizes[r - 1] += 1;
    }
    let mut regions: Vec<Region> = sizes
        .iter()
        .enumerate()
        .map(|(k, &n)| Region {
            index: k + 1,
            source: Vec::with_capacity(n),
            points: Vec::with_capacity(n),
        })
        .collect();
    for ((i, p), r) in cloud.points().iter().enumerate().zip(assigned) {
        let region = &mut regions[r - 1];
        region.source.push(i);
        region.points.push(*p);
    }
    Ok(regions)
}
