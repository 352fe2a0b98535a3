//! Point cloud data model: points, ground-truth and predicted noise labels,
//! and plain-text file I/O.
//!
//! Label codes on disk are `0 = Signal`, `1 = IsolatedOutlier`,
//! `2 = ClusteredNoise`, `3 = NearSignalNoise`. Predicted labels use the same
//! codes collapsed to `{0, 1}`.

mod ply;
mod xyz;

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ply::{load_ply, save_ply};
pub use xyz::{load_xyz, load_xyz_str, save_xyz};

/// A point in sensor-centred Cartesian coordinates, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3::new(0.0, 0.0, 0.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    /// Builds a point, rejecting NaN and infinite coordinates.
    pub fn try_new(x: f64, y: f64, z: f64) -> Result<Self> {
        let p = Point3 { x, y, z };
        if p.is_finite() {
            Ok(p)
        } else {
            Err(Error::contract(format!(
                "non-finite coordinate in point ({x}, {y}, {z})"
            )))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }

    /// Distance from `center` measured in the XY plane only.
    pub fn horizontal_distance(&self, center: &Point3) -> f64 {
        let dx = self.x - center.x;
        let dy = self.y - center.y;
        (dx * dx + dy * dy).sqrt()
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Point3::new(self.x * factor, self.y * factor, self.z * factor)
    }
}

/// Ground-truth category of a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NoiseLabel {
    Signal,
    IsolatedOutlier,
    ClusteredNoise,
    NearSignalNoise,
}

impl NoiseLabel {
    pub const ALL: [NoiseLabel; 4] = [
        NoiseLabel::Signal,
        NoiseLabel::IsolatedOutlier,
        NoiseLabel::ClusteredNoise,
        NoiseLabel::NearSignalNoise,
    ];

    pub fn code(self) -> u8 {
        match self {
            NoiseLabel::Signal => 0,
            NoiseLabel::IsolatedOutlier => 1,
            NoiseLabel::ClusteredNoise => 2,
            NoiseLabel::NearSignalNoise => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        NoiseLabel::ALL.get(code as usize).copied()
    }

    pub fn is_noise(self) -> bool {
        self != NoiseLabel::Signal
    }

    /// The binary class used by the metrics.
    pub fn binary(self) -> Prediction {
        if self.is_noise() {
            Prediction::Noise
        } else {
            Prediction::Signal
        }
    }
}

/// Binary filter decision for one point. `Noise` means the filter removed it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Prediction {
    #[default]
    Signal,
    Noise,
}

impl Prediction {
    pub fn code(self) -> u8 {
        match self {
            Prediction::Signal => 0,
            Prediction::Noise => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Prediction::Signal),
            1 => Some(Prediction::Noise),
            _ => None,
        }
    }

    pub fn is_noise(self) -> bool {
        self == Prediction::Noise
    }
}

/// A point cloud with optional per-point ground truth and predictions.
///
/// When present, `truth` and `predicted` always have one entry per point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledCloud {
    points: Vec<Point3>,
    truth: Option<Vec<NoiseLabel>>,
    predicted: Option<Vec<Prediction>>,
    pub sensor_origin: Point3,
}

impl LabeledCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        LabeledCloud {
            points,
            ..Default::default()
        }
    }

    pub fn with_truth(points: Vec<Point3>, truth: Vec<NoiseLabel>) -> Result<Self> {
        let mut cloud = LabeledCloud::new(points);
        cloud.set_truth(truth)?;
        Ok(cloud)
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn truth(&self) -> Option<&[NoiseLabel]> {
        self.truth.as_deref()
    }

    pub fn predicted(&self) -> Option<&[Prediction]> {
        self.predicted.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn set_truth(&mut self, truth: Vec<NoiseLabel>) -> Result<()> {
        check_len("truth", truth.len(), self.points.len())?;
        self.truth = Some(truth);
        Ok(())
    }

    pub fn set_predicted(&mut self, predicted: Vec<Prediction>) -> Result<()> {
        check_len("predicted", predicted.len(), self.points.len())?;
        self.predicted = Some(predicted);
        Ok(())
    }

    pub fn clear_predicted(&mut self) {
        self.predicted = None;
    }

    pub fn with_sensor_origin(mut self, origin: Point3) -> Self {
        self.sensor_origin = origin;
        self
    }

    /// Picks the points at `indices`, carrying their labels along.
    pub fn select(&self, indices: &[usize]) -> LabeledCloud {
        LabeledCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            truth: self
                .truth
                .as_ref()
                .map(|t| indices.iter().map(|&i| t[i]).collect()),
            predicted: self
                .predicted
                .as_ref()
                .map(|p| indices.iter().map(|&i| p[i]).collect()),
            sensor_origin: self.sensor_origin,
        }
    }

    /// Every coordinate (and the sensor origin) multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> LabeledCloud {
        LabeledCloud {
            points: self.points.iter().map(|p| p.scaled(factor)).collect(),
            truth: self.truth.clone(),
            predicted: self.predicted.clone(),
            sensor_origin: self.sensor_origin.scaled(factor),
        }
    }

    /// Truth-label histogram indexed by label code.
    pub fn truth_histogram(&self) -> Option<[usize; 4]> {
        self.truth.as_ref().map(|t| {
            let mut h = [0usize; 4];
            for l in t {
                h[l.code() as usize] += 1;
            }
            h
        })
    }

    pub fn bounding_stats(&self) -> Result<BoundingStats> {
        bounding_stats(&self.points)
    }
}

fn check_len(what: &str, got: usize, points: usize) -> Result<()> {
    if got != points {
        return Err(Error::contract(format!(
            "{what} label count {got} does not match point count {points}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub min: f64,
    pub max: f64,
}

impl Interval {
    pub fn extent(&self) -> f64 {
        self.max - self.min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundingStats {
    pub x_range: Interval,
    pub y_range: Interval,
    pub z_range: Interval,
    /// Points per cubic meter of the bounding box. Axis extents below 1 m
    /// count as 1 m.
    pub density: f64,
}

pub fn bounding_stats(points: &[Point3]) -> Result<BoundingStats> {
    let first = points
        .first()
        .ok_or_else(|| Error::contract("bounding_stats on an empty cloud"))?;
    let mut lo = first.to_array();
    let mut hi = lo;
    for p in &points[1..] {
        for (axis, v) in p.to_array().into_iter().enumerate() {
            lo[axis] = lo[axis].min(v);
            hi[axis] = hi[axis].max(v);
        }
    }
    let volume: f64 = (0..3).map(|a| (hi[a] - lo[a]).max(1.0)).product();
    let interval = |a: usize| Interval {
        min: lo[a],
        max: hi[a],
    };
    Ok(BoundingStats {
        x_range: interval(0),
        y_range: interval(1),
        z_range: interval(2),
        density: points.len() as f64 / volume,
    })
}

/// Writes `contents` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::contract(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let result = fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(contents)?;
            f.sync_all()
        })
        .and_then(|_| fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

/// Formats a coordinate so that parsing it back yields the same bits.
pub(crate) fn fmt_f64(buf: &mut ryu::Buffer, v: f64) -> &str {
    buf.format_finite(v)
}

/// Reads a predicted-label sidecar: one `0`/`1` code per line.
pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_predictions(&text)
}

pub fn parse_predictions(text: &str) -> Result<Vec<Prediction>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let code: u8 = line
            .parse()
            .map_err(|_| Error::parse(i + 1, format!("invalid label code {line:?}")))?;
        let p = Prediction::from_code(code).ok_or_else(|| {
            Error::parse(i + 1, format!("predicted label must be 0 or 1, got {code}"))
        })?;
        out.push(p);
    }
    Ok(out)
}

pub fn save_predictions(predicted: &[Prediction], path: &Path) -> Result<()> {
    let mut s = String::with_capacity(predicted.len() * 2);
    for p in predicted {
        s.push(char::from(b'0' + p.code()));
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}
