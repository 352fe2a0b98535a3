//! Flat `key = value` scene spec files.
//!
//! ```text
//! # comment
//! seed = 2024
//! extent_x = -80 80                 # likewise extent_y, extent_z
//! sensor = 0 0 0
//! ground = cx cy radius blind_radius spacing roughness
//! building = cx cy width depth height spacing        # repeatable
//! lamp = x y height spacing                          # repeatable
//! tree = cx cy cz rx ry rz count                     # repeatable
//! outlier_count = 80
//! cluster_noise = cx cy cz radius count              # repeatable
//! near_signal_noise = stddev count
//! ```
//!
//! Values may be separated by whitespace or commas. Keys left out take the
//! values of [`SceneSpec::empty`].

use std::collections::HashSet;
use std::fmt::Write;
use std::path::Path;

use super::{Building, Ground, Lamp, NearSignalNoise, NoiseBall, SceneSpec, Tree};
use crate::cloud::{fmt_f64, Interval};
use crate::error::{Error, Result};

pub fn load_spec(path: &Path) -> Result<SceneSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spec(&text)
}

struct Line<'a> {
    number: usize,
    key: &'a str,
    values: Vec<&'a str>,
}

impl Line<'_> {
    fn floats<const N: usize>(&self) -> Result<[f64; N]> {
        if self.values.len() != N {
            return Err(Error::parse(
                self.number,
                format!(
                    "`{}` expects {N} values, got {}",
                    self.key,
                    self.values.len()
                ),
            ));
        }
        let mut out = [0.0; N];
        for (slot, v) in out.iter_mut().zip(&self.values) {
            *slot = v
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| {
                    Error::parse(
                        self.number,
                        format!("`{}`: `{v}` is not a finite number", self.key),
                    )
                })?;
        }
        Ok(out)
    }

    fn count(&self, v: f64) -> Result<usize> {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(Error::parse(
                self.number,
                format!("`{}`: count {v} must be a non-negative integer", self.key),
            ))
        }
    }
}

pub fn parse_spec(text: &str) -> Result<SceneSpec> {
    let mut spec = SceneSpec::empty();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, rest) = content.split_once('=').ok_or_else(|| {
            Error::parse(number, format!("expected `key = value`, got `{content}`"))
        })?;
        let key = key.trim();
        let line = Line {
            number,
            key,
            values: rest
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect(),
        };
        let repeatable = matches!(key, "building" | "lamp" | "tree" | "cluster_noise");
        if !repeatable && !seen.insert(key.to_string()) {
            return Err(Error::parse(number, format!("duplicate key `{key}`")));
        }
        match key {
            "seed" => {
                let [v] = line.values[..] else {
                    return Err(Error::parse(number, "`seed` expects 1 value"));
                };
                spec.seed = v.parse().map_err(|_| {
                    Error::parse(number, format!("`seed`: `{v}` is not an unsigned integer"))
                })?;
            }
            "extent_x" | "extent_y" | "extent_z" => {
                let [min, max] = line.floats()?;
                let iv = Interval { min, max };
                match key {
                    "extent_x" => spec.extent.x = iv,
                    "extent_y" => spec.extent.y = iv,
                    _ => spec.extent.z = iv,
                }
            }
            "sensor" => spec.sensor = line.floats()?,
            "ground" => {
                let [cx, cy, radius, blind_radius, spacing, roughness] = line.floats()?;
                spec.ground = Some(Ground {
                    center: [cx, cy],
                    radius,
                    blind_radius,
                    spacing,
                    roughness,
                });
            }
            "building" => {
                let [cx, cy, width, depth, height, spacing] = line.floats()?;
                spec.buildings.push(Building {
                    center: [cx, cy],
                    width,
                    depth,
                    height,
                    spacing,
                });
            }
            "lamp" => {
                let [x, y, height, spacing] = line.floats()?;
                spec.lamps.push(Lamp {
                    position: [x, y],
                    height,
                    spacing,
                });
            }
            "tree" => {
                let [cx, cy, cz, rx, ry, rz, n] = line.floats()?;
                spec.trees.push(Tree {
                    center: [cx, cy, cz],
                    radii: [rx, ry, rz],
                    count: line.count(n)?,
                });
            }
            "outlier_count" => {
                let [n] = line.floats()?;
                spec.outlier_count = line.count(n)?;
            }
            "cluster_noise" => {
                let [cx, cy, cz, radius, n] = line.floats()?;
                spec.cluster_noise.push(NoiseBall {
                    center: [cx, cy, cz],
                    radius,
                    count: line.count(n)?,
                });
            }
            "near_signal_noise" => {
                let [stddev, n] = line.floats()?;
                spec.near_signal_noise = NearSignalNoise {
                    stddev,
                    count: line.count(n)?,
                };
            }
            other => return Err(Error::parse(number, format!("unknown key `{other}`"))),
        }
    }
    Ok(spec)
}

impl SceneSpec {
    /// Serialises to the spec-file format; `parse_spec` reads it back exactly.
    pub fn to_spec_string(&self) -> String {
        let mut buf = ryu::Buffer::new();
        let mut join = |vals: &[f64]| {
            vals.iter()
                .map(|v| fmt_f64(&mut buf, *v).to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut s = String::new();
        let _ = writeln!(s, "seed = {}", self.seed);
        let e = &self.extent;
        let _ = writeln!(s, "extent_x = {}", join(&[e.x.min, e.x.max]));
        let _ = writeln!(s, "extent_y = {}", join(&[e.y.min, e.y.max]));
        let _ = writeln!(s, "extent_z = {}", join(&[e.z.min, e.z.max]));
        let _ = writeln!(s, "sensor = {}", join(&self.sensor));
        if let Some(g) = &self.ground {
            let v = [
                g.center[0],
                g.center[1],
                g.radius,
                g.blind_radius,
                g.spacing,
                g.roughness,
            ];
            let _ = writeln!(s, "ground = {}", join(&v));
        }
        for b in &self.buildings {
            let v = [
                b.center[0],
                b.center[1],
                b.width,
                b.depth,
                b.height,
                b.spacing,
            ];
            let _ = writeln!(s, "building = {}", join(&v));
        }
        for l in &self.lamps {
            let v = [l.position[0], l.position[1], l.height, l.spacing];
            let _ = writeln!(s, "lamp = {}", join(&v));
        }
        for t in &self.trees {
            let v = [
                t.center[0],
                t.center[1],
                t.center[2],
                t.radii[0],
                t.radii[1],
                t.radii[2],
            ];
            let _ = writeln!(s, "tree = {} {}", join(&v), t.count);
        }
        let _ = writeln!(s, "outlier_count = {}", self.outlier_count);
        for b in &self.cluster_noise {
            let v = [b.center[0], b.center[1], b.center[2], b.radius];
            let _ = writeln!(s, "cluster_noise = {} {}", join(&v), b.count);
        }
        let n = &self.near_signal_noise;
        let _ = writeln!(s, "near_signal_noise = {} {}", join(&[n.stddev]), n.count);
        s
    }
}
