use std::fs;
use std::path::Path;

use super::{fmt_f64, write_atomic, LabeledCloud, NoiseLabel, Point3};
use crate::error::{Error, Result};

/// Loads a whitespace-separated `x y z [label]` file.
pub fn load_xyz(path: &Path) -> Result<LabeledCloud> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_xyz_str(&text)
}

pub fn load_xyz_str(text: &str) -> Result<LabeledCloud> {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    // Field count of the first data line; every other line must agree.
    let mut arity: Option<usize> = None;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 && fields.len() != 4 {
            return Err(Error::parse(
                lineno,
                format!("expected 3 or 4 fields, found {}", fields.len()),
            ));
        }
        match arity {
            None => arity = Some(fields.len()),
            Some(n) if n != fields.len() => {
                return Err(Error::Format(format!(
                    "line {lineno}: mixed labeled and unlabeled lines"
                )))
            }
            _ => {}
        }
        let mut coord = [0.0f64; 3];
        for (c, f) in coord.iter_mut().zip(&fields) {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::parse(lineno, format!("non-numeric field {f:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(lineno, format!("non-finite coordinate {f:?}")));
            }
            *c = v;
        }
        points.push(Point3::from_array(coord));
        if let Some(f) = fields.get(3) {
            let label = f
                .parse::<u8>()
                .ok()
                .and_then(NoiseLabel::from_code)
                .ok_or_else(|| Error::parse(lineno, format!("invalid label code {f:?}")))?;
            labels.push(label);
        }
    }

    let mut cloud = LabeledCloud::new(points);
    if arity == Some(4) {
        cloud.set_truth(labels)?;
    }
    Ok(cloud)
}

pub fn save_xyz(cloud: &LabeledCloud, path: &Path, include_labels: bool) -> Result<()> {
    let truth = match (include_labels, cloud.truth()) {
        (false, _) => None,
        (true, Some(t)) => Some(t),
        (true, None) => {
            return Err(Error::contract(
                "include_labels requested but the cloud has no truth labels",
            ))
        }
    };
    let mut out = String::with_capacity(cloud.len() * 48);
    let mut buf = ryu::Buffer::new();
    for (i, p) in cloud.points().iter().enumerate() {
        for (axis, v) in p.to_array().into_iter().enumerate() {
            if axis > 0 {
                out.push(' ');
            }
            out.push_str(fmt_f64(&mut buf, v));
        }
        if let Some(t) = truth {
            out.push(' ');
            out.push(char::from(b'0' + t[i].code()));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}
