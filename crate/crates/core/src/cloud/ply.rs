//! ASCII PLY 1.0 reader and writer for the `vertex` element.

use std::fs;
use std::path::Path;

use super::{fmt_f64, write_atomic, LabeledCloud, NoiseLabel, Point3};
use crate::error::{Error, Result};

struct Element {
    name: String,
    count: usize,
    /// Scalar property names, in column order. `None` marks a list property.
    properties: Vec<Option<String>>,
}

pub fn load_ply(path: &Path) -> Result<LabeledCloud> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_ply(&bytes)
}

pub(crate) fn parse_ply(bytes: &[u8]) -> Result<LabeledCloud> {
    // Binary payloads are not valid UTF-8 in general, so only the header is
    // decoded up front.
    let header_end =
        find_header_end(bytes).ok_or_else(|| Error::Format("missing end_header line".into()))?;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| Error::Format("header is not valid UTF-8".into()))?;

    let mut lines = header.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(Error::Format("file does not start with 'ply'".into())),
    }

    let mut elements: Vec<Element> = Vec::new();
    let mut saw_format = false;
    let mut header_lines = 1;
    for (i, raw) in lines {
        header_lines = i + 1;
        let line = raw.trim();
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                let kind = tok.next().unwrap_or("");
                if kind != "ascii" {
                    return Err(Error::Unsupported(format!(
                        "PLY format {kind:?}; only ascii is supported"
                    )));
                }
                saw_format = true;
            }
            Some("comment") | Some("obj_info") | None => {}
            Some("element") => {
                let name = tok
                    .next()
                    .ok_or_else(|| Error::parse(i + 1, "element without name"))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| Error::parse(i + 1, "element without a valid count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(i + 1, "property before any element"))?;
                let ty = tok
                    .next()
                    .ok_or_else(|| Error::parse(i + 1, "property without type"))?;
                if ty == "list" {
                    el.properties.push(None);
                } else {
                    let name = tok
                        .next()
                        .ok_or_else(|| Error::parse(i + 1, "property without name"))?;
                    el.properties.push(Some(name.to_string()));
                }
            }
            Some("end_header") => break,
            Some(other) => {
                return Err(Error::parse(
                    i + 1,
                    format!("unknown header keyword {other:?}"),
                ))
            }
        }
    }
    if !saw_format {
        return Err(Error::Format("missing format line".into()));
    }

    let body = std::str::from_utf8(&bytes[header_end..])
        .map_err(|_| Error::Format("body is not valid UTF-8".into()))?;
    let mut rows = body
        .lines()
        .enumerate()
        .map(|(i, l)| (header_lines + 1 + i, l))
        .filter(|(_, l)| !l.trim().is_empty());

    let mut cloud = None;
    for el in &elements {
        if el.name != "vertex" {
            // Elements before the vertex block are skipped row by row.
            if cloud.is_none() {
                for _ in 0..el.count {
                    rows.next()
                        .ok_or_else(|| Error::Format(format!("truncated {} element", el.name)))?;
                }
            }
            continue;
        }
        cloud = Some(read_vertices(el, &mut rows)?);
        break;
    }
    cloud.ok_or_else(|| Error::Format("no vertex element".into()))
}

fn read_vertices<'a>(
    el: &Element,
    rows: &mut impl Iterator<Item = (usize, &'a str)>,
) -> Result<LabeledCloud> {
    if el.properties.iter().any(Option::is_none) {
        return Err(Error::Format(
            "list properties on vertex are not supported".into(),
        ));
    }
    let column = |name: &str| {
        el.properties
            .iter()
            .position(|p| p.as_deref() == Some(name))
    };
    let (cx, cy, cz) = match (column("x"), column("y"), column("z")) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Err(Error::Format("vertex element lacks x, y or z".into())),
    };
    let label_col = column("label");

    let mut points = Vec::with_capacity(el.count);
    let mut labels = Vec::new();
    for n in 0..el.count {
        let (lineno, line) = rows.next().ok_or_else(|| {
            Error::Format(format!(
                "truncated vertex data: header declares {} vertices, found {n}",
                el.count
            ))
        })?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != el.properties.len() {
            return Err(Error::parse(
                lineno,
                format!(
                    "expected {} values, found {}",
                    el.properties.len(),
                    fields.len()
                ),
            ));
        }
        let num = |c: usize| -> Result<f64> {
            let v: f64 = fields[c]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("non-numeric value {:?}", fields[c])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::parse(lineno, "non-finite coordinate"))
            }
        };
        points.push(Point3::new(num(cx)?, num(cy)?, num(cz)?));
        if let Some(lc) = label_col {
            let l = fields[lc]
                .parse::<u8>()
                .ok()
                .and_then(NoiseLabel::from_code)
                .ok_or_else(|| Error::parse(lineno, format!("invalid label {:?}", fields[lc])))?;
            labels.push(l);
        }
    }
    let mut cloud = LabeledCloud::new(points);
    if label_col.is_some() {
        cloud.set_truth(labels)?;
    }
    Ok(cloud)
}

fn find_header_end(bytes: &[u8]) -> Option<usize> {
    let needle = b"end_header";
    let mut start = 0;
    while let Some(pos) = bytes[start..]
        .windows(needle.len())
        .position(|w| w == needle)
    {
        let at = start + pos;
        let line_start = at == 0 || bytes[at - 1] == b'\n';
        if line_start {
            let rest = &bytes[at + needle.len()..];
            let eol = rest
                .iter()
                .position(|&b| b == b'\n')
                .map_or(rest.len(), |p| p + 1);
            return Some(at + needle.len() + eol);
        }
        start = at + 1;
    }
    None
}

/// Writes an ASCII PLY file. Truth labels, when present, go into a `uchar label`
/// property. Coordinates are written with round-trip precision.
pub fn save_ply(cloud: &LabeledCloud, path: &Path) -> Result<()> {
    let truth = cloud.truth();
    let mut out = String::with_capacity(128 + cloud.len() * 48);
    out.push_str("ply\nformat ascii 1.0\n");
    out.push_str(&format!("element vertex {}\n", cloud.len()));
    out.push_str("property float x\nproperty float y\nproperty float z\n");
    if truth.is_some() {
        out.push_str("property uchar label\n");
    }
    out.push_str("end_header\n");
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

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n1.5 -2 3e1\n";

    #[test]
    fn minimal_vertex() {
        let c = parse_ply(MINIMAL.as_bytes()).unwrap();
        assert_eq!(c.points(), &[Point3::new(1.5, -2.0, 30.0)]);
        assert!(c.truth().is_none());
    }

    #[test]
    fn label_property_populates_truth() {
        let text = "ply\nformat ascii 1.0\ncomment synthetic\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nproperty uchar label\nend_header\n0 0 0 0\n1 1 1 2\n";
        let c = parse_ply(text.as_bytes()).unwrap();
        assert_eq!(
            c.truth().unwrap(),
            &[NoiseLabel::Signal, NoiseLabel::ClusteredNoise]
        );
    }

    #[test]
    fn extra_properties_and_elements_are_tolerated() {
        let text = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float intensity\nproperty double z\nproperty double y\nproperty double x\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n9 3 2 1\n9 6 5 4\n3 0 1 1\n";
        let c = parse_ply(text.as_bytes()).unwrap();
        assert_eq!(
            c.points(),
            &[Point3::new(1.0, 2.0, 3.0), Point3::new(4.0, 5.0, 6.0)]
        );
    }

    #[test]
    fn truncated_vertex_block() {
        let text = "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n1 1 1\n";
        let err = parse_ply(text.as_bytes()).unwrap_err();
        assert!(
            matches!(err, Error::Format(ref m) if m.contains("truncated")),
            "{err}"
        );
    }

    #[test]
    fn binary_is_unsupported() {
        let mut bytes = b"ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n".to_vec();
        bytes.extend_from_slice(&[0xff, 0x00, 0x80, 0x3f, 0, 0, 0, 0, 0, 0, 0, 0]);
        assert!(matches!(parse_ply(&bytes), Err(Error::Unsupported(_))));
    }

    #[test]
    fn missing_coordinate_property() {
        let text = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nend_header\n0 0\n";
        assert!(matches!(parse_ply(text.as_bytes()), Err(Error::Format(_))));
    }

    #[test]
    fn file_round_trip_with_labels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ply");
        let cloud = LabeledCloud::with_truth(
            vec![
                Point3::new(0.1, 0.2, 0.30000000000000004),
                Point3::new(-5e-7, 1e20, 3.0),
            ],
            vec![NoiseLabel::Signal, NoiseLabel::NearSignalNoise],
        )
        .unwrap();
        save_ply(&cloud, &path).unwrap();
        let back = load_ply(&path).unwrap();
        assert_eq!(back.points(), cloud.points());
        assert_eq!(back.truth(), cloud.truth());
    }

    #[test]
    fn empty_cloud_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.ply");
        save_ply(&LabeledCloud::default(), &path).unwrap();
        assert!(load_ply(&path).unwrap().is_empty());
    }
}
