//! PLY checkpoint import through an explicit property-name mapping.
//!
//! There are no built-in name guesses: the caller supplies a plain-text
//! mapping with one `field = ply_property` pair per line (and `#` comments).
//! Recognized fields are `mean_{x,y,z,t}`, `scale_{x,y,z,t}`,
//! `q_l_{w,x,y,z}`, `q_r_{w,x,y,z}`, `opacity` and `sh_<band>_<r|g|b>`; the
//! SH degree follows from the number of fully mapped bands (1, 4, 9 or 16
//! of them). Values are taken verbatim — no activation or log/exp transforms
//! are applied — and the usual model invariants are enforced on every record.

use std::collections::BTreeMap;
use std::path::Path;

use g4d_core::gaussian::{Gaussian4D, Scene4D};
use g4d_core::nalgebra::Vector4;
use g4d_core::Quat;

use super::read_file;
use crate::error::ToolsError;
use crate::Result;

const BASE_FIELDS: [&str; 17] = [
    "mean_x", "mean_y", "mean_z", "mean_t", "scale_x", "scale_y", "scale_z", "scale_t", "q_l_w",
    "q_l_x", "q_l_y", "q_l_z", "q_r_w", "q_r_x", "q_r_y", "q_r_z", "opacity",
];

/// Parsed `field = ply_property` mapping.
#[derive(Debug, Clone)]
pub struct PlyMapping {
    fields: BTreeMap<String, String>,
    pub sh_bands: usize,
}

impl PlyMapping {
    pub fn parse(text: &str) -> Result<Self> {
        let mut fields = BTreeMap::new();
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((field, prop)) = line.split_once('=') else {
                return Err(ToolsError::Config(format!(
                    "mapping line {} is not a `field = ply_property` pair: {raw:?}",
                    line_no + 1
                )));
            };
            let field = field.trim().to_string();
            let prop = prop.trim().to_string();
            if prop.is_empty() {
                return Err(ToolsError::Config(format!("empty property for field {field}")));
            }
            if !is_known_field(&field) {
                return Err(ToolsError::Config(format!("unknown mapping field {field}")));
            }
            if fields.insert(field.clone(), prop).is_some() {
                return Err(ToolsError::Config(format!("duplicate mapping field {field}")));
            }
        }
        for required in BASE_FIELDS {
            if !fields.contains_key(required) {
                return Err(ToolsError::Config(format!("mapping is missing field {required}")));
            }
        }
        // SH bands must be complete and count to a legal degree.
        let mut bands = 0;
        loop {
            let keys =
                ["r", "g", "b"].map(|c| fields.contains_key(&format!("sh_{bands}_{c}")));
            match keys {
                [true, true, true] => bands += 1,
                [false, false, false] => break,
                _ => {
                    return Err(ToolsError::Config(format!(
                        "sh band {bands} is only partially mapped"
                    )))
                }
            }
        }
        let legal = [1, 4, 9, 16];
        if !legal.contains(&bands) {
            return Err(ToolsError::Config(format!(
                "{bands} sh bands mapped; expected 1, 4, 9 or 16"
            )));
        }
        let max_band_keys = fields.keys().filter(|k| k.starts_with("sh_")).count();
        if max_band_keys != bands * 3 {
            return Err(ToolsError::Config("sh bands must be contiguous from 0".into()));
        }
        Ok(PlyMapping { fields, sh_bands: bands })
    }

    fn property(&self, field: &str) -> &str {
        &self.fields[field]
    }
}

fn is_known_field(field: &str) -> bool {
    if BASE_FIELDS.contains(&field) {
        return true;
    }
    let Some(rest) = field.strip_prefix("sh_") else { return false };
    let Some((band, channel)) = rest.rsplit_once('_') else { return false };
    band.parse::<usize>().map(|b| b < 16).unwrap_or(false)
        && matches!(channel, "r" | "g" | "b")
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PlyType {
    Float,
    Double,
}

impl PlyType {
    fn size(self) -> usize {
        match self {
            PlyType::Float => 4,
            PlyType::Double => 8,
        }
    }
}

#[derive(Debug)]
struct PlyHeader {
    ascii: bool,
    vertex_count: usize,
    /// name -> (byte offset within a vertex record, type, column index)
    properties: Vec<(String, PlyType)>,
    body_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<PlyHeader> {
    let mut pos = 0usize;
    let mut lines = Vec::new();
    while pos < bytes.len() {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| pos + i)
            .ok_or_else(|| ToolsError::format(pos, "header has no end_header line"))?;
        let line = std::str::from_utf8(&bytes[pos..end])
            .map_err(|_| ToolsError::format(pos, "header is not valid utf-8"))?
            .trim_end_matches('\r')
            .to_string();
        pos = end + 1;
        let done = line.trim() == "end_header";
        lines.push(line);
        if done {
            break;
        }
    }
    let mut it = lines.iter();
    if it.next().map(|l| l.trim()) != Some("ply") {
        return Err(ToolsError::format(0, "missing ply magic line"));
    }
    let mut ascii = None;
    let mut vertex_count = None;
    let mut properties = Vec::new();
    let mut in_vertex = false;
    for line in it {
        let mut words = line.split_whitespace();
        match words.next() {
            Some("format") => match words.next() {
                Some("ascii") => ascii = Some(true),
                Some("binary_little_endian") => ascii = Some(false),
                other => {
                    return Err(ToolsError::format(
                        0,
                        format!("unsupported ply format {other:?}"),
                    ))
                }
            },
            Some("comment") | Some("obj_info") => {}
            Some("element") => {
                let name = words.next().unwrap_or("");
                if name == "vertex" {
                    let count = words
                        .next()
                        .and_then(|w| w.parse::<usize>().ok())
                        .ok_or_else(|| ToolsError::format(0, "bad vertex count"))?;
                    vertex_count = Some(count);
                    in_vertex = true;
                } else {
                    if vertex_count.is_none() {
                        return Err(ToolsError::format(
                            0,
                            format!("element {name} precedes vertex; unsupported layout"),
                        ));
                    }
                    in_vertex = false;
                }
            }
            Some("property") if in_vertex => {
                let ty = match words.next() {
                    Some("float") | Some("float32") => PlyType::Float,
                    Some("double") | Some("float64") => PlyType::Double,
                    other => {
                        return Err(ToolsError::format(
                            0,
                            format!("unsupported vertex property type {other:?}"),
                        ))
                    }
                };
                let name = words
                    .next()
                    .ok_or_else(|| ToolsError::format(0, "property without a name"))?;
                properties.push((name.to_string(), ty));
            }
            Some("property") => {}
            Some("end_header") => break,
            Some(other) => {
                return Err(ToolsError::format(0, format!("unexpected header token {other}")))
            }
            None => {}
        }
    }
    Ok(PlyHeader {
        ascii: ascii.ok_or_else(|| ToolsError::format(0, "header missing format line"))?,
        vertex_count: vertex_count
            .ok_or_else(|| ToolsError::format(0, "header missing vertex element"))?,
        properties,
        body_start: pos,
    })
}

/// Import a PLY checkpoint as a scene.
///
/// The time extent and frame count are not stored in checkpoints and must be
/// provided by the caller.
pub fn import_ply(
    bytes: &[u8],
    mapping: &PlyMapping,
    time_extent: (f64, f64),
    frame_count: usize,
) -> Result<Scene4D> {
    let header = parse_header(bytes)?;
    let sh_degree = match mapping.sh_bands {
        1 => 0,
        4 => 1,
        9 => 2,
        _ => 3,
    };

    // Resolve every mapped property to its column.
    let column_of = |prop: &str| -> Result<usize> {
        header
            .properties
            .iter()
            .position(|(name, _)| name == prop)
            .ok_or_else(|| ToolsError::Config(format!("ply file has no property {prop}")))
    };
    let mut field_columns: BTreeMap<&str, usize> = BTreeMap::new();
    for field in BASE_FIELDS {
        field_columns.insert(field, column_of(mapping.property(field))?);
    }
    let mut sh_columns = Vec::new();
    for band in 0..mapping.sh_bands {
        let mut triplet = [0usize; 3];
        for (slot, channel) in ["r", "g", "b"].iter().enumerate() {
            let field = format!("sh_{band}_{channel}");
            triplet[slot] = column_of(mapping.property(&field))?;
        }
        sh_columns.push(triplet);
    }

    // Pull all vertex rows into a column-indexed table.
    let rows = read_rows(bytes, &header)?;

    let mut gaussians = Vec::with_capacity(header.vertex_count);
    for (i, row) in rows.iter().enumerate() {
        let f = |field: &str| row[field_columns[field]];
        let mut sh = Vec::with_capacity(mapping.sh_bands);
        for cols in &sh_columns {
            sh.push([row[cols[0]], row[cols[1]], row[cols[2]]]);
        }
        let g = Gaussian4D::new(
            Vector4::new(f("mean_x"), f("mean_y"), f("mean_z"), f("mean_t")),
            Vector4::new(f("scale_x"), f("scale_y"), f("scale_z"), f("scale_t")),
            Quat::new(f("q_l_w"), f("q_l_x"), f("q_l_y"), f("q_l_z")),
            Quat::new(f("q_r_w"), f("q_r_x"), f("q_r_y"), f("q_r_z")),
            f("opacity"),
            sh,
        )
        .map_err(|e| ToolsError::Config(format!("vertex {i} violates model invariants: {e}")))?;
        gaussians.push(g);
    }
    Scene4D::new(gaussians, sh_degree, time_extent, frame_count).map_err(ToolsError::from)
}

fn read_rows(bytes: &[u8], header: &PlyHeader) -> Result<Vec<Vec<f64>>> {
    let n_props = header.properties.len();
    let mut rows = Vec::with_capacity(header.vertex_count);
    if header.ascii {
        let body = std::str::from_utf8(&bytes[header.body_start..])
            .map_err(|_| ToolsError::format(header.body_start, "ascii body is not utf-8"))?;
        let mut lines = body.lines().filter(|l| !l.trim().is_empty());
        for i in 0..header.vertex_count {
            let line = lines.next().ok_or_else(|| {
                ToolsError::format(header.body_start, format!("vertex {i} missing"))
            })?;
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|w| w.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| {
                    ToolsError::format(header.body_start, format!("vertex {i}: non-numeric value"))
                })?;
            if values.len() != n_props {
                return Err(ToolsError::format(
                    header.body_start,
                    format!("vertex {i}: expected {n_props} values, got {}", values.len()),
                ));
            }
            rows.push(values);
        }
    } else {
        let stride: usize = header.properties.iter().map(|(_, t)| t.size()).sum();
        let mut pos = header.body_start;
        for i in 0..header.vertex_count {
            if bytes.len() < pos + stride {
                return Err(ToolsError::format(pos, format!("vertex {i} truncated")));
            }
            let mut row = Vec::with_capacity(n_props);
            let mut off = pos;
            for (_, ty) in &header.properties {
                let v = match ty {
                    PlyType::Float => f32::from_le_bytes(
                        bytes[off..off + 4].try_into().expect("bounds checked"),
                    ) as f64,
                    PlyType::Double => f64::from_le_bytes(
                        bytes[off..off + 8].try_into().expect("bounds checked"),
                    ),
                };
                off += ty.size();
                row.push(v);
            }
            pos += stride;
            rows.push(row);
        }
    }
    Ok(rows)
}

pub fn import_ply_file(
    ply_path: &Path,
    mapping_path: &Path,
    time_extent: (f64, f64),
    frame_count: usize,
) -> Result<Scene4D> {
    let mapping_text = std::fs::read_to_string(mapping_path)
        .map_err(|e| ToolsError::io(mapping_path, e))?;
    let mapping = PlyMapping::parse(&mapping_text)?;
    let bytes = read_file(ply_path)?;
    import_ply(&bytes, &mapping, time_extent, frame_count)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mapping_text() -> String {
        let mut text = String::new();
        text.push_str("# checkpoint layout\n");
        for (field, prop) in [
            ("mean_x", "x"),
            ("mean_y", "y"),
            ("mean_z", "z"),
            ("mean_t", "t"),
            ("scale_x", "sx"),
            ("scale_y", "sy"),
            ("scale_z", "sz"),
            ("scale_t", "st"),
            ("q_l_w", "rot_0"),
            ("q_l_x", "rot_1"),
            ("q_l_y", "rot_2"),
            ("q_l_z", "rot_3"),
            ("q_r_w", "rot_4"),
            ("q_r_x", "rot_5"),
            ("q_r_y", "rot_6"),
            ("q_r_z", "rot_7"),
            ("opacity", "alpha"),
            ("sh_0_r", "dc_0"),
            ("sh_0_g", "dc_1"),
            ("sh_0_b", "dc_2"),
        ] {
            text.push_str(&format!("{field} = {prop}\n"));
        }
        text
    }

    fn properties() -> Vec<&'static str> {
        vec![
            "x", "y", "z", "t", "sx", "sy", "sz", "st", "rot_0", "rot_1", "rot_2", "rot_3",
            "rot_4", "rot_5", "rot_6", "rot_7", "alpha", "dc_0", "dc_1", "dc_2",
        ]
    }

    fn vertex_values() -> Vec<f64> {
        vec![
            0.5, -1.0, 2.0, 0.25, // mean
            0.1, 0.2, 0.3, 0.4, // scales
            1.0, 0.0, 0.0, 0.0, // q_l
            1.0, 0.0, 0.0, 0.0, // q_r
            0.8, // opacity
            0.1, 0.2, 0.3, // dc
        ]
    }

    fn ascii_ply() -> Vec<u8> {
        let mut s = String::from("ply\nformat ascii 1.0\nelement vertex 2\n");
        for p in properties() {
            s.push_str(&format!("property float {p}\n"));
        }
        s.push_str("end_header\n");
        for _ in 0..2 {
            let row: Vec<String> = vertex_values().iter().map(|v| format!("{v}")).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s.into_bytes()
    }

    fn binary_ply() -> Vec<u8> {
        let mut s = String::from("ply\nformat binary_little_endian 1.0\nelement vertex 2\n");
        for p in properties() {
            s.push_str(&format!("property float {p}\n"));
        }
        s.push_str("end_header\n");
        let mut bytes = s.into_bytes();
        for _ in 0..2 {
            for v in vertex_values() {
                bytes.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        bytes
    }

    #[test]
    fn ascii_and_binary_imports_agree() {
        let mapping = PlyMapping::parse(&mapping_text()).unwrap();
        let a = import_ply(&ascii_ply(), &mapping, (0.0, 1.0), 10).unwrap();
        let b = import_ply(&binary_ply(), &mapping, (0.0, 1.0), 10).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a.sh_degree, 0);
        for (ga, gb) in a.gaussians.iter().zip(b.gaussians.iter()) {
            assert!((ga.mean - gb.mean).norm() < 1e-7);
            assert!((ga.opacity - gb.opacity).abs() < 1e-7);
        }
        assert!((a.gaussians[0].mean[0] - 0.5).abs() < 1e-12);
        assert_eq!(a.gaussians[0].sh[0], [0.1, 0.2, 0.3]);
    }

    #[test]
    fn mapping_validation_names_the_problem() {
        let err = PlyMapping::parse("mean_x = x").unwrap_err();
        assert!(err.to_string().contains("mean_y"), "{err}");
        let err = PlyMapping::parse("banana = x").unwrap_err();
        assert!(err.to_string().contains("banana"), "{err}");
        let mut text = mapping_text();
        text.push_str("sh_1_r = rest_0\n");
        let err = PlyMapping::parse(&text).unwrap_err();
        assert!(err.to_string().contains("partially mapped"), "{err}");
    }

    #[test]
    fn missing_property_and_bad_values_are_reported() {
        let mapping = {
            let text = mapping_text().replace("opacity = alpha", "opacity = missing_prop");
            PlyMapping::parse(&text).unwrap()
        };
        let err = import_ply(&ascii_ply(), &mapping, (0.0, 1.0), 10).unwrap_err();
        assert!(err.to_string().contains("missing_prop"), "{err}");

        // Non-unit rotor must be rejected, values are taken verbatim.
        let mapping = PlyMapping::parse(&mapping_text()).unwrap();
        let bad = String::from_utf8(ascii_ply()).unwrap().replace(
            "1 0 0 0 1 0 0 0",
            "2 0 0 0 1 0 0 0",
        );
        let err = import_ply(bad.as_bytes(), &mapping, (0.0, 1.0), 10).unwrap_err();
        assert!(err.to_string().contains("invariants"), "{err}");
    }

    #[test]
    fn truncated_binary_body_is_detected() {
        let bytes = binary_ply();
        let mapping = PlyMapping::parse(&mapping_text()).unwrap();
        let err = import_ply(&bytes[..bytes.len() - 2], &mapping, (0.0, 1.0), 10).unwrap_err();
        assert!(matches!(err, ToolsError::Format { .. }));
    }
}
