//! ASCII PLY and PCD point-cloud readers and writers.
//!
//! Only the ASCII encodings are supported; binary variants are rejected up
//! front. Colour/normal fields are skipped. PCD carries the sensor pose in
//! its `VIEWPOINT` header; for PLY this tool writes (and recognises) a
//! `comment viewpoint x y z` line, since the format has no standard slot.

use std::path::Path;

use nalgebra::Point3;
use surfplan_core::surface::{IngestOptions, PointCloud, SurfaceError};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    PlyAscii,
    PcdAscii,
}

impl CloudFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<CloudFormat> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("ply") => Some(CloudFormat::PlyAscii),
            Some("pcd") => Some(CloudFormat::PcdAscii),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum CloudIoError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unsupported: {message}")]
    Unsupported { line: usize, message: String },
    #[error("cloud rejected: {0}")]
    Surface(#[from] SurfaceError),
}

#[derive(Debug, Clone, Default)]
pub struct ReadOptions {
    /// Overrides the file's viewpoint (PLY files usually have none).
    pub viewpoint: Option<Point3<f64>>,
    pub ingest: IngestOptions,
}

fn err(line: usize, message: impl Into<String>) -> CloudIoError {
    CloudIoError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_num(line: usize, s: &str) -> Result<f64, CloudIoError> {
    let v: f64 = s
        .parse()
        .map_err(|_| err(line, format!("`{s}` is not a number")))?;
    Ok(v)
}

/// Reads a cloud file, applying the workspace filter and duplicate merge.
pub fn read_cloud(
    path: &Path,
    format: CloudFormat,
    options: &ReadOptions,
) -> Result<PointCloud, CloudIoError> {
    let text = std::fs::read_to_string(path)?;
    parse_cloud(&text, format, options)
}

pub fn parse_cloud(
    text: &str,
    format: CloudFormat,
    options: &ReadOptions,
) -> Result<PointCloud, CloudIoError> {
    let (points, file_viewpoint) = match format {
        CloudFormat::PlyAscii => parse_ply(text)?,
        CloudFormat::PcdAscii => parse_pcd(text)?,
    };
    let viewpoint = options
        .viewpoint
        .or(file_viewpoint)
        .unwrap_or_else(Point3::origin);
    Ok(PointCloud::build(points, viewpoint, &options.ingest)?)
}

// ---------------------------------------------------------------------------
// PLY
// ---------------------------------------------------------------------------

type ParsedPoints = (Vec<Point3<f64>>, Option<Point3<f64>>);

fn parse_ply(text: &str) -> Result<ParsedPoints, CloudIoError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (line, magic) = lines.next().ok_or_else(|| err(0, "empty file"))?;
    if magic.trim() != "ply" {
        return Err(err(line, "missing `ply` magic"));
    }

    // Elements in declaration order with their row counts; per-vertex
    // property slots for x, y, z.
    let mut elements: Vec<(String, usize)> = Vec::new();
    let mut vertex_props: Vec<String> = Vec::new();
    let mut viewpoint = None;
    let mut header_done_at = 0;
    for (line, raw) in lines.by_ref() {
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        let fields: Vec<&str> = l.split_whitespace().collect();
        match fields[0] {
            "format" => {
                if fields.get(1) != Some(&"ascii") {
                    return Err(CloudIoError::Unsupported {
                        line,
                        message: format!("encoding `{}` (only ascii)", fields.get(1).unwrap_or(&"?")),
                    });
                }
            }
            "comment" | "obj_info" => {
                // Our own writer stores the sensor position here.
                if fields.get(1) == Some(&"viewpoint") && fields.len() == 5 {
                    viewpoint = Some(Point3::new(
                        parse_num(line, fields[2])?,
                        parse_num(line, fields[3])?,
                        parse_num(line, fields[4])?,
                    ));
                }
            }
            "element" => {
                if fields.len() != 3 {
                    return Err(err(line, "element needs a name and a count"));
                }
                let count: usize = fields[2]
                    .parse()
                    .map_err(|_| err(line, format!("bad element count `{}`", fields[2])))?;
                elements.push((fields[1].to_string(), count));
            }
            "property" => {
                if let Some((name, _)) = elements.last() {
                    if name == "vertex" {
                        if fields[1] == "list" {
                            return Err(CloudIoError::Unsupported {
                                line,
                                message: "list property on vertex element".into(),
                            });
                        }
                        vertex_props.push(fields[fields.len() - 1].to_string());
                    }
                }
            }
            "end_header" => {
                header_done_at = line;
                break;
            }
            other => {
                return Err(err(line, format!("unknown header keyword `{other}`")));
            }
        }
    }
    if header_done_at == 0 {
        return Err(err(0, "header never ends (`end_header` missing)"));
    }
    let vertex_count = elements
        .iter()
        .find(|(n, _)| n == "vertex")
        .map(|&(_, c)| c)
        .ok_or_else(|| err(header_done_at, "no vertex element declared"))?;
    let slot = |name: &str| -> Result<usize, CloudIoError> {
        vertex_props
            .iter()
            .position(|p| p == name)
            .ok_or_else(|| err(header_done_at, format!("vertex element lacks `{name}`")))
    };
    let (sx, sy, sz) = (slot("x")?, slot("y")?, slot("z")?);

    let mut points = Vec::with_capacity(vertex_count);
    let mut rows = lines.filter(|(_, l)| !l.trim().is_empty());
    for (elem_name, count) in &elements {
        for _ in 0..*count {
            let (line, row) = rows
                .next()
                .ok_or_else(|| err(header_done_at, format!("file ends inside `{elem_name}` rows")))?;
            if elem_name != "vertex" {
                continue;
            }
            let fields: Vec<&str> = row.split_whitespace().collect();
            if fields.len() != vertex_props.len() {
                return Err(err(
                    line,
                    format!(
                        "vertex row has {} fields, header declares {}",
                        fields.len(),
                        vertex_props.len()
                    ),
                ));
            }
            points.push(Point3::new(
                parse_num(line, fields[sx])?,
                parse_num(line, fields[sy])?,
                parse_num(line, fields[sz])?,
            ));
        }
    }
    Ok((points, viewpoint))
}

/// Canonical ASCII PLY with the viewpoint stored as a comment.
pub fn write_ply(cloud: &PointCloud) -> String {
    let vp = cloud.viewpoint();
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    out.push_str(&format!("comment viewpoint {} {} {}\n", vp.x, vp.y, vp.z));
    out.push_str(&format!("element vertex {}\n", cloud.len()));
    out.push_str("property double x\nproperty double y\nproperty double z\nend_header\n");
    for p in cloud.points() {
        out.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
    }
    out
}

// ---------------------------------------------------------------------------
// PCD
// ---------------------------------------------------------------------------

fn parse_pcd(text: &str) -> Result<ParsedPoints, CloudIoError> {
    let mut fields: Vec<String> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    let mut declared: Option<usize> = None;
    let mut viewpoint = None;
    let mut data_at = None;

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    for (line, raw) in lines.by_ref() {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = l.split_whitespace().collect();
        match tok[0] {
            "VERSION" => {}
            "FIELDS" => fields = tok[1..].iter().map(|s| s.to_string()).collect(),
            "SIZE" | "TYPE" => {}
            "COUNT" => {
                counts = tok[1..]
                    .iter()
                    .map(|s| s.parse().map_err(|_| err(line, format!("bad COUNT `{s}`"))))
                    .collect::<Result<_, _>>()?;
            }
            "WIDTH" | "HEIGHT" => {}
            "VIEWPOINT" => {
                if tok.len() != 8 {
                    return Err(err(line, "VIEWPOINT needs tx ty tz qw qx qy qz"));
                }
                viewpoint = Some(Point3::new(
                    parse_num(line, tok[1])?,
                    parse_num(line, tok[2])?,
                    parse_num(line, tok[3])?,
                ));
            }
            "POINTS" => {
                declared = Some(
                    tok.get(1)
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err(line, "bad POINTS count"))?,
                );
            }
            "DATA" => {
                if tok.get(1) != Some(&"ascii") {
                    return Err(CloudIoError::Unsupported {
                        line,
                        message: format!("DATA `{}` (only ascii)", tok.get(1).unwrap_or(&"?")),
                    });
                }
                data_at = Some(line);
                break;
            }
            other => return Err(err(line, format!("unknown header keyword `{other}`"))),
        }
    }
    let data_at = data_at.ok_or_else(|| err(0, "no DATA section"))?;
    let declared = declared.ok_or_else(|| err(data_at, "no POINTS declaration"))?;
    if fields.is_empty() {
        return Err(err(data_at, "no FIELDS declaration"));
    }
    if counts.is_empty() {
        counts = vec![1; fields.len()];
    }
    if counts.len() != fields.len() {
        return Err(err(data_at, "COUNT arity differs from FIELDS"));
    }
    // Column offset of a scalar field.
    let column = |name: &str| -> Result<usize, CloudIoError> {
        let idx = fields
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| err(data_at, format!("FIELDS lacks `{name}`")))?;
        Ok(counts[..idx].iter().sum())
    };
    let (cx, cy, cz) = (column("x")?, column("y")?, column("z")?);
    let row_width: usize = counts.iter().sum();

    let mut points = Vec::with_capacity(declared);
    let mut produced = 0;
    for (line, raw) in lines {
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let tok: Vec<&str> = l.split_whitespace().collect();
        if tok.len() != row_width {
            return Err(err(
                line,
                format!("row has {} fields, header declares {row_width}", tok.len()),
            ));
        }
        if produced == declared {
            return Err(err(line, format!("more rows than the declared {declared} points")));
        }
        points.push(Point3::new(
            parse_num(line, tok[cx])?,
            parse_num(line, tok[cy])?,
            parse_num(line, tok[cz])?,
        ));
        produced += 1;
    }
    if produced != declared {
        return Err(err(
            data_at,
            format!("POINTS declares {declared} points, file contains {produced}"),
        ));
    }
    Ok((points, viewpoint))
}

/// Canonical ASCII PCD; the viewpoint rides in the standard header slot.
pub fn write_pcd(cloud: &PointCloud) -> String {
    let vp = cloud.viewpoint();
    let n = cloud.len();
    let mut out = String::new();
    out.push_str("# .PCD v0.7 - Point Cloud Data file format\n");
    out.push_str("VERSION 0.7\nFIELDS x y z\nSIZE 8 8 8\nTYPE F F F\nCOUNT 1 1 1\n");
    out.push_str(&format!("WIDTH {n}\nHEIGHT 1\n"));
    out.push_str(&format!("VIEWPOINT {} {} {} 1 0 0 0\n", vp.x, vp.y, vp.z));
    out.push_str(&format!("POINTS {n}\nDATA ascii\n"));
    for p in cloud.points() {
        out.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use surfplan_core::surface::WorkspaceBox;

    const MINI_PLY: &str = "ply\nformat ascii 1.0\nelement vertex 3\n\
        property float x\nproperty float y\nproperty float z\nend_header\n\
        0 0 0\n1 0 0\n0 1 0\n";

    #[test]
    fn minimal_ply_parses() {
        let cloud = parse_cloud(MINI_PLY, CloudFormat::PlyAscii, &ReadOptions::default()).unwrap();
        assert_eq!(cloud.len(), 3);
        assert_eq!(cloud.viewpoint(), Point3::origin());
    }

    #[test]
    fn ply_with_extra_fields_and_comment_viewpoint() {
        let text = "ply\nformat ascii 1.0\ncomment viewpoint 0 0 2\n\
            element vertex 2\nproperty float x\nproperty float y\nproperty float z\n\
            property uchar red\nend_header\n0 0 0 255\n1 1 0 12\n";
        let cloud = parse_cloud(text, CloudFormat::PlyAscii, &ReadOptions::default());
        // Two points only -> too few after ingestion.
        assert!(matches!(
            cloud,
            Err(CloudIoError::Surface(SurfaceError::TooFewPoints { count: 2 }))
        ));
        let (points, vp) = parse_ply(text).unwrap();
        assert_eq!(points.len(), 2);
        assert_eq!(vp, Some(Point3::new(0.0, 0.0, 2.0)));
    }

    #[test]
    fn binary_ply_is_unsupported() {
        let text = "ply\nformat binary_little_endian 1.0\nend_header\n";
        match parse_ply(text) {
            Err(CloudIoError::Unsupported { line: 2, .. }) => {}
            other => panic!("expected unsupported, got {other:?}"),
        }
    }

    #[test]
    fn ply_unknown_keyword_carries_line() {
        let text = "ply\nformat ascii 1.0\nelement vertex 1\nwhatever\nend_header\n0 0 0\n";
        match parse_ply(text) {
            Err(CloudIoError::Parse { line: 4, .. }) => {}
            other => panic!("expected parse error line 4, got {other:?}"),
        }
    }

    #[test]
    fn ply_row_field_mismatch() {
        let text = "ply\nformat ascii 1.0\nelement vertex 1\n\
            property float x\nproperty float y\nproperty float z\nend_header\n0 0\n";
        match parse_ply(text) {
            Err(CloudIoError::Parse { line: 8, message }) => assert!(message.contains("fields")),
            other => panic!("expected parse error line 8, got {other:?}"),
        }
    }

    const MINI_PCD: &str = "# .PCD v0.7\nVERSION 0.7\nFIELDS x y z\nSIZE 4 4 4\n\
        TYPE F F F\nCOUNT 1 1 1\nWIDTH 4\nHEIGHT 1\nVIEWPOINT 0 0 3 1 0 0 0\n\
        POINTS 4\nDATA ascii\n0 0 0\n0.1 0 0\n0 0.1 0\n0.1 0.1 0\n";

    #[test]
    fn minimal_pcd_parses_with_viewpoint() {
        let cloud = parse_cloud(MINI_PCD, CloudFormat::PcdAscii, &ReadOptions::default()).unwrap();
        assert_eq!(cloud.len(), 4);
        assert_eq!(cloud.viewpoint(), Point3::new(0.0, 0.0, 3.0));
    }

    #[test]
    fn pcd_count_mismatch_is_error() {
        let text = MINI_PCD.replace("POINTS 4", "POINTS 5").replace("WIDTH 4", "WIDTH 5");
        match parse_pcd(&text) {
            Err(CloudIoError::Parse { message, .. }) => {
                assert!(message.contains("declares 5"), "{message}");
            }
            other => panic!("expected count mismatch, got {other:?}"),
        }
    }

    #[test]
    fn pcd_binary_is_unsupported() {
        let text = MINI_PCD.replace("DATA ascii", "DATA binary");
        assert!(matches!(
            parse_pcd(&text),
            Err(CloudIoError::Unsupported { .. })
        ));
    }

    #[test]
    fn workspace_box_filter_count_matches_oracle() {
        // 10x10 grid, box covering x,y in [0.15, 0.75]: 6x6 grid points
        // inside (bounds off the grid so float rounding cannot flip them).
        let mut text = String::from(
            "ply\nformat ascii 1.0\nelement vertex 100\n\
             property float x\nproperty float y\nproperty float z\nend_header\n",
        );
        for i in 0..10 {
            for j in 0..10 {
                text.push_str(&format!("{} {} 0\n", i as f64 * 0.1, j as f64 * 0.1));
            }
        }
        let options = ReadOptions {
            viewpoint: Some(Point3::new(0.0, 0.0, 1.0)),
            ingest: IngestOptions {
                workspace_box: Some(WorkspaceBox {
                    min: [0.15, 0.15, -0.1],
                    max: [0.75, 0.75, 0.1],
                }),
                ..Default::default()
            },
        };
        let cloud = parse_cloud(&text, CloudFormat::PlyAscii, &options).unwrap();
        assert_eq!(cloud.len(), 36);
    }

    #[test]
    fn ply_round_trip_preserves_points_and_viewpoint() {
        let cloud = parse_cloud(MINI_PLY, CloudFormat::PlyAscii, &ReadOptions {
            viewpoint: Some(Point3::new(0.25, -1.5, 3.125)),
            ..Default::default()
        })
        .unwrap();
        for writer in [write_ply as fn(&PointCloud) -> String, write_pcd] {
            let text = writer(&cloud);
            let format = if text.starts_with("ply") {
                CloudFormat::PlyAscii
            } else {
                CloudFormat::PcdAscii
            };
            let reparsed = parse_cloud(&text, format, &ReadOptions::default()).unwrap();
            assert_eq!(reparsed.len(), cloud.len());
            assert_eq!(reparsed.viewpoint(), cloud.viewpoint());
            for (a, b) in cloud.points().iter().zip(reparsed.points()) {
                assert_eq!(a, b);
            }
        }
    }
}
