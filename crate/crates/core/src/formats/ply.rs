use std::path::Path;

use nalgebra::Vector3;

use super::{read_bytes, write_bytes, FormatError};
use crate::model::{Frame, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes([b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7]]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    X,
    Y,
    Z,
    Intensity,
    Other,
}

fn header_error(line: usize, reason: impl Into<String>) -> FormatError {
    FormatError::MalformedHeader {
        offset: line,
        reason: reason.into(),
    }
}

fn body_error(location: impl Into<String>, reason: impl Into<String>) -> FormatError {
    FormatError::MalformedBody {
        location: location.into(),
        reason: reason.into(),
    }
}

/// Decodes a PLY point cloud (`ascii 1.0` or `binary_little_endian 1.0`).
/// The vertex element must come first; later elements are ignored. The
/// coordinate frame is taken from a `comment frame <camera|world>` line and
/// defaults to camera.
pub fn parse_ply(bytes: &[u8]) -> Result<PointCloud, FormatError> {
    let mut pos = 0;
    let mut lines = Vec::new();
    loop {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| pos + i)
            .ok_or_else(|| header_error(pos, "missing end_header"))?;
        let line = std::str::from_utf8(&bytes[pos..end])
            .map_err(|_| header_error(pos, "non-UTF-8 header"))?
            .trim_end_matches('\r');
        lines.push((pos, line));
        pos = end + 1;
        if line == "end_header" {
            break;
        }
    }
    let body = &bytes[pos..];

    let mut iter = lines.into_iter();
    match iter.next() {
        Some((_, "ply")) => {}
        _ => return Err(header_error(0, "missing ply magic")),
    }
    let mut encoding = None;
    let mut frame = Frame::Camera;
    let mut vertex_count = None;
    let mut in_vertex = false;
    let mut seen_element = false;
    let mut props: Vec<(Role, Scalar)> = Vec::new();
    for (offset, line) in iter {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["format", "ascii", "1.0"] => encoding = Some(PlyEncoding::Ascii),
            ["format", "binary_little_endian", "1.0"] => encoding = Some(PlyEncoding::BinaryLittleEndian),
            ["format", other, ..] => return Err(header_error(offset, format!("unsupported format {other}"))),
            ["comment", "frame", name] => {
                frame = match *name {
                    "camera" => Frame::Camera,
                    "world" => Frame::World,
                    _ => return Err(header_error(offset, format!("unknown frame {name}"))),
                }
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", name, count] => {
                if !seen_element {
                    if *name != "vertex" {
                        return Err(header_error(offset, "vertex must be the first element"));
                    }
                    vertex_count = Some(
                        count
                            .parse::<usize>()
                            .map_err(|_| header_error(offset, format!("bad vertex count {count}")))?,
                    );
                    in_vertex = true;
                } else {
                    in_vertex = false;
                }
                seen_element = true;
            }
            ["property", "list", ..] if in_vertex => {
                return Err(header_error(offset, "list properties on vertices are not supported"))
            }
            ["property", ty, name] if in_vertex => {
                let scalar = Scalar::parse(ty).ok_or_else(|| header_error(offset, format!("unknown type {ty}")))?;
                let role = match *name {
                    "x" => Role::X,
                    "y" => Role::Y,
                    "z" => Role::Z,
                    "intensity" => Role::Intensity,
                    _ => Role::Other,
                };
                props.push((role, scalar));
            }
            ["property", ..] => {}
            ["end_header"] => {}
            _ => return Err(header_error(offset, format!("unrecognized line {line:?}"))),
        }
    }
    let encoding = encoding.ok_or_else(|| header_error(0, "missing format line"))?;
    let count = vertex_count.ok_or_else(|| header_error(0, "missing vertex element"))?;
    for role in [Role::X, Role::Y, Role::Z] {
        if !props.iter().any(|(r, _)| *r == role) {
            return Err(header_error(0, format!("missing vertex property {role:?}")));
        }
    }
    let has_intensity = props.iter().any(|(r, _)| *r == Role::Intensity);

    let mut points = Vec::with_capacity(count);
    let mut intensity = Vec::new();
    let mut record = vec![0.0; props.len()];
    let mut push = |record: &[f64]| {
        let mut p = Vector3::zeros();
        for ((role, _), &value) in props.iter().zip(record) {
            match role {
                Role::X => p.x = value,
                Role::Y => p.y = value,
                Role::Z => p.z = value,
                Role::Intensity => intensity.push(value),
                Role::Other => {}
            }
        }
        points.push(p);
    };
    match encoding {
        PlyEncoding::Ascii => {
            let text = std::str::from_utf8(body).map_err(|_| body_error("body", "non-UTF-8"))?;
            let mut rows = text.lines().filter(|l| !l.trim().is_empty());
            for i in 0..count {
                let row = rows
                    .next()
                    .ok_or_else(|| body_error(format!("vertex {i}"), "missing row"))?;
                let mut fields = row.split_whitespace();
                for slot in record.iter_mut() {
                    let field = fields
                        .next()
                        .ok_or_else(|| body_error(format!("vertex {i}"), "too few fields"))?;
                    *slot = field
                        .parse()
                        .map_err(|_| body_error(format!("vertex {i}"), format!("bad number {field:?}")))?;
                }
                push(&record);
            }
        }
        PlyEncoding::BinaryLittleEndian => {
            let stride: usize = props.iter().map(|(_, s)| s.size()).sum();
            let expected = stride
                .checked_mul(count)
                .ok_or(FormatError::DimensionOverflow { offset: pos })?;
            if body.len() < expected {
                return Err(FormatError::TruncatedPayload {
                    offset: pos + body.len(),
                    expected,
                    found: body.len(),
                });
            }
            for chunk in body[..expected].chunks_exact(stride) {
                let mut at = 0;
                for (slot, (_, scalar)) in record.iter_mut().zip(&props) {
                    *slot = scalar.read_le(&chunk[at..]);
                    at += scalar.size();
                }
                push(&record);
            }
        }
    }
    if !has_intensity {
        intensity.clear();
    }
    Ok(PointCloud::new(points, intensity, frame)?)
}

/// Canonical encoding: `double` coordinates (and intensity), frame comment.
pub fn encode_ply(cloud: &PointCloud, encoding: PlyEncoding) -> Vec<u8> {
    let has_intensity = !cloud.intensity().is_empty();
    let mut header = String::from("ply\n");
    header.push_str(match encoding {
        PlyEncoding::Ascii => "format ascii 1.0\n",
        PlyEncoding::BinaryLittleEndian => "format binary_little_endian 1.0\n",
    });
    header.push_str(&format!("comment frame {}\n", cloud.frame()));
    header.push_str(&format!("element vertex {}\n", cloud.len()));
    header.push_str("property double x\nproperty double y\nproperty double z\n");
    if has_intensity {
        header.push_str("property double intensity\n");
    }
    header.push_str("end_header\n");
    let mut out = header.into_bytes();
    for (i, p) in cloud.points().iter().enumerate() {
        let values = [p.x, p.y, p.z];
        let extra = has_intensity.then(|| cloud.intensity()[i]);
        match encoding {
            PlyEncoding::Ascii => {
                let mut row = format!("{} {} {}", values[0], values[1], values[2]);
                if let Some(w) = extra {
                    row.push_str(&format!(" {w}"));
                }
                row.push('\n');
                out.extend_from_slice(row.as_bytes());
            }
            PlyEncoding::BinaryLittleEndian => {
                for x in values.into_iter().chain(extra) {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
    }
    out
}

pub fn read_ply(path: &Path) -> Result<PointCloud, FormatError> {
    parse_ply(&read_bytes(path)?)
}

pub fn write_ply(cloud: &PointCloud, encoding: PlyEncoding, path: &Path) -> Result<(), FormatError> {
    write_bytes(path, &encode_ply(cloud, encoding))
}
