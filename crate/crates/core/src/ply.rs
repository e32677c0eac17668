//! Binary little-endian PLY checkpoints in the conventional 3DGS vertex layout:
//!
//! ```text
//! x y z nx ny nz f_dc_0..2 f_rest_0..44 opacity scale_0..2 rot_0..3
//! ```
//!
//! All 62 properties are `float`. Files with fewer `f_rest_*` properties
//! (SH degree 0, 1 or 2) are accepted and zero-padded; they are written back
//! with the same degree. Quaternions are normalized once at load; every other
//! value passes through unchanged, so `save(load(save(f)))` is byte-identical.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{normalize_quaternion, GaussianField, GaussianPrimitive, MAX_SH_DEGREE};

/// Float properties per vertex at SH degree 3.
pub const FLOATS_PER_PRIMITIVE: usize = 62;

/// Payload bytes per vertex at SH degree 3.
pub const BYTES_PER_PRIMITIVE: usize = FLOATS_PER_PRIMITIVE * 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn read(self, b: &[u8]) -> f32 {
        match self {
            Self::I8 => b[0] as i8 as f32,
            Self::U8 => b[0] as f32,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f32,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f32,
            Self::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f32,
            Self::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f32,
            Self::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]),
            Self::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()) as f32,
        }
    }
}

#[derive(Debug)]
struct Property {
    name: String,
    ty: ScalarType,
    offset: usize,
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    /// `None` when the element has list properties and cannot be skipped by size.
    stride: Option<usize>,
    properties: Vec<Property>,
}

#[derive(Debug)]
struct Header {
    elements: Vec<Element>,
    len: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    const END: &[u8] = b"end_header";
    let mut pos = 0;
    let mut lines = Vec::new();
    loop {
        let rest = &bytes[pos..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Format("header is not terminated by end_header".into()))?;
        let line = std::str::from_utf8(&rest[..nl])
            .map_err(|_| Error::Format("header is not valid UTF-8".into()))?
            .trim_end_matches('\r');
        pos += nl + 1;
        if line.as_bytes() == END {
            break;
        }
        lines.push(line.to_owned());
    }

    let mut it = lines.iter();
    if it.next().map(String::as_str) != Some("ply") {
        return Err(Error::Format("missing `ply` magic".into()));
    }

    let mut elements: Vec<Element> = Vec::new();
    let mut saw_format = false;
    for line in it {
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("format") => {
                let enc = tok.next().unwrap_or("");
                if enc != "binary_little_endian" {
                    return Err(Error::UnsupportedEncoding(enc.to_owned()));
                }
                saw_format = true;
            }
            Some("comment") | Some("obj_info") | None => {}
            Some("element") => {
                let (Some(name), Some(count)) = (tok.next(), tok.next()) else {
                    return Err(Error::Format(format!("bad element line `{line}`")));
                };
                let count = count
                    .parse()
                    .map_err(|_| Error::Format(format!("bad element count in `{line}`")))?;
                elements.push(Element {
                    name: name.to_owned(),
                    count,
                    stride: Some(0),
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::Format("property before any element".into()))?;
                let ty = tok.next().unwrap_or("");
                if ty == "list" {
                    el.stride = None;
                    continue;
                }
                let (Some(ty), Some(name)) = (ScalarType::parse(ty), tok.next()) else {
                    return Err(Error::Format(format!("bad property line `{line}`")));
                };
                let offset = el.stride.unwrap_or(0);
                if let Some(s) = el.stride.as_mut() {
                    *s += ty.size();
                }
                el.properties.push(Property {
                    name: name.to_owned(),
                    ty,
                    offset,
                });
            }
            Some(other) => return Err(Error::Format(format!("unknown header keyword `{other}`"))),
        }
    }
    if !saw_format {
        return Err(Error::Format("missing format line".into()));
    }
    Ok(Header { elements, len: pos })
}

fn rest_count(degree: u8) -> usize {
    let basis = (degree as usize + 1).pow(2);
    3 * (basis - 1)
}

/// Parses a checkpoint held in memory.
pub fn read_field(bytes: &[u8]) -> Result<GaussianField> {
    let header = parse_header(bytes)?;
    let mut offset = header.len;
    let mut vertex = None;
    for el in &header.elements {
        if el.name == "vertex" {
            vertex = Some(el);
            break;
        }
        let stride = el.stride.ok_or_else(|| {
            Error::Format(format!(
                "element `{}` with list properties precedes `vertex`",
                el.name
            ))
        })?;
        offset += stride * el.count;
    }
    let vertex = vertex.ok_or_else(|| Error::Format("no `vertex` element".into()))?;
    let stride = vertex
        .stride
        .ok_or_else(|| Error::Format("list properties on `vertex` are not supported".into()))?;

    let lookup = |name: &str| vertex.properties.iter().find(|p| p.name == name);
    let require = |name: &str| lookup(name).ok_or_else(|| Error::MissingProperty(name.to_owned()));

    let xyz = [require("x")?, require("y")?, require("z")?];
    let normals = [lookup("nx"), lookup("ny"), lookup("nz")];
    let dc = [require("f_dc_0")?, require("f_dc_1")?, require("f_dc_2")?];
    let opacity = require("opacity")?;
    let scale = [require("scale_0")?, require("scale_1")?, require("scale_2")?];
    let rot = [
        require("rot_0")?,
        require("rot_1")?,
        require("rot_2")?,
        require("rot_3")?,
    ];

    let mut present = 0;
    while lookup(&format!("f_rest_{present}")).is_some() {
        present += 1;
    }
    let degree = (0..=MAX_SH_DEGREE)
        .rev()
        .find(|&d| rest_count(d) <= present)
        .unwrap_or(0);
    if rest_count(degree) != present {
        // Partial band: report the first property needed to complete it.
        return Err(Error::MissingProperty(format!("f_rest_{present}")));
    }
    let rest: Vec<&Property> = (0..present)
        .map(|k| lookup(&format!("f_rest_{k}")).unwrap())
        .collect();
    let per_channel = present / 3;

    let needed = (stride as u64) * (vertex.count as u64);
    let available = bytes.len().saturating_sub(offset) as u64;
    if available < needed {
        return Err(Error::Truncated {
            offset: bytes.len() as u64,
            expected: needed - available,
        });
    }

    let read = |rec: &[u8], p: &Property| p.ty.read(&rec[p.offset..]);
    let mut primitives = Vec::with_capacity(vertex.count);
    for rec in bytes[offset..offset + needed as usize].chunks_exact(stride) {
        let mut p = GaussianPrimitive {
            center: xyz.map(|q| read(rec, q)),
            normal: normals.map(|q| q.map_or(0.0, |q| read(rec, q))),
            rotation: normalize_quaternion(rot.map(|q| read(rec, q))),
            log_scale: scale.map(|q| read(rec, q)),
            opacity_logit: read(rec, opacity),
            ..Default::default()
        };
        for c in 0..3 {
            p.sh_coeffs[c] = read(rec, dc[c]);
            for k in 0..per_channel {
                p.set_sh(c, k + 1, read(rec, rest[c * per_channel + k]));
            }
        }
        primitives.push(p);
    }
    GaussianField::new(primitives, degree)
}

/// Loads a checkpoint from disk.
pub fn load_field(path: impl AsRef<Path>) -> Result<GaussianField> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_field(&bytes)
}

/// The exact header `save_field` writes for `count` primitives at `degree`.
pub fn header_string(count: usize, degree: u8) -> String {
    let mut h = String::with_capacity(2048);
    h.push_str("ply\nformat binary_little_endian 1.0\n");
    h.push_str(&format!("element vertex {count}\n"));
    for name in property_names(degree) {
        h.push_str("property float ");
        h.push_str(&name);
        h.push('\n');
    }
    h.push_str("end_header\n");
    h
}

/// Vertex property names in file order for the given SH degree.
pub fn property_names(degree: u8) -> Vec<String> {
    let mut names: Vec<String> = ["x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    names.extend((0..rest_count(degree)).map(|k| format!("f_rest_{k}")));
    names.extend(
        ["opacity", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"]
            .iter()
            .map(|s| s.to_string()),
    );
    names
}

/// Payload bytes for `count` primitives at `degree`.
pub fn payload_bytes(count: usize, degree: u8) -> u64 {
    (count as u64) * (property_names(degree).len() as u64) * 4
}

/// Serializes a field into a writer.
pub fn write_field<W: Write>(field: &GaussianField, mut w: W) -> std::io::Result<()> {
    let degree = field.sh_degree();
    let per_channel = rest_count(degree) / 3;
    w.write_all(header_string(field.len(), degree).as_bytes())?;
    let mut rec: Vec<f32> = Vec::with_capacity(FLOATS_PER_PRIMITIVE);
    let mut buf: Vec<u8> = Vec::with_capacity(BYTES_PER_PRIMITIVE);
    for p in field.primitives() {
        rec.clear();
        rec.extend_from_slice(&p.center);
        rec.extend_from_slice(&p.normal);
        rec.extend_from_slice(&p.sh_coeffs[..3]);
        for c in 0..3 {
            rec.extend((1..=per_channel).map(|k| p.sh(c, k)));
        }
        rec.push(p.opacity_logit);
        rec.extend_from_slice(&p.log_scale);
        rec.extend_from_slice(&p.rotation);
        buf.clear();
        buf.extend(rec.iter().flat_map(|v| v.to_le_bytes()));
        w.write_all(&buf)?;
    }
    w.flush()
}

/// Writes a field to disk.
pub fn save_field(field: &GaussianField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_field(field, BufWriter::with_capacity(1 << 20, file)).map_err(|e| Error::io(path, e))
}
