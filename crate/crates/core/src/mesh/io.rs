use super::TriangleMesh;
use crate::error::{Error, Result};
use crate::geom::{Point, Vec3};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
        {
            Some(e) if e == "obj" => Ok(MeshFormat::Obj),
            Some(e) if e == "ply" => Ok(MeshFormat::Ply),
            other => Err(Error::UnsupportedFormat(other.unwrap_or_default())),
        }
    }
}

/// Loads an OBJ or PLY file, choosing the parser from the extension.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    match MeshFormat::from_path(path)? {
        MeshFormat::Obj => load_obj(path),
        MeshFormat::Ply => load_ply(path),
    }
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let (mesh, dropped) = read_obj(BufReader::new(file))?;
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} degenerate faces", path.display());
    }
    Ok(mesh)
}

pub fn load_ply(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let (mesh, dropped) = read_ply(BufReader::new(file))?;
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} degenerate faces", path.display());
    }
    Ok(mesh)
}

fn parse_err(location: String, message: impl Into<String>) -> Error {
    Error::Parse {
        location,
        message: message.into(),
    }
}

/// Pushes the fan triangulation of `poly`, skipping degenerate triples.
/// Returns the number of dropped triangles.
fn push_fan(faces: &mut Vec<[u32; 3]>, poly: &[u32]) -> usize {
    let mut dropped = 0;
    for i in 1..poly.len() - 1 {
        let f = [poly[0], poly[i], poly[i + 1]];
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            dropped += 1;
        } else {
            faces.push(f);
        }
    }
    dropped
}

/// Parses ASCII OBJ `v`/`f` records. Polygons are fan-triangulated and
/// degenerate index triples dropped; the drop count is returned.
pub fn read_obj(reader: impl BufRead) -> Result<(TriangleMesh, usize)> {
    let mut vertices = Vec::new();
    let mut polys: Vec<(usize, Vec<i64>)> = Vec::new();
    for (ln, line) in reader.lines().enumerate() {
        let lineno = ln + 1;
        let line = line.map_err(|e| parse_err(format!("line {lineno}"), e.to_string()))?;
        let line = line.trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut c = [0.0f64; 3];
                for slot in &mut c {
                    let tok = it.next().ok_or_else(|| {
                        parse_err(format!("line {lineno}"), "vertex needs three coordinates")
                    })?;
                    *slot = tok.parse().map_err(|_| {
                        parse_err(format!("line {lineno}"), format!("bad coordinate `{tok}`"))
                    })?;
                }
                if !c.iter().all(|x| x.is_finite()) {
                    return Err(parse_err(format!("line {lineno}"), "non-finite coordinate"));
                }
                vertices.push(Point::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in it {
                    let head = tok.split('/').next().unwrap_or("");
                    let v: i64 = head.parse().map_err(|_| {
                        parse_err(format!("line {lineno}"), format!("bad face index `{tok}`"))
                    })?;
                    idx.push(v);
                }
                if idx.len() < 3 {
                    return Err(parse_err(
                        format!("line {lineno}"),
                        "face needs at least three vertices",
                    ));
                }
                polys.push((lineno, idx));
            }
            _ => {}
        }
    }
    let n = vertices.len() as i64;
    let mut faces = Vec::new();
    let mut dropped = 0;
    for (lineno, idx) in polys {
        let mut resolved = Vec::with_capacity(idx.len());
        for v in idx {
            // OBJ indices are 1-based; negative ones count back from the end.
            let r = if v > 0 { v - 1 } else { n + v };
            if v == 0 || r < 0 || r >= n {
                return Err(parse_err(
                    format!("line {lineno}"),
                    format!("face index {v} out of range ({n} vertices)"),
                ));
            }
            resolved.push(r as u32);
        }
        dropped += push_fan(&mut faces, &resolved);
    }
    if faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    Ok((TriangleMesh { vertices, faces }, dropped))
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
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
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
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(String, Scalar),
    List(String, Scalar, Scalar),
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

/// Parses ASCII or binary little-endian PLY with `vertex` and `face`
/// elements. Other elements are skipped.
pub fn read_ply(mut reader: impl BufRead) -> Result<(TriangleMesh, usize)> {
    let mut offset = 0usize;
    let mut line = String::new();
    let mut next_line = |reader: &mut dyn BufRead, offset: &mut usize| -> Result<String> {
        line.clear();
        let n = reader
            .read_line(&mut line)
            .map_err(|e| parse_err(format!("byte {offset}"), e.to_string()))?;
        if n == 0 {
            return Err(parse_err(
                format!("byte {offset}"),
                "unexpected end of header",
            ));
        }
        *offset += n;
        Ok(line.trim().to_string())
    };
    if next_line(&mut reader, &mut offset)? != "ply" {
        return Err(parse_err("byte 0".into(), "missing `ply` magic"));
    }
    let mut binary = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        let start = offset;
        let l = next_line(&mut reader, &mut offset)?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks.first().copied() {
            Some("format") => {
                binary = Some(match toks.get(1).copied() {
                    Some("ascii") => false,
                    Some("binary_little_endian") => true,
                    other => {
                        return Err(Error::UnsupportedFormat(format!(
                            "ply format {}",
                            other.unwrap_or("?")
                        )))
                    }
                });
            }
            Some("element") => {
                let name = toks
                    .get(1)
                    .ok_or_else(|| parse_err(format!("byte {start}"), "element without name"))?;
                let count = toks
                    .get(2)
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| parse_err(format!("byte {start}"), "element without count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(format!("byte {start}"), "property before element"))?;
                let bad = || parse_err(format!("byte {start}"), format!("bad property `{l}`"));
                if toks.get(1) == Some(&"list") {
                    let ct = toks.get(2).and_then(|s| Scalar::parse(s)).ok_or_else(bad)?;
                    let it = toks.get(3).and_then(|s| Scalar::parse(s)).ok_or_else(bad)?;
                    let name = toks.get(4).ok_or_else(bad)?;
                    el.props.push(Property::List(name.to_string(), ct, it));
                } else {
                    let t = toks.get(1).and_then(|s| Scalar::parse(s)).ok_or_else(bad)?;
                    let name = toks.get(2).ok_or_else(bad)?;
                    el.props.push(Property::Scalar(name.to_string(), t));
                }
            }
            Some("end_header") => break,
            _ => {}
        }
    }
    let binary =
        binary.ok_or_else(|| parse_err(format!("byte {offset}"), "missing format line"))?;

    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut dropped = 0;
    let mut polys: Vec<(usize, Vec<u32>)> = Vec::new();

    if binary {
        let mut data = Vec::new();
        reader
            .read_to_end(&mut data)
            .map_err(|e| parse_err(format!("byte {offset}"), e.to_string()))?;
        let mut pos = 0usize;
        let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
            if *pos + n > data.len() {
                return Err(parse_err(
                    format!("byte {}", offset + *pos),
                    "truncated binary body",
                ));
            }
            let s = &data[*pos..*pos + n];
            *pos += n;
            Ok(s)
        };
        for el in &elements {
            for _ in 0..el.count {
                let rec_start = offset + pos;
                let mut xyz = [0.0; 3];
                let mut list = Vec::new();
                for p in &el.props {
                    match p {
                        Property::Scalar(name, t) => {
                            let v = t.read_le(take(&mut pos, t.size())?);
                            match name.as_str() {
                                "x" => xyz[0] = v,
                                "y" => xyz[1] = v,
                                "z" => xyz[2] = v,
                                _ => {}
                            }
                        }
                        Property::List(name, ct, it) => {
                            let n = ct.read_le(take(&mut pos, ct.size())?) as usize;
                            let is_idx = name == "vertex_indices" || name == "vertex_index";
                            for _ in 0..n {
                                let v = it.read_le(take(&mut pos, it.size())?);
                                if is_idx {
                                    list.push(v as i64);
                                }
                            }
                        }
                    }
                }
                record(&el.name, xyz, list, rec_start, &mut vertices, &mut polys)?;
            }
        }
    } else {
        let mut body = String::new();
        reader
            .read_to_string(&mut body)
            .map_err(|e| parse_err(format!("byte {offset}"), e.to_string()))?;
        let mut lines = body.lines();
        let mut line_off = offset;
        for el in &elements {
            for _ in 0..el.count {
                let l = lines
                    .next()
                    .ok_or_else(|| parse_err(format!("byte {line_off}"), "truncated ascii body"))?;
                let rec_start = line_off;
                line_off += l.len() + 1;
                let toks: Vec<&str> = l.split_whitespace().collect();
                let mut ti = 0usize;
                let mut next = || -> Result<f64> {
                    let t = toks
                        .get(ti)
                        .ok_or_else(|| parse_err(format!("byte {rec_start}"), "missing value"))?;
                    ti += 1;
                    t.parse().map_err(|_| {
                        parse_err(format!("byte {rec_start}"), format!("bad value `{t}`"))
                    })
                };
                let mut xyz = [0.0; 3];
                let mut list = Vec::new();
                for p in &el.props {
                    match p {
                        Property::Scalar(name, _) => {
                            let v = next()?;
                            match name.as_str() {
                                "x" => xyz[0] = v,
                                "y" => xyz[1] = v,
                                "z" => xyz[2] = v,
                                _ => {}
                            }
                        }
                        Property::List(name, _, _) => {
                            let n = next()? as usize;
                            let is_idx = name == "vertex_indices" || name == "vertex_index";
                            for _ in 0..n {
                                let v = next()?;
                                if is_idx {
                                    list.push(v as i64);
                                }
                            }
                        }
                    }
                }
                record(&el.name, xyz, list, rec_start, &mut vertices, &mut polys)?;
            }
        }
    }

    let n = vertices.len() as u32;
    for (at, poly) in polys {
        if poly.iter().any(|&v| v >= n) {
            return Err(parse_err(
                format!("byte {at}"),
                format!("face index out of range ({n} vertices)"),
            ));
        }
        dropped += push_fan(&mut faces, &poly);
    }
    if faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    Ok((TriangleMesh { vertices, faces }, dropped))
}

fn record(
    element: &str,
    xyz: [f64; 3],
    list: Vec<i64>,
    at: usize,
    vertices: &mut Vec<Point>,
    polys: &mut Vec<(usize, Vec<u32>)>,
) -> Result<()> {
    match element {
        "vertex" => {
            if !xyz.iter().all(|c| c.is_finite()) {
                return Err(parse_err(format!("byte {at}"), "non-finite coordinate"));
            }
            vertices.push(Point::new(xyz[0], xyz[1], xyz[2]));
        }
        "face" => {
            if list.len() < 3 {
                return Err(parse_err(
                    format!("byte {at}"),
                    "face needs at least three vertices",
                ));
            }
            if list.iter().any(|&v| v < 0) {
                return Err(parse_err(format!("byte {at}"), "negative face index"));
            }
            polys.push((at, list.into_iter().map(|v| v as u32).collect()));
        }
        _ => {}
    }
    Ok(())
}

/// `%.9g`-style formatting: nine significant digits, trailing zeros trimmed.
pub(crate) fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.8e}")
    }
}

pub fn write_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_obj_to(mesh, &mut w).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_obj_to(mesh: &TriangleMesh, w: &mut impl Write) -> std::io::Result<()> {
    for v in &mesh.vertices {
        writeln!(w, "v {} {} {}", fmt_sig9(v.x), fmt_sig9(v.y), fmt_sig9(v.z))?;
    }
    for f in &mesh.faces {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    w.flush()
}

/// Writes an ASCII PLY triangle mesh.
pub fn write_ply(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "ply\nformat ascii 1.0\nelement vertex {}", mesh.vertices.len())?;
        writeln!(w, "property double x\nproperty double y\nproperty double z")?;
        writeln!(w, "element face {}\nproperty list uchar uint vertex_indices\nend_header", mesh.faces.len())?;
        for v in &mesh.vertices {
            writeln!(w, "{} {} {}", fmt_sig9(v.x), fmt_sig9(v.y), fmt_sig9(v.z))?;
        }
        for f in &mesh.faces {
            writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

/// Writes OBJ or PLY depending on the extension.
pub fn save_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    match MeshFormat::from_path(path)? {
        MeshFormat::Obj => write_obj(mesh, path),
        MeshFormat::Ply => write_ply(mesh, path),
    }
}

/// Writes an ASCII PLY point cloud with per-point normals.
pub fn write_ply_points(points: &[Point], normals: &[Vec3], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let res = (|| -> std::io::Result<()> {
        writeln!(w, "ply\nformat ascii 1.0\nelement vertex {}", points.len())?;
        writeln!(w, "property double x\nproperty double y\nproperty double z")?;
        writeln!(
            w,
            "property double nx\nproperty double ny\nproperty double nz\nend_header"
        )?;
        for (p, n) in points.iter().zip(normals) {
            writeln!(
                w,
                "{} {} {} {} {} {}",
                fmt_sig9(p.x),
                fmt_sig9(p.y),
                fmt_sig9(p.z),
                fmt_sig9(n.x),
                fmt_sig9(n.y),
                fmt_sig9(n.z)
            )?;
        }
        w.flush()
    })();
    res.map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    const CUBE_OBJ: &str = "\
v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1
f 1 3 2\nf 1 4 3\nf 5 6 7\nf 5 7 8\nf 1 2 6\nf 1 6 5
f 2 3 7\nf 2 7 6\nf 3 4 8\nf 3 8 7\nf 4 1 5\nf 4 5 8
";

    #[test]
    fn reads_unit_cube() {
        let (m, dropped) = read_obj(Cursor::new(CUBE_OBJ)).unwrap();
        assert_eq!(m.num_vertices(), 8);
        assert_eq!(m.num_faces(), 12);
        assert_eq!(dropped, 0);
    }

    #[test]
    fn quad_is_fan_triangulated() {
        let src = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2/2/2 3 4\n";
        let (m, _) = read_obj(Cursor::new(src)).unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn out_of_range_index_names_line() {
        let src = CUBE_OBJ.replace("f 4 5 8", "f 4 5 9");
        let err = read_obj(Cursor::new(src)).unwrap_err();
        match err {
            Error::Parse { location, .. } => assert_eq!(location, "line 20"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn degenerate_faces_dropped_and_counted() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\nf 1 1 2\n";
        let (m, dropped) = read_obj(Cursor::new(src)).unwrap();
        assert_eq!(m.num_faces(), 1);
        assert_eq!(dropped, 1);
    }

    #[test]
    fn no_faces_is_empty_mesh() {
        assert!(matches!(
            read_obj(Cursor::new("v 0 0 0\n")),
            Err(Error::EmptyMesh)
        ));
    }

    #[test]
    fn ascii_and_binary_ply_agree() {
        let ascii = "ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\n\
element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        let (a, _) = read_ply(Cursor::new(ascii)).unwrap();
        let mut bin = b"ply\nformat binary_little_endian 1.0\nelement vertex 4\nproperty double x\nproperty double y\nproperty double z\n\
element face 1\nproperty list uchar uint vertex_indices\nend_header\n"
            .to_vec();
        for p in [
            [0.0f64, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [1.0, 1.0, 0.0],
            [0.0, 1.0, 0.0],
        ] {
            for c in p {
                bin.extend_from_slice(&c.to_le_bytes());
            }
        }
        bin.push(4);
        for i in 0u32..4 {
            bin.extend_from_slice(&i.to_le_bytes());
        }
        let (b, _) = read_ply(Cursor::new(bin)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_faces(), 2);
    }

    #[test]
    fn truncated_binary_ply_reports_offset() {
        let mut bin = b"ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n".to_vec();
        bin.extend_from_slice(&[0u8; 10]);
        assert!(matches!(
            read_ply(Cursor::new(bin)),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(fmt_sig9(0.5), "0.5");
        assert_eq!(fmt_sig9(-0.123456789123), "-0.123456789");
        assert_eq!(fmt_sig9(12345.678912345), "12345.6789");
        assert_eq!(fmt_sig9(1e-9), "1.00000000e-9");
        assert_eq!(fmt_sig9(0.0), "0");
    }

    #[test]
    fn obj_write_read_round_trip() {
        let (m, _) = read_obj(Cursor::new(CUBE_OBJ)).unwrap();
        let mut buf = Vec::new();
        write_obj_to(&m, &mut buf).unwrap();
        let (back, _) = read_obj(Cursor::new(buf)).unwrap();
        assert_eq!(m, back);
    }
}
