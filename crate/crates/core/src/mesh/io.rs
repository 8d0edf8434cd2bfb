//! STL (binary and ASCII), PLY (ASCII and binary little-endian) and OBJ readers/writers.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{MeshError, Point3, TriangleMesh, DEGENERATE_AREA, MERGE_TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    StlBinary,
    StlAscii,
    PlyBinary,
    PlyAscii,
    Obj,
}

impl MeshFormat {
    /// Picks the format from the file extension; STL and PLY default to binary.
    pub fn from_path(path: &Path) -> Result<MeshFormat, MeshError> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .unwrap_or_default();
        match ext.as_str() {
            "stl" => Ok(MeshFormat::StlBinary),
            "ply" => Ok(MeshFormat::PlyBinary),
            "obj" => Ok(MeshFormat::Obj),
            other => Err(MeshError::UnknownFormat(other.to_string())),
        }
    }
}

/// What load-time cleanup changed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CleanupReport {
    pub merged_vertices: usize,
    pub dropped_triangles: usize,
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh, MeshError> {
    load_mesh_report(path).map(|(m, _)| m)
}

/// Loads a mesh, merging vertices within 1e-6 mm and dropping degenerate triangles.
pub fn load_mesh_report(path: impl AsRef<Path>) -> Result<(TriangleMesh, CleanupReport), MeshError> {
    let path = path.as_ref();
    let format = MeshFormat::from_path(path)?;
    let bytes = read_bytes(path)?;
    let (vertices, triangles) = match format {
        MeshFormat::StlBinary | MeshFormat::StlAscii => parse_stl(&bytes)?,
        MeshFormat::PlyBinary | MeshFormat::PlyAscii => parse_ply(&bytes)?,
        MeshFormat::Obj => parse_obj(&bytes)?,
    };
    if vertices.is_empty() || triangles.is_empty() {
        return Err(MeshError::Empty);
    }
    let mesh = TriangleMesh::new(vertices, triangles)?;
    let (mesh, report) = mesh.cleanup(MERGE_TOLERANCE, DEGENERATE_AREA);
    if mesh.triangle_count() == 0 {
        return Err(MeshError::Empty);
    }
    Ok((mesh, report))
}

pub fn save_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>, format: MeshFormat) -> Result<(), MeshError> {
    let path = path.as_ref();
    if mesh.triangle_count() == 0 {
        return Err(MeshError::Empty);
    }
    let bytes = match format {
        MeshFormat::StlBinary => write_stl_binary(mesh),
        MeshFormat::StlAscii => write_stl_ascii(mesh),
        MeshFormat::PlyBinary => write_ply(mesh, true),
        MeshFormat::PlyAscii => write_ply(mesh, false),
        MeshFormat::Obj => write_obj(mesh),
    };
    write_bytes(path, &bytes)
}

/// ASCII PLY with one extra per-vertex float property (deviation maps).
pub fn save_scalar_ply(
    mesh: &TriangleMesh,
    values: &[f64],
    property: &str,
    path: impl AsRef<Path>,
) -> Result<(), MeshError> {
    assert_eq!(values.len(), mesh.vertex_count());
    let mut s = String::new();
    s.push_str("ply\nformat ascii 1.0\n");
    s.push_str(&format!("element vertex {}\n", mesh.vertex_count()));
    s.push_str("property double x\nproperty double y\nproperty double z\n");
    s.push_str(&format!("property float {property}\n"));
    s.push_str(&format!("element face {}\n", mesh.triangle_count()));
    s.push_str("property list uchar int vertex_indices\nend_header\n");
    for (p, v) in mesh.vertices().iter().zip(values) {
        let v = if v.is_finite() { *v as f32 } else { f32::NAN };
        s.push_str(&format!("{} {} {} {}\n", p.x, p.y, p.z, v));
    }
    for t in mesh.triangles() {
        s.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
    }
    write_bytes(path.as_ref(), s.as_bytes())
}

/// Plain point lists: one `x y z` triple per line, `#` starts a comment.
pub fn load_points(path: impl AsRef<Path>) -> Result<Vec<Point3>, MeshError> {
    let path = path.as_ref();
    let text = String::from_utf8(read_bytes(path)?).map_err(|_| MeshError::Malformed("point file is not UTF-8".into()))?;
    let mut pts = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|w| !w.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| MeshError::Malformed(format!("{}: line {}: expected three numbers", path.display(), n + 1)))?;
        if v.len() != 3 || v.iter().any(|x| !x.is_finite()) {
            return Err(MeshError::Malformed(format!("{}: line {}: expected three numbers", path.display(), n + 1)));
        }
        pts.push(Point3::new(v[0], v[1], v[2]));
    }
    if pts.is_empty() {
        return Err(MeshError::Empty);
    }
    Ok(pts)
}

/// Writes points with round-trip precision.
pub fn save_points(points: &[Point3], path: impl AsRef<Path>) -> Result<(), MeshError> {
    let mut s = String::new();
    for p in points {
        s.push_str(&format!("{:?} {:?} {:?}\n", p.x, p.y, p.z));
    }
    write_bytes(path.as_ref(), s.as_bytes())
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>, MeshError> {
    fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            MeshError::NotFound(path.to_path_buf())
        } else {
            MeshError::Io {
                path: path.to_path_buf(),
                source: e,
            }
        }
    })
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), MeshError> {
    let io_err = |e| MeshError::Io {
        path: PathBuf::from(path),
        source: e,
    };
    let f = fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(f);
    w.write_all(bytes).map_err(io_err)?;
    w.flush().map_err(io_err)
}

type Parsed = (Vec<Point3>, Vec<[u32; 3]>);

fn malformed(msg: impl Into<String>) -> MeshError {
    MeshError::Malformed(msg.into())
}

fn parse_stl(bytes: &[u8]) -> Result<Parsed, MeshError> {
    if bytes.len() < 84 {
        if bytes.starts_with(b"solid") {
            return parse_stl_ascii(bytes);
        }
        return Err(malformed("STL shorter than its 84-byte header"));
    }
    let count = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    let binary_len = 84usize.checked_add(count.saturating_mul(50));
    if binary_len == Some(bytes.len()) {
        return parse_stl_binary(bytes, count);
    }
    if bytes.starts_with(b"solid") {
        return parse_stl_ascii(bytes);
    }
    Err(malformed(format!(
        "binary STL declares {count} facets but holds {} bytes",
        bytes.len()
    )))
}

fn parse_stl_binary(bytes: &[u8], count: usize) -> Result<Parsed, MeshError> {
    let mut vertices = Vec::with_capacity(count * 3);
    let mut triangles = Vec::with_capacity(count);
    let f = |o: usize| f32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as f64;
    for i in 0..count {
        let base = 84 + i * 50 + 12;
        for k in 0..3 {
            let o = base + k * 12;
            let p = Point3::new(f(o), f(o + 4), f(o + 8));
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(malformed(format!("non-finite coordinate in facet {i}")));
            }
            vertices.push(p);
        }
        let b = (i * 3) as u32;
        triangles.push([b, b + 1, b + 2]);
    }
    Ok((vertices, triangles))
}

fn parse_stl_ascii(bytes: &[u8]) -> Result<Parsed, MeshError> {
    let text = std::str::from_utf8(bytes).map_err(|_| malformed("ASCII STL is not UTF-8"))?;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut pending: Vec<Point3> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("vertex") => {
                let mut xyz = [0.0; 3];
                for c in &mut xyz {
                    *c = it
                        .next()
                        .and_then(|s| s.parse::<f64>().ok())
                        .ok_or_else(|| malformed(format!("bad vertex on line {}", ln + 1)))?;
                }
                pending.push(Point3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("endfacet") => {
                if pending.len() != 3 {
                    return Err(malformed(format!(
                        "facet ending on line {} has {} vertices",
                        ln + 1,
                        pending.len()
                    )));
                }
                let b = vertices.len() as u32;
                vertices.append(&mut pending);
                triangles.push([b, b + 1, b + 2]);
            }
            _ => {}
        }
    }
    if !pending.is_empty() {
        return Err(malformed("ASCII STL ends inside a facet"));
    }
    Ok((vertices, triangles))
}

fn write_stl_binary(mesh: &TriangleMesh) -> Vec<u8> {
    let n = mesh.triangle_count();
    let mut out = Vec::with_capacity(84 + 50 * n);
    let mut header = [0u8; 80];
    let tag = b"binary STL";
    header[..tag.len()].copy_from_slice(tag);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(n as u32).to_le_bytes());
    for t in 0..n {
        let nrm = mesh.face_normal(t);
        for k in 0..3 {
            out.extend_from_slice(&(nrm[k] as f32).to_le_bytes());
        }
        for p in mesh.triangle(t) {
            for k in 0..3 {
                out.extend_from_slice(&(p[k] as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

fn write_stl_ascii(mesh: &TriangleMesh) -> Vec<u8> {
    let mut s = String::from("solid mesh\n");
    for t in 0..mesh.triangle_count() {
        let n = mesh.face_normal(t);
        s.push_str(&format!("  facet normal {:e} {:e} {:e}\n    outer loop\n", n.x, n.y, n.z));
        for p in mesh.triangle(t) {
            s.push_str(&format!("      vertex {:e} {:e} {:e}\n", p.x, p.y, p.z));
        }
        s.push_str("    endloop\n  endfacet\n");
    }
    s.push_str("endsolid mesh\n");
    s.into_bytes()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PlyType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl PlyType {
    fn parse(s: &str) -> Option<PlyType> {
        Some(match s {
            "char" | "int8" => PlyType::I8,
            "uchar" | "uint8" => PlyType::U8,
            "short" | "int16" => PlyType::I16,
            "ushort" | "uint16" => PlyType::U16,
            "int" | "int32" => PlyType::I32,
            "uint" | "uint32" => PlyType::U32,
            "float" | "float32" => PlyType::F32,
            "double" | "float64" => PlyType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            PlyType::I8 | PlyType::U8 => 1,
            PlyType::I16 | PlyType::U16 => 2,
            PlyType::I32 | PlyType::U32 | PlyType::F32 => 4,
            PlyType::F64 => 8,
        }
    }

    fn read(self, b: &[u8]) -> f64 {
        match self {
            PlyType::I8 => b[0] as i8 as f64,
            PlyType::U8 => b[0] as f64,
            PlyType::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            PlyType::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            PlyType::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            PlyType::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            PlyType::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            PlyType::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug)]
enum PlyProperty {
    Scalar(String, PlyType),
    List(String, PlyType, PlyType),
}

#[derive(Debug)]
struct PlyElement {
    name: String,
    count: usize,
    props: Vec<PlyProperty>,
}

fn parse_ply(bytes: &[u8]) -> Result<Parsed, MeshError> {
    let header_end = find_subslice(bytes, b"end_header")
        .ok_or_else(|| malformed("PLY without end_header"))?;
    let mut body_start = header_end + b"end_header".len();
    if bytes.get(body_start) == Some(&b'\r') {
        body_start += 1;
    }
    if bytes.get(body_start) == Some(&b'\n') {
        body_start += 1;
    }
    let header = std::str::from_utf8(&bytes[..header_end]).map_err(|_| malformed("PLY header is not UTF-8"))?;
    let mut lines = header.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(malformed("missing 'ply' magic"));
    }
    let mut binary = None;
    let mut elements: Vec<PlyElement> = Vec::new();
    for line in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            ["format", "ascii", _] => binary = Some(false),
            ["format", "binary_little_endian", _] => binary = Some(true),
            ["format", other, _] => return Err(malformed(format!("unsupported PLY format {other}"))),
            ["element", name, count] => elements.push(PlyElement {
                name: name.to_string(),
                count: count.parse().map_err(|_| malformed("bad element count"))?,
                props: Vec::new(),
            }),
            ["property", "list", ct, it, name] => {
                let el = elements.last_mut().ok_or_else(|| malformed("property before element"))?;
                let ct = PlyType::parse(ct).ok_or_else(|| malformed("bad list count type"))?;
                let it = PlyType::parse(it).ok_or_else(|| malformed("bad list item type"))?;
                el.props.push(PlyProperty::List(name.to_string(), ct, it));
            }
            ["property", ty, name] => {
                let el = elements.last_mut().ok_or_else(|| malformed("property before element"))?;
                let ty = PlyType::parse(ty).ok_or_else(|| malformed(format!("bad property type {ty}")))?;
                el.props.push(PlyProperty::Scalar(name.to_string(), ty));
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            _ => return Err(malformed(format!("unrecognised PLY header line '{line}'"))),
        }
    }
    let binary = binary.ok_or_else(|| malformed("PLY without format line"))?;
    let body = &bytes[body_start..];
    let mut reader: Box<dyn PlyReader> = if binary {
        Box::new(BinReader { data: body, pos: 0 })
    } else {
        let text = std::str::from_utf8(body).map_err(|_| malformed("ASCII PLY body is not UTF-8"))?;
        Box::new(AsciiReader {
            tokens: text.split_whitespace(),
        })
    };
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for el in &elements {
        let xyz_idx: Vec<Option<usize>> = ["x", "y", "z"]
            .iter()
            .map(|n| el.props.iter().position(|p| matches!(p, PlyProperty::Scalar(s, _) if s == n)))
            .collect();
        for _ in 0..el.count {
            let mut scalars = Vec::with_capacity(el.props.len());
            let mut list: Option<Vec<f64>> = None;
            for prop in &el.props {
                match prop {
                    PlyProperty::Scalar(_, ty) => scalars.push(reader.next(*ty)?),
                    PlyProperty::List(name, ct, it) => {
                        let n = reader.next(*ct)?;
                        if !(0.0..=1e6).contains(&n) {
                            return Err(malformed("bad list length"));
                        }
                        let mut items = Vec::with_capacity(n as usize);
                        for _ in 0..n as usize {
                            items.push(reader.next(*it)?);
                        }
                        if name == "vertex_indices" || name == "vertex_index" {
                            list = Some(items);
                        }
                        scalars.push(f64::NAN);
                    }
                }
            }
            if el.name == "vertex" {
                let get = |k: usize| {
                    xyz_idx[k]
                        .map(|i| scalars[i])
                        .ok_or_else(|| malformed("vertex element lacks x/y/z"))
                };
                vertices.push(Point3::new(get(0)?, get(1)?, get(2)?));
            } else if el.name == "face" {
                let idx = list.ok_or_else(|| malformed("face element lacks vertex_indices"))?;
                if idx.len() < 3 {
                    return Err(malformed("face with fewer than 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0] as u32, idx[k] as u32, idx[k + 1] as u32]);
                }
            }
        }
    }
    for (t, tri) in triangles.iter().enumerate() {
        if tri.iter().any(|&i| i as usize >= vertices.len()) {
            return Err(malformed(format!("face {t} references a missing vertex")));
        }
    }
    Ok((vertices, triangles))
}

trait PlyReader {
    fn next(&mut self, ty: PlyType) -> Result<f64, MeshError>;
}

struct BinReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl PlyReader for BinReader<'_> {
    fn next(&mut self, ty: PlyType) -> Result<f64, MeshError> {
        let n = ty.size();
        if self.pos + n > self.data.len() {
            return Err(malformed("binary PLY body is truncated"));
        }
        let v = ty.read(&self.data[self.pos..self.pos + n]);
        self.pos += n;
        Ok(v)
    }
}

struct AsciiReader<'a> {
    tokens: std::str::SplitWhitespace<'a>,
}

impl PlyReader for AsciiReader<'_> {
    fn next(&mut self, _ty: PlyType) -> Result<f64, MeshError> {
        self.tokens
            .next()
            .ok_or_else(|| malformed("ASCII PLY body is truncated"))?
            .parse::<f64>()
            .map_err(|_| malformed("bad number in ASCII PLY body"))
    }
}

fn find_subslice(h: &[u8], n: &[u8]) -> Option<usize> {
    h.windows(n.len()).position(|w| w == n)
}

fn write_ply(mesh: &TriangleMesh, binary: bool) -> Vec<u8> {
    let mut out = Vec::new();
    let fmt = if binary { "binary_little_endian" } else { "ascii" };
    out.extend_from_slice(
        format!(
            "ply\nformat {fmt} 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nelement face {}\nproperty list uchar int vertex_indices\nend_header\n",
            mesh.vertex_count(),
            mesh.triangle_count()
        )
        .as_bytes(),
    );
    if binary {
        for p in mesh.vertices() {
            for k in 0..3 {
                out.extend_from_slice(&p[k].to_le_bytes());
            }
        }
        for t in mesh.triangles() {
            out.push(3u8);
            for &i in t {
                out.extend_from_slice(&(i as i32).to_le_bytes());
            }
        }
    } else {
        let mut s = String::new();
        for p in mesh.vertices() {
            s.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
        }
        for t in mesh.triangles() {
            s.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
        }
        out.extend_from_slice(s.as_bytes());
    }
    out
}

fn parse_obj(bytes: &[u8]) -> Result<Parsed, MeshError> {
    let text = std::str::from_utf8(bytes).map_err(|_| malformed("OBJ is not UTF-8"))?;
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut xyz = [0.0; 3];
                for c in &mut xyz {
                    *c = it
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| malformed(format!("bad vertex on line {}", ln + 1)))?;
                }
                vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for tok in it {
                    let first = tok.split('/').next().unwrap_or("");
                    let i: i64 = first
                        .parse()
                        .map_err(|_| malformed(format!("bad face index on line {}", ln + 1)))?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        -1
                    };
                    if resolved < 0 || resolved as usize >= vertices.len() {
                        return Err(malformed(format!("face index out of range on line {}", ln + 1)));
                    }
                    idx.push(resolved as u32);
                }
                if idx.len() < 3 {
                    return Err(malformed(format!("face with fewer than 3 vertices on line {}", ln + 1)));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((vertices, triangles))
}

fn write_obj(mesh: &TriangleMesh) -> Vec<u8> {
    let mut s = String::new();
    for p in mesh.vertices() {
        s.push_str(&format!("v {} {} {}\n", p.x, p.y, p.z));
    }
    for t in mesh.triangles() {
        s.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    s.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{icosphere, unit_cube};

    fn cube_ascii_stl() -> String {
        let c = unit_cube();
        String::from_utf8(write_stl_ascii(&c)).unwrap()
    }

    #[test]
    fn ascii_stl_cube_merges_to_eight_vertices() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cube.stl");
        fs::write(&p, cube_ascii_stl()).unwrap();
        let (m, report) = load_mesh_report(&p).unwrap();
        assert_eq!(m.vertex_count(), 8);
        assert_eq!(m.triangle_count(), 12);
        assert_eq!(report.merged_vertices, 36 - 8);
    }

    #[test]
    fn binary_stl_has_one_record_per_facet() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cube.stl");
        save_mesh(&unit_cube(), &p, MeshFormat::StlBinary).unwrap();
        let len = fs::metadata(&p).unwrap().len();
        assert_eq!(len, 84 + 12 * 50);
    }

    #[test]
    fn truncated_stl_is_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.stl");
        fs::write(&p, [0u8; 40]).unwrap();
        let err = load_mesh(&p).unwrap_err();
        assert!(err.to_string().contains("malformed file"), "{err}");
        let mut bytes = write_stl_binary(&unit_cube());
        bytes.truncate(300);
        fs::write(&p, &bytes).unwrap();
        assert!(load_mesh(&p).unwrap_err().to_string().contains("malformed file"));
    }

    #[test]
    fn empty_mesh_cannot_be_saved() {
        let dir = tempfile::tempdir().unwrap();
        let err = save_mesh(&TriangleMesh::empty(), dir.path().join("e.stl"), MeshFormat::StlBinary);
        assert!(matches!(err, Err(MeshError::Empty)));
    }

    #[test]
    fn sphere_ply_counts_survive() {
        let dir = tempfile::tempdir().unwrap();
        let s = icosphere(&Point3::origin(), 1.0, 3);
        for fmt in [MeshFormat::PlyAscii, MeshFormat::PlyBinary] {
            let p = dir.path().join("s.ply");
            save_mesh(&s, &p, fmt).unwrap();
            let back = load_mesh(&p).unwrap();
            assert_eq!(back.vertex_count(), s.vertex_count());
            assert_eq!(back.triangle_count(), s.triangle_count());
        }
    }

    #[test]
    fn obj_with_quads_and_negative_indices() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("q.obj");
        fs::write(&p, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf -4/1 -3/2 -2/3 -1/4\n").unwrap();
        let m = load_mesh(&p).unwrap();
        assert_eq!(m.triangle_count(), 2);
        assert!((m.surface_area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn missing_file_and_unknown_extension() {
        assert!(matches!(load_mesh("/nonexistent/x.stl"), Err(MeshError::NotFound(_))));
        assert!(load_mesh("/nonexistent/x.step").unwrap_err().to_string().contains("unsupported"));
    }
}
