//! Indexed triangle meshes and the geometric queries built on them.
//!
//! All coordinates are millimetres. Triangles are wound counter-clockwise when
//! seen from outside, so face normals point outward.

mod bvh;
mod intersect;
mod io;
mod query;
mod section;
mod topology;
mod transform;

use std::collections::HashMap;
use std::path::PathBuf;

use thiserror::Error;

pub use bvh::{Aabb, SpatialIndex};
pub use intersect::{
    meshes_intersect, meshes_touch, min_distance_between, triangle_distance, IntersectionReport,
};
pub(crate) use io::{read_bytes, write_bytes};
pub use io::{load_mesh, load_mesh_report, load_points, save_mesh, save_points, save_scalar_ply, CleanupReport, MeshFormat};
pub use query::{
    closest_point_on_triangle, signed_distance, IndexedMesh, NearestFeature, NearestHit, RayHit,
};
pub use section::{plane_section, Polyline};
pub use topology::{
    boundary_edges, boundary_loops, connected_components, edge_stats, euler_characteristic,
    is_watertight, EdgeStats,
};
pub use transform::{Plane, RigidTransform};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;

/// Triangles below this area are dropped during cleanup.
pub const DEGENERATE_AREA: f64 = 1e-10;
/// Vertices closer than this are merged during cleanup.
pub const MERGE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error("unsupported mesh format: {0}")]
    UnknownFormat(String),
    #[error("mesh is empty")]
    Empty,
    #[error("triangle {triangle} references vertex {index} but mesh has {count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        index: u32,
        count: usize,
    },
    #[error("not a rigid transform: {0}")]
    NotRigid(String),
    #[error("plane normal must be non-zero and finite")]
    InvalidPlane,
}

/// An indexed triangle surface with derived, unit-length vertex normals.
#[derive(Clone, Debug, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3>,
    triangles: Vec<[u32; 3]>,
    normals: Vec<Vector3>,
}

impl Default for TriangleMesh {
    fn default() -> Self {
        Self::empty()
    }
}

impl TriangleMesh {
    pub fn empty() -> Self {
        Self {
            vertices: Vec::new(),
            triangles: Vec::new(),
            normals: Vec::new(),
        }
    }

    /// Builds a mesh as given. Indices are checked; no merging or cleanup.
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        let n = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                if i as usize >= n {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        index: i,
                        count: n,
                    });
                }
            }
        }
        let mut mesh = Self {
            vertices,
            triangles,
            normals: Vec::new(),
        };
        mesh.recompute_normals();
        Ok(mesh)
    }

    /// A triangle-free mesh, used for point clouds (tracker bows, sparse scans).
    pub fn from_points(points: Vec<Point3>) -> Self {
        let normals = vec![Vector3::zeros(); points.len()];
        Self {
            vertices: points,
            triangles: Vec::new(),
            normals,
        }
    }

    /// Merges near-coincident vertices and drops degenerate triangles.
    pub fn cleaned(
        vertices: Vec<Point3>,
        triangles: Vec<[u32; 3]>,
    ) -> Result<(Self, CleanupReport), MeshError> {
        let mesh = Self::new(vertices, triangles)?;
        Ok(mesh.cleanup(MERGE_TOLERANCE, DEGENERATE_AREA))
    }

    pub fn cleanup(&self, merge_tol: f64, min_area: f64) -> (Self, CleanupReport) {
        let (remap, merged_vertices) = weld_vertices(&self.vertices, merge_tol);
        let mut used = vec![u32::MAX; merged_vertices.len()];
        let mut verts = Vec::new();
        let mut tris = Vec::with_capacity(self.triangles.len());
        let mut dropped = 0usize;
        for tri in &self.triangles {
            let t = [
                remap[tri[0] as usize],
                remap[tri[1] as usize],
                remap[tri[2] as usize],
            ];
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                dropped += 1;
                continue;
            }
            let [a, b, c] = t.map(|i| merged_vertices[i as usize]);
            if 0.5 * (b - a).cross(&(c - a)).norm() < min_area {
                dropped += 1;
                continue;
            }
            let mut out = [0u32; 3];
            for k in 0..3 {
                let v = t[k] as usize;
                if used[v] == u32::MAX {
                    used[v] = verts.len() as u32;
                    verts.push(merged_vertices[v]);
                }
                out[k] = used[v];
            }
            tris.push(out);
        }
        let report = CleanupReport {
            merged_vertices: self.vertices.len() - merged_vertices.len(),
            dropped_triangles: dropped,
        };
        let mesh = if self.triangles.is_empty() {
            Self::from_points(merged_vertices)
        } else {
            Self::new(verts, tris).expect("indices remapped in range")
        };
        (mesh, report)
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn normals(&self) -> &[Vector3] {
        &self.normals
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn triangle(&self, t: usize) -> [Point3; 3] {
        self.triangles[t].map(|i| self.vertices[i as usize])
    }

    /// Unnormalized face normal (twice the area vector).
    pub fn face_cross(&self, t: usize) -> Vector3 {
        let [a, b, c] = self.triangle(t);
        (b - a).cross(&(c - a))
    }

    pub fn face_normal(&self, t: usize) -> Vector3 {
        let n = self.face_cross(t);
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            Vector3::zeros()
        }
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.face_cross(t).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Signed enclosed volume; positive for closed, outward-wound meshes.
    pub fn volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|tri| {
                let [a, b, c] = tri.map(|i| self.vertices[i as usize].coords);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    pub fn centroid(&self) -> Point3 {
        if self.vertices.is_empty() {
            return Point3::origin();
        }
        let sum = self
            .vertices
            .iter()
            .fold(Vector3::zeros(), |acc, p| acc + p.coords);
        Point3::from(sum / self.vertices.len() as f64)
    }

    /// Area-weighted centroid of the surface.
    pub fn area_centroid(&self) -> Point3 {
        let mut acc = Vector3::zeros();
        let mut total = 0.0;
        for t in 0..self.triangles.len() {
            let [a, b, c] = self.triangle(t);
            let area = self.triangle_area(t);
            acc += (a.coords + b.coords + c.coords) * (area / 3.0);
            total += area;
        }
        if total > 0.0 {
            Point3::from(acc / total)
        } else {
            self.centroid()
        }
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter())
    }

    /// Every vertex mapped by `t`; normals re-derived.
    pub fn transformed(&self, t: &RigidTransform) -> TriangleMesh {
        let vertices = self.vertices.iter().map(|p| t.apply_point(p)).collect();
        let normals = self.normals.iter().map(|n| t.apply_vector(n)).collect();
        TriangleMesh {
            vertices,
            triangles: self.triangles.clone(),
            normals,
        }
    }

    /// Same surface with every triangle's winding reversed.
    pub fn flipped(&self) -> TriangleMesh {
        let triangles = self.triangles.iter().map(|t| [t[0], t[2], t[1]]).collect();
        TriangleMesh::new(self.vertices.clone(), triangles).expect("same indices")
    }

    /// Sub-mesh made of the selected triangles, with unused vertices dropped.
    pub fn select_triangles(&self, keep: impl Fn(usize) -> bool) -> TriangleMesh {
        let mut map = vec![u32::MAX; self.vertices.len()];
        let mut verts = Vec::new();
        let mut tris = Vec::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if !keep(t) {
                continue;
            }
            let mut out = [0u32; 3];
            for k in 0..3 {
                let v = tri[k] as usize;
                if map[v] == u32::MAX {
                    map[v] = verts.len() as u32;
                    verts.push(self.vertices[v]);
                }
                out[k] = map[v];
            }
            tris.push(out);
        }
        TriangleMesh::new(verts, tris).expect("indices remapped in range")
    }

    /// Concatenates meshes without merging shared vertices.
    pub fn merge(parts: &[&TriangleMesh]) -> TriangleMesh {
        let mut verts = Vec::new();
        let mut tris = Vec::new();
        for part in parts {
            let base = verts.len() as u32;
            verts.extend_from_slice(&part.vertices);
            tris.extend(part.triangles.iter().map(|t| t.map(|i| i + base)));
        }
        if tris.is_empty() {
            return TriangleMesh::from_points(verts);
        }
        TriangleMesh::new(verts, tris).expect("offset indices in range")
    }

    /// Replaces vertex positions, keeping connectivity.
    pub fn with_vertices(&self, vertices: Vec<Point3>) -> TriangleMesh {
        assert_eq!(vertices.len(), self.vertices.len());
        if self.triangles.is_empty() {
            return TriangleMesh::from_points(vertices);
        }
        TriangleMesh::new(vertices, self.triangles.clone()).expect("same connectivity")
    }

    /// Angle-weighted vertex normals. Vertices without triangles get a zero normal.
    fn recompute_normals(&mut self) {
        let mut acc = vec![Vector3::zeros(); self.vertices.len()];
        for tri in &self.triangles {
            let p = tri.map(|i| self.vertices[i as usize]);
            let n = (p[1] - p[0]).cross(&(p[2] - p[0]));
            let len = n.norm();
            if len == 0.0 {
                continue;
            }
            let n = n / len;
            for k in 0..3 {
                let e1 = p[(k + 1) % 3] - p[k];
                let e2 = p[(k + 2) % 3] - p[k];
                let angle = e1.angle(&e2);
                if angle.is_finite() {
                    acc[tri[k] as usize] += n * angle;
                }
            }
        }
        self.normals = acc
            .into_iter()
            .map(|n| {
                let len = n.norm();
                if len > 0.0 {
                    n / len
                } else {
                    Vector3::zeros()
                }
            })
            .collect();
    }
}

/// Welds vertices within `tol`, keeping the first occurrence as representative.
fn weld_vertices(vertices: &[Point3], tol: f64) -> (Vec<u32>, Vec<Point3>) {
    let cell = tol.max(f64::MIN_POSITIVE);
    let key = |p: &Point3| {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    };
    let mut grid: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
    let mut remap = Vec::with_capacity(vertices.len());
    let mut out: Vec<Point3> = Vec::new();
    let tol2 = tol * tol;
    for p in vertices {
        let (kx, ky, kz) = key(p);
        let mut found = None;
        'search: for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(list) = grid.get(&(kx + dx, ky + dy, kz + dz)) {
                        for &idx in list {
                            if (out[idx as usize] - p).norm_squared() <= tol2 {
                                found = Some(idx);
                                break 'search;
                            }
                        }
                    }
                }
            }
        }
        let idx = match found {
            Some(i) => i,
            None => {
                let i = out.len() as u32;
                out.push(*p);
                grid.entry((kx, ky, kz)).or_default().push(i);
                i
            }
        };
        remap.push(idx);
    }
    (remap, out)
}

/// Unit cube `[0,1]³` with outward winding: 8 vertices, 12 triangles.
pub fn unit_cube() -> TriangleMesh {
    box_mesh(&Point3::origin(), &Point3::new(1.0, 1.0, 1.0))
}

/// Axis-aligned box between `lo` and `hi`.
pub fn box_mesh(lo: &Point3, hi: &Point3) -> TriangleMesh {
    let v = |x: bool, y: bool, z: bool| {
        Point3::new(
            if x { hi.x } else { lo.x },
            if y { hi.y } else { lo.y },
            if z { hi.z } else { lo.z },
        )
    };
    let vertices = vec![
        v(false, false, false),
        v(true, false, false),
        v(true, true, false),
        v(false, true, false),
        v(false, false, true),
        v(true, false, true),
        v(true, true, true),
        v(false, true, true),
    ];
    let triangles = vec![
        [0, 2, 1],
        [0, 3, 2],
        [4, 5, 6],
        [4, 6, 7],
        [0, 1, 5],
        [0, 5, 4],
        [1, 2, 6],
        [1, 6, 5],
        [2, 3, 7],
        [2, 7, 6],
        [3, 0, 4],
        [3, 4, 7],
    ];
    TriangleMesh::new(vertices, triangles).expect("static indices")
}

/// Icosphere of the given radius; `subdivisions = 4` gives 5120 faces, 5 gives 20480.
pub fn icosphere(center: &Point3, radius: f64, subdivisions: u32) -> TriangleMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vector3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Vector3>| {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let m = (verts[a as usize] + verts[b as usize]).normalize();
                verts.push(m);
                (verts.len() - 1) as u32
            })
        };
        for f in &faces {
            let ab = midpoint(f[0], f[1], &mut verts);
            let bc = midpoint(f[1], f[2], &mut verts);
            let ca = midpoint(f[2], f[0], &mut verts);
            next.push([f[0], ab, ca]);
            next.push([f[1], bc, ab]);
            next.push([f[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        faces = next;
    }
    let vertices = verts
        .into_iter()
        .map(|v| Point3::from(center.coords + v * radius))
        .collect();
    TriangleMesh::new(vertices, faces).expect("generated indices")
}

/// Regular grid of `nx × ny` quads over `[0,sx]×[0,sy]` at height `z`, facing +z.
pub fn flat_plate(sx: f64, sy: f64, nx: usize, ny: usize, z: f64) -> TriangleMesh {
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point3::new(
                sx * i as f64 / nx as f64,
                sy * j as f64 / ny as f64,
                z,
            ));
        }
    }
    let id = |i: usize, j: usize| (j * (nx + 1) + i) as u32;
    let mut triangles = Vec::with_capacity(nx * ny * 2);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriangleMesh::new(vertices, triangles).expect("generated indices")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normals_are_unit() {
        let s = icosphere(&Point3::origin(), 2.0, 2);
        for n in s.normals() {
            assert!((n.norm() - 1.0).abs() < 1e-6);
        }
        let c = unit_cube();
        assert!((c.volume() - 1.0).abs() < 1e-12);
        assert!((c.surface_area() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_index_rejected() {
        let err = TriangleMesh::new(vec![Point3::origin(); 2], vec![[0, 1, 2]]).unwrap_err();
        assert!(matches!(err, MeshError::IndexOutOfRange { index: 2, .. }));
    }

    #[test]
    fn cleanup_merges_and_drops() {
        let verts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(1.0 + 4e-7, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
        ];
        // second triangle collapses onto a line after the merge of vertex 3 into 1
        let tris = vec![[0, 1, 2], [1, 3, 4], [0, 4, 2]];
        let (mesh, report) = TriangleMesh::cleaned(verts, tris).unwrap();
        assert_eq!(report.merged_vertices, 1);
        assert_eq!(report.dropped_triangles, 1);
        assert_eq!(mesh.triangle_count(), 2);
        assert_eq!(mesh.vertex_count(), 4);
    }

    #[test]
    fn icosphere_counts() {
        let s = icosphere(&Point3::origin(), 1.0, 4);
        assert_eq!(s.triangle_count(), 5120);
        assert_eq!(s.vertex_count(), 2562);
    }
}
