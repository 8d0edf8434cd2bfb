//! Nearest-point, signed-distance and ray queries against an indexed mesh.

use std::collections::BTreeMap;

use super::bvh::{Aabb, SpatialIndex};
use super::{MeshError, Point3, TriangleMesh, Vector3};

/// Which part of a triangle the closest point landed on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NearestFeature {
    Face,
    /// Edge from corner `k` to corner `(k + 1) % 3`.
    Edge(u8),
    Vertex(u8),
}

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision Detection 5.1.5).
pub fn closest_point_on_triangle(
    p: &Point3,
    a: &Point3,
    b: &Point3,
    c: &Point3,
) -> (Point3, NearestFeature) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, NearestFeature::Vertex(0));
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, NearestFeature::Vertex(1));
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, NearestFeature::Edge(0));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, NearestFeature::Vertex(2));
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, NearestFeature::Edge(2));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, NearestFeature::Edge(1));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, NearestFeature::Face)
}

#[derive(Clone, Copy, Debug)]
pub struct NearestHit {
    pub point: Point3,
    pub distance: f64,
    /// Triangle id, or vertex id for triangle-free meshes.
    pub primitive: usize,
    pub feature: NearestFeature,
    /// Angle-weighted pseudo-normal of the nearest feature.
    pub pseudo_normal: Vector3,
    /// The nearest feature lies on an open boundary of the surface.
    pub on_boundary: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayHit {
    pub t: f64,
    pub triangle: usize,
    /// The ray enters through the outward side of the triangle.
    pub front_facing: bool,
}

/// A mesh bundled with its triangle hierarchy and the pseudo-normals needed for
/// sign-robust distance queries. Immutable after construction.
#[derive(Clone, Debug)]
pub struct IndexedMesh {
    mesh: TriangleMesh,
    index: SpatialIndex,
    face_normals: Vec<Vector3>,
    edge_normals: Vec<[Vector3; 3]>,
    edge_boundary: Vec<[bool; 3]>,
    vertex_boundary: Vec<bool>,
    boundary_segments: Vec<(Point3, Point3)>,
    boundary_index: SpatialIndex,
}

impl IndexedMesh {
    pub fn new(mesh: TriangleMesh) -> IndexedMesh {
        let nt = mesh.triangle_count();
        let face_normals: Vec<Vector3> = (0..nt).map(|t| mesh.face_normal(t)).collect();
        let boxes: Vec<Aabb> = if nt > 0 {
            (0..nt)
                .map(|t| Aabb::from_points(mesh.triangle(t).iter()))
                .collect()
        } else {
            mesh.vertices()
                .iter()
                .map(|p| Aabb { min: *p, max: *p })
                .collect()
        };
        let index = SpatialIndex::build(&boxes);

        let mut edges: BTreeMap<(u32, u32), Vec<(usize, usize)>> = BTreeMap::new();
        for (t, tri) in mesh.triangles().iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edges.entry((a.min(b), a.max(b))).or_default().push((t, k));
            }
        }
        let mut edge_normals = vec![[Vector3::zeros(); 3]; nt];
        let mut edge_boundary = vec![[false; 3]; nt];
        let mut vertex_boundary = vec![false; mesh.vertex_count()];
        let mut boundary_segments = Vec::new();
        for (&(a, b), uses) in &edges {
            let sum = uses
                .iter()
                .fold(Vector3::zeros(), |acc, &(t, _)| acc + face_normals[t]);
            let n = if sum.norm() > 0.0 {
                sum.normalize()
            } else {
                face_normals[uses[0].0]
            };
            let boundary = uses.len() == 1;
            for &(t, k) in uses {
                edge_normals[t][k] = n;
                edge_boundary[t][k] = boundary;
            }
            if boundary {
                vertex_boundary[a as usize] = true;
                vertex_boundary[b as usize] = true;
                boundary_segments.push((mesh.vertices()[a as usize], mesh.vertices()[b as usize]));
            }
        }
        let seg_boxes: Vec<Aabb> = boundary_segments
            .iter()
            .map(|(a, b)| Aabb::from_points([a, b]))
            .collect();
        let boundary_index = SpatialIndex::build(&seg_boxes);
        IndexedMesh {
            mesh,
            index,
            face_normals,
            edge_normals,
            edge_boundary,
            vertex_boundary,
            boundary_segments,
            boundary_index,
        }
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn index(&self) -> &SpatialIndex {
        &self.index
    }

    pub fn face_normal(&self, t: usize) -> &Vector3 {
        &self.face_normals[t]
    }

    pub fn has_open_boundary(&self) -> bool {
        !self.boundary_segments.is_empty()
    }

    pub fn nearest(&self, p: &Point3) -> Option<NearestHit> {
        self.nearest_within(p, f64::INFINITY)
    }

    /// Nearest surface point no farther than `max_dist`.
    pub fn nearest_within(&self, p: &Point3, max_dist: f64) -> Option<NearestHit> {
        let mesh = &self.mesh;
        let max_d2 = if max_dist.is_finite() {
            max_dist * max_dist
        } else {
            f64::INFINITY
        };
        if mesh.triangle_count() == 0 {
            let verts = mesh.vertices();
            let (id, d2) = self
                .index
                .nearest_within(p, max_d2, &mut |i| (verts[i as usize] - p).norm_squared())?;
            return Some(NearestHit {
                point: verts[id as usize],
                distance: d2.sqrt(),
                primitive: id as usize,
                feature: NearestFeature::Vertex(0),
                pseudo_normal: Vector3::zeros(),
                on_boundary: false,
            });
        }
        let (id, d2) = self.index.nearest_within(p, max_d2, &mut |t| {
            let [a, b, c] = mesh.triangle(t as usize);
            (closest_point_on_triangle(p, &a, &b, &c).0 - p).norm_squared()
        })?;
        let t = id as usize;
        let [a, b, c] = mesh.triangle(t);
        let (q, feature) = closest_point_on_triangle(p, &a, &b, &c);
        let tri = mesh.triangles()[t];
        let (pseudo_normal, on_boundary) = match feature {
            NearestFeature::Face => (self.face_normals[t], false),
            NearestFeature::Edge(k) => (self.edge_normals[t][k as usize], self.edge_boundary[t][k as usize]),
            NearestFeature::Vertex(k) => {
                let v = tri[k as usize] as usize;
                (mesh.normals()[v], self.vertex_boundary[v])
            }
        };
        Some(NearestHit {
            point: q,
            distance: d2.sqrt(),
            primitive: t,
            feature,
            pseudo_normal,
            on_boundary,
        })
    }

    /// Distance from `p` to the nearest open-boundary edge, if the surface has any.
    pub fn distance_to_boundary(&self, p: &Point3) -> Option<f64> {
        let segs = &self.boundary_segments;
        self.boundary_index
            .nearest(p, |i| {
                let (a, b) = segs[i as usize];
                point_segment_distance_squared(p, &a, &b)
            })
            .map(|(_, d2)| d2.sqrt())
    }

    /// All triangle hits along the ray `origin + t·dir`, `t ∈ (t_min, t_max)`, sorted by `t`.
    pub fn ray_hits(&self, origin: &Point3, dir: &Vector3, t_min: f64, t_max: f64) -> Vec<RayHit> {
        let mut hits = Vec::new();
        let mesh = &self.mesh;
        self.index.ray_candidates(origin, dir, t_max, |id| {
            let t = id as usize;
            let [a, b, c] = mesh.triangle(t);
            if let Some(s) = ray_triangle(origin, dir, &a, &b, &c) {
                if s > t_min && s < t_max {
                    hits.push(RayHit {
                        t: s,
                        triangle: t,
                        front_facing: self.face_normals[t].dot(dir) < 0.0,
                    });
                }
            }
        });
        hits.sort_by(|x, y| x.t.total_cmp(&y.t).then(x.triangle.cmp(&y.triangle)));
        hits
    }

    pub fn first_hit(&self, origin: &Point3, dir: &Vector3, t_min: f64, t_max: f64) -> Option<RayHit> {
        self.ray_hits(origin, dir, t_min, t_max).into_iter().next()
    }
}

/// Signed distance from `p` to the surface: magnitude is the Euclidean distance to
/// the nearest surface point, positive on the outward-normal side.
pub fn signed_distance(p: &Point3, mesh: &IndexedMesh) -> Result<f64, MeshError> {
    let hit = mesh.nearest(p).ok_or(MeshError::Empty)?;
    Ok(signed_from_hit(p, &hit))
}

pub(crate) fn signed_from_hit(p: &Point3, hit: &NearestHit) -> f64 {
    let side = (p - hit.point).dot(&hit.pseudo_normal);
    if side < 0.0 {
        -hit.distance
    } else {
        hit.distance
    }
}

pub(crate) fn point_segment_distance_squared(p: &Point3, a: &Point3, b: &Point3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let t = if len2 > 0.0 {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (a + ab * t - p).norm_squared()
}

/// Two-sided Möller–Trumbore; returns the ray parameter of the hit.
pub(crate) fn ray_triangle(o: &Point3, d: &Vector3, a: &Point3, b: &Point3, c: &Point3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let pv = d.cross(&e2);
    let det = e1.dot(&pv);
    if det.abs() < 1e-14 * e1.norm() * e2.norm() * d.norm() {
        return None;
    }
    let inv = 1.0 / det;
    let tv = o - a;
    let u = tv.dot(&pv) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qv = tv.cross(&e1);
    let v = d.dot(&qv) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    Some(e2.dot(&qv) * inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{icosphere, unit_cube};

    #[test]
    fn closest_point_regions() {
        let a = Point3::new(0.0, 0.0, 0.0);
        let b = Point3::new(1.0, 0.0, 0.0);
        let c = Point3::new(0.0, 1.0, 0.0);
        let (q, f) = closest_point_on_triangle(&Point3::new(0.2, 0.2, 1.0), &a, &b, &c);
        assert_eq!(f, NearestFeature::Face);
        assert!((q - Point3::new(0.2, 0.2, 0.0)).norm() < 1e-15);
        let (_, f) = closest_point_on_triangle(&Point3::new(-1.0, -1.0, 0.0), &a, &b, &c);
        assert_eq!(f, NearestFeature::Vertex(0));
        let (q, f) = closest_point_on_triangle(&Point3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert_eq!(f, NearestFeature::Edge(1));
        assert!((q - Point3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn signed_distance_to_sphere() {
        let s = IndexedMesh::new(icosphere(&Point3::origin(), 1.0, 5));
        let out = signed_distance(&Point3::new(2.0, 0.0, 0.0), &s).unwrap();
        let inside = signed_distance(&Point3::origin(), &s).unwrap();
        assert!((out - 1.0).abs() < 0.01, "{out}");
        assert!((inside + 1.0).abs() < 0.01, "{inside}");
    }

    #[test]
    fn own_vertices_have_zero_distance() {
        let s = IndexedMesh::new(icosphere(&Point3::origin(), 1.0, 2));
        for v in s.mesh().vertices() {
            assert!(signed_distance(v, &s).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn sign_near_cube_edges_and_corners() {
        let c = IndexedMesh::new(unit_cube());
        assert!(signed_distance(&Point3::new(1.1, 1.1, 1.1), &c).unwrap() > 0.0);
        assert!(signed_distance(&Point3::new(1.1, 1.1, 0.5), &c).unwrap() > 0.0);
        assert!(signed_distance(&Point3::new(0.95, 0.95, 0.95), &c).unwrap() < 0.0);
        assert!(!c.has_open_boundary());
    }

    #[test]
    fn empty_mesh_is_an_error() {
        let e = IndexedMesh::new(TriangleMesh::empty());
        assert!(matches!(signed_distance(&Point3::origin(), &e), Err(MeshError::Empty)));
    }

    #[test]
    fn ray_through_cube() {
        let c = IndexedMesh::new(unit_cube());
        let hits = c.ray_hits(
            &Point3::new(0.3, 0.4, -1.0),
            &Vector3::z(),
            0.0,
            f64::INFINITY,
        );
        assert_eq!(hits.len(), 2);
        assert!((hits[0].t - 1.0).abs() < 1e-12 && hits[0].front_facing);
        assert!((hits[1].t - 2.0).abs() < 1e-12 && !hits[1].front_facing);
    }
}
