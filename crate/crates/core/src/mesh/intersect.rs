//! Triangle–triangle proximity and mesh–mesh intersection tests.

use super::query::{closest_point_on_triangle, ray_triangle};
use super::{IndexedMesh, Point3};

/// Offending triangle pairs, `(triangle of a, triangle of b)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IntersectionReport {
    pub pairs: Vec<(usize, usize)>,
}

impl IntersectionReport {
    pub fn intersects(&self) -> bool {
        !self.pairs.is_empty()
    }
}

/// Closest points of segments `p1q1` and `p2q2` (Ericson 5.1.9); returns squared distance.
fn segment_segment_distance_squared(p1: &Point3, q1: &Point3, p2: &Point3, q2: &Point3) -> f64 {
    let d1 = q1 - p1;
    let d2 = q2 - p2;
    let r = p1 - p2;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let (s, t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return r.norm_squared();
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    let c1 = p1 + d1 * s;
    let c2 = p2 + d2 * t;
    (c1 - c2).norm_squared()
}

fn segment_triangle_distance_squared(p: &Point3, q: &Point3, tri: &[Point3; 3]) -> f64 {
    let d = q - p;
    if let Some(t) = ray_triangle(p, &d, &tri[0], &tri[1], &tri[2]) {
        if (0.0..=1.0).contains(&t) {
            return 0.0;
        }
    }
    let mut best = (closest_point_on_triangle(p, &tri[0], &tri[1], &tri[2]).0 - p).norm_squared();
    best = best.min((closest_point_on_triangle(q, &tri[0], &tri[1], &tri[2]).0 - q).norm_squared());
    for k in 0..3 {
        best = best.min(segment_segment_distance_squared(p, q, &tri[k], &tri[(k + 1) % 3]));
    }
    best
}

/// Euclidean distance between two triangles (0 when they touch or cross).
pub fn triangle_distance(a: &[Point3; 3], b: &[Point3; 3]) -> f64 {
    triangle_distance_squared(a, b).sqrt()
}

fn triangle_distance_squared(a: &[Point3; 3], b: &[Point3; 3]) -> f64 {
    let mut best = f64::INFINITY;
    for k in 0..3 {
        best = best.min(segment_triangle_distance_squared(&a[k], &a[(k + 1) % 3], b));
        if best == 0.0 {
            return 0.0;
        }
        best = best.min(segment_triangle_distance_squared(&b[k], &b[(k + 1) % 3], a));
        if best == 0.0 {
            return 0.0;
        }
    }
    best
}

/// Every triangle pair closer than `tolerance` (contact counts at tolerance 0).
pub fn meshes_intersect(a: &IndexedMesh, b: &IndexedMesh, tolerance: f64) -> IntersectionReport {
    let tol2 = tolerance.max(0.0).powi(2);
    let mut pairs = Vec::new();
    a.index().pair_candidates(b.index(), tolerance.max(0.0), |ia, ib| {
        let ta = a.mesh().triangle(ia as usize);
        let tb = b.mesh().triangle(ib as usize);
        if triangle_distance_squared(&ta, &tb) <= tol2 {
            pairs.push((ia as usize, ib as usize));
        }
        true
    });
    pairs.sort_unstable();
    IntersectionReport { pairs }
}

/// Early-exit form of [`meshes_intersect`].
pub fn meshes_touch(a: &IndexedMesh, b: &IndexedMesh, tolerance: f64) -> bool {
    let tol2 = tolerance.max(0.0).powi(2);
    let mut found = false;
    a.index().pair_candidates(b.index(), tolerance.max(0.0), |ia, ib| {
        let ta = a.mesh().triangle(ia as usize);
        let tb = b.mesh().triangle(ib as usize);
        if triangle_distance_squared(&ta, &tb) <= tol2 {
            found = true;
            return false;
        }
        true
    });
    found
}

/// Minimum surface-to-surface distance and the triangle pair realising it.
pub fn min_distance_between(a: &IndexedMesh, b: &IndexedMesh) -> Option<(f64, usize, usize)> {
    a.index()
        .closest_pair(b.index(), |ia, ib| {
            triangle_distance_squared(&a.mesh().triangle(ia as usize), &b.mesh().triangle(ib as usize))
        })
        .map(|(ia, ib, d2)| (d2.sqrt(), ia as usize, ib as usize))
}
