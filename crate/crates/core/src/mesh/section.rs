//! Plane–mesh cross sections.

use std::collections::BTreeMap;

use super::{Plane, Point3, TriangleMesh};

#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    pub points: Vec<Point3>,
    pub closed: bool,
}

impl Polyline {
    pub fn length(&self) -> f64 {
        let mut len: f64 = self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        if self.closed && self.points.len() > 1 {
            len += (self.points[0] - self.points[self.points.len() - 1]).norm();
        }
        len
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point3, Point3)> + '_ {
        let n = self.points.len();
        let extra = if self.closed && n > 1 { 1 } else { 0 };
        (0..(n.saturating_sub(1) + extra)).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }
}

/// Intersects `mesh` with `plane` and chains the segments into polylines.
///
/// Vertices lying exactly on the plane are treated as below it, so every crossing
/// point sits on a unique mesh edge and shared edges link neighbouring triangles.
/// Coplanar faces contribute nothing.
pub fn plane_section(mesh: &TriangleMesh, plane: &Plane) -> Vec<Polyline> {
    let dist: Vec<f64> = mesh.vertices().iter().map(|p| plane.signed_distance(p)).collect();
    let above = |v: u32| dist[v as usize] > 0.0;

    let crossing = |a: u32, b: u32| -> Point3 {
        let (a, b) = (a.min(b), a.max(b));
        let (pa, pb) = (mesh.vertices()[a as usize], mesh.vertices()[b as usize]);
        let (da, db) = (dist[a as usize], dist[b as usize]);
        let t = da / (da - db);
        let p = pa + (pb - pa) * t;
        plane.project(&p)
    };

    // each segment joins two crossing edges, keyed by sorted vertex pair
    let mut segments: Vec<[(u32, u32); 2]> = Vec::new();
    for tri in mesh.triangles() {
        let mut ends = Vec::with_capacity(2);
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            if above(a) != above(b) {
                ends.push((a.min(b), a.max(b)));
            }
        }
        if ends.len() == 2 {
            segments.push([ends[0], ends[1]]);
        }
    }

    let mut by_edge: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
    for (s, seg) in segments.iter().enumerate() {
        by_edge.entry(seg[0]).or_default().push(s);
        by_edge.entry(seg[1]).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();

    let other_end = |seg: &[(u32, u32); 2], e: (u32, u32)| if seg[0] == e { seg[1] } else { seg[0] };
    let next_segment = |e: (u32, u32), used: &[bool]| -> Option<usize> {
        by_edge.get(&e)?.iter().copied().find(|&s| !used[s])
    };

    // open chains first: start at edges used by a single segment (open boundaries)
    let mut starts: Vec<(u32, u32)> = by_edge
        .iter()
        .filter(|(_, v)| v.len() == 1)
        .map(|(k, _)| *k)
        .collect();
    starts.extend(segments.iter().map(|s| s[0]));

    for start in starts {
        let Some(first) = next_segment(start, &used) else {
            continue;
        };
        let mut keys = vec![start];
        let mut cur_edge = start;
        let mut seg = first;
        let mut closed = false;
        loop {
            used[seg] = true;
            let nxt = other_end(&segments[seg], cur_edge);
            if nxt == start {
                closed = true;
                break;
            }
            keys.push(nxt);
            cur_edge = nxt;
            match next_segment(cur_edge, &used) {
                Some(s) => seg = s,
                None => break,
            }
        }
        let points = keys.iter().map(|&(a, b)| crossing(a, b)).collect();
        out.push(Polyline { points, closed });
    }
    out
}
