//! Cross-sectional profiles of labelled meshes.

use crate::mesh::{plane_section, Plane, Point3, Polyline, TriangleMesh};

#[derive(Clone, Debug, PartialEq)]
pub struct ProfileSection {
    pub plane: Plane,
    /// `(role, polylines)` in input order.
    pub sections: Vec<(String, Vec<Polyline>)>,
    /// Distance from each point of the `outer` polylines to the `inner` polylines;
    /// empty unless both roles are present.
    pub thickness: Vec<f64>,
}

impl ProfileSection {
    pub fn polylines(&self, role: &str) -> Option<&[Polyline]> {
        self.sections.iter().find(|(r, _)| r == role).map(|(_, p)| &p[..])
    }
}

fn distance_to_polylines(p: &Point3, lines: &[Polyline]) -> f64 {
    let mut best = f64::INFINITY;
    for l in lines {
        for (a, b) in l.segments() {
            let ab = b - a;
            let len2 = ab.norm_squared();
            let t = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
            best = best.min((a + ab * t - p).norm());
        }
        if l.points.len() == 1 {
            best = best.min((l.points[0] - p).norm());
        }
    }
    best
}

/// Sections every mesh with `plane`. Roles named `inner` and `outer` also yield
/// the local wall thickness along the profile.
pub fn extract_profiles(meshes: &[(&str, &TriangleMesh)], plane: &Plane) -> ProfileSection {
    let sections: Vec<(String, Vec<Polyline>)> = meshes
        .iter()
        .map(|(role, m)| (role.to_string(), plane_section(m, plane)))
        .collect();
    let find = |role: &str| sections.iter().find(|(r, _)| r == role).map(|(_, p)| p);
    let thickness = match (find("inner"), find("outer")) {
        (Some(inner), Some(outer)) if !inner.is_empty() => outer
            .iter()
            .flat_map(|l| l.points.iter())
            .map(|p| distance_to_polylines(p, inner))
            .collect(),
        _ => Vec::new(),
    };
    ProfileSection {
        plane: *plane,
        sections,
        thickness,
    }
}
