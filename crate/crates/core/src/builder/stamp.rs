//! The embossing stamp and automatic occlusal-surface selection.

use super::{stage_err, BuildError, DesignCase, SplintParams, Stage};
use crate::mesh::{
    boundary_edges, connected_components, IndexedMesh, Point3, RigidTransform, TriangleMesh, Vector3,
};

#[derive(Clone, Debug)]
pub struct OcclusalStamp {
    /// Closed pressing tool: the contact face extruded against the press direction.
    pub mesh: TriangleMesh,
    /// Contact face, oriented toward the press direction.
    pub contact: TriangleMesh,
    /// Unit vector along which the stamp moves into the splint.
    pub press_direction: Vector3,
    pub extrusion_depth: f64,
}

/// Closed prism whose top is `contact` and whose bottom is `contact` moved by
/// `-depth` along `press`. `contact` must face along `press`.
fn extrude(contact: &TriangleMesh, press: &Vector3, depth: f64) -> TriangleMesh {
    let n = contact.vertex_count() as u32;
    let mut verts = contact.vertices().to_vec();
    verts.extend(contact.vertices().iter().map(|p| p - press * depth));
    let mut tris: Vec<[u32; 3]> = contact.triangles().to_vec();
    tris.extend(contact.triangles().iter().map(|t| [t[0] + n, t[2] + n, t[1] + n]));
    for (a, b) in boundary_edges(contact) {
        tris.push([b, a, a + n]);
        tris.push([b, a + n, b + n]);
    }
    TriangleMesh::new(verts, tris).expect("prism indices")
}

fn oriented_along(mesh: &TriangleMesh, dir: &Vector3) -> TriangleMesh {
    let s: f64 = (0..mesh.triangle_count()).map(|t| mesh.face_cross(t).dot(dir)).sum();
    if s < 0.0 {
        mesh.flipped()
    } else {
        mesh.clone()
    }
}

/// Moves the occlusal surface into the therapeutic position, offsets it by the
/// contact gap toward the splint and extrudes it into a pressing tool.
pub fn make_stamp(
    occlusal: &TriangleMesh,
    t_th: &RigidTransform,
    press_direction: &Vector3,
    params: &SplintParams,
) -> Result<OcclusalStamp, BuildError> {
    if occlusal.triangle_count() == 0 {
        return stage_err(Stage::Stamp, "empty occlusal surface");
    }
    let press = press_direction.normalize();
    let mut contact = oriented_along(&occlusal.transformed(t_th), &press);
    if params.contact_gap > 0.0 {
        let moved = contact
            .vertices()
            .iter()
            .zip(contact.normals())
            .map(|(p, n)| p + n * params.contact_gap)
            .collect();
        contact = contact.with_vertices(moved);
    }
    Ok(OcclusalStamp {
        mesh: extrude(&contact, &press, params.stamp_extrusion),
        contact,
        press_direction: press,
        extrusion_depth: params.stamp_extrusion,
    })
}

/// Drops spike triangles that turn away from the press direction and contact
/// components below the minimum area, then rebuilds the tool. Holes left by removed
/// spikes are closed when the stamp footprint is rasterized.
pub fn clean_stamp(stamp: &OcclusalStamp, params: &SplintParams) -> Result<OcclusalStamp, BuildError> {
    let c = &stamp.contact;
    let cos_limit = params.spike_angle_deg.to_radians().cos();
    let keep: Vec<bool> = (0..c.triangle_count())
        .map(|t| c.face_normal(t).dot(&stamp.press_direction) >= cos_limit)
        .collect();
    let spikes_removed = keep.iter().any(|k| !k);
    let trimmed = if spikes_removed {
        c.select_triangles(|t| keep[t])
    } else {
        c.clone()
    };
    let parts = connected_components(&trimmed);
    let total = parts.len();
    let kept: Vec<TriangleMesh> = parts
        .into_iter()
        .filter(|p| p.surface_area() >= params.stamp_min_area)
        .collect();
    if kept.is_empty() {
        return stage_err(
            Stage::StampCleaning,
            format!(
                "cleaning removed the whole stamp (minimum component area {} mm²)",
                params.stamp_min_area
            ),
        );
    }
    if !spikes_removed && kept.len() == total {
        return Ok(stamp.clone());
    }
    let refs: Vec<&TriangleMesh> = kept.iter().collect();
    let contact = TriangleMesh::merge(&refs);
    Ok(OcclusalStamp {
        mesh: extrude(&contact, &stamp.press_direction, stamp.extrusion_depth),
        contact,
        press_direction: stamp.press_direction,
        extrusion_depth: stamp.extrusion_depth,
    })
}

/// Crown triangles of the maxilla lying within the contact search distance of the
/// MI mandible, trimmed to patches above the minimum area.
pub fn generate_occlusal_surface(case: &DesignCase, params: &SplintParams) -> Result<TriangleMesh, BuildError> {
    let crown = case.crown_region(&params.cutting_plane);
    let mandible = IndexedMesh::new(case.mandible.clone());
    let d = params.contact_search_distance;
    let near: Vec<bool> = (0..crown.triangle_count())
        .map(|t| {
            let [a, b, c] = crown.triangle(t);
            let m = Point3::from((a.coords + b.coords + c.coords) / 3.0);
            mandible.nearest_within(&m, d).is_some()
        })
        .collect();
    let selected = crown.select_triangles(|t| near[t]);
    let kept: Vec<TriangleMesh> = connected_components(&selected)
        .into_iter()
        .filter(|p| p.surface_area() >= params.stamp_min_area)
        .collect();
    if kept.is_empty() {
        return stage_err(
            Stage::OcclusalSurface,
            format!("no occlusal region within {d} mm of the mandible"),
        );
    }
    let refs: Vec<&TriangleMesh> = kept.iter().collect();
    Ok(TriangleMesh::merge(&refs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{flat_plate, is_watertight};

    fn params() -> SplintParams {
        SplintParams::default()
    }

    #[test]
    fn flat_patch_makes_a_prism() {
        let patch = flat_plate(3.0, 2.0, 6, 4, 0.0);
        let s = make_stamp(&patch, &RigidTransform::identity(), &Vector3::z(), &params()).unwrap();
        assert!(is_watertight(&s.mesh));
        assert!((s.mesh.volume() - 6.0 * params().stamp_extrusion).abs() < 1e-9);
    }

    #[test]
    fn translation_moves_contact_centroid() {
        let patch = flat_plate(3.0, 2.0, 6, 4, 0.0);
        let t = RigidTransform::from_translation(Vector3::new(0.0, 3.0, 0.0));
        let s0 = make_stamp(&patch, &RigidTransform::identity(), &Vector3::z(), &params()).unwrap();
        let s1 = make_stamp(&patch, &t, &Vector3::z(), &params()).unwrap();
        let d = s1.contact.area_centroid() - s0.contact.area_centroid();
        assert!((d - Vector3::new(0.0, 3.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn sliver_is_cleaned_and_clean_stamp_is_a_fixed_point() {
        let main = flat_plate(3.0, 3.0, 6, 6, 0.0);
        let sliver = flat_plate(1.0, 0.5, 2, 1, 0.0)
            .transformed(&RigidTransform::from_translation(Vector3::new(10.0, 0.0, 0.0)));
        let both = TriangleMesh::merge(&[&main, &sliver]);
        let s = make_stamp(&both, &RigidTransform::identity(), &Vector3::z(), &params()).unwrap();
        let cleaned = clean_stamp(&s, &params()).unwrap();
        assert_eq!(cleaned.contact.triangle_count(), main.triangle_count());
        let again = clean_stamp(&cleaned, &params()).unwrap();
        assert_eq!(again.mesh.triangle_count(), cleaned.mesh.triangle_count());

        let strict = SplintParams {
            stamp_min_area: 100.0,
            ..params()
        };
        assert!(clean_stamp(&s, &strict).is_err());
    }

    #[test]
    fn empty_occlusal_surface_is_an_error() {
        let empty = TriangleMesh::empty();
        assert!(make_stamp(&empty, &RigidTransform::identity(), &Vector3::z(), &params()).is_err());
    }
}
