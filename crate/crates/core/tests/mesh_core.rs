use proptest::prelude::*;
use splintcad::mesh::{
    box_mesh, closest_point_on_triangle, euler_characteristic, icosphere, is_watertight, load_mesh, plane_section,
    save_mesh, signed_distance, IndexedMesh, MeshError, MeshFormat, Plane, Point3, RigidTransform, TriangleMesh,
    Vector3,
};

fn rigid() -> impl Strategy<Value = RigidTransform> {
    (
        prop::array::uniform3(-1.5f64..1.5),
        prop::array::uniform3(-50.0f64..50.0),
    )
        .prop_map(|(w, t)| RigidTransform::from_rotation_vector(&Vector3::from(w), Vector3::from(t)))
}

fn point(r: f64) -> impl Strategy<Value = Point3> {
    prop::array::uniform3(-r..r).prop_map(|a| Point3::new(a[0], a[1], a[2]))
}

fn blob() -> TriangleMesh {
    let a = icosphere(&Point3::new(0.0, 0.0, 0.0), 3.0, 3);
    let b = box_mesh(&Point3::new(1.0, -1.0, -1.0), &Point3::new(6.0, 1.5, 2.0));
    TriangleMesh::merge(&[&a, &b])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transforms_preserve_area_volume_and_distances(t in rigid()) {
        let m = icosphere(&Point3::new(1.0, 2.0, 3.0), 4.0, 2);
        let moved = m.transformed(&t);
        prop_assert!((moved.surface_area() - m.surface_area()).abs() < 1e-9 * m.surface_area());
        prop_assert!((moved.volume() - m.volume()).abs() < 1e-9 * m.volume());
        let (p, q) = (m.vertices()[0], m.vertices()[17]);
        let (p2, q2) = (moved.vertices()[0], moved.vertices()[17]);
        prop_assert!(((p - q).norm() - (p2 - q2).norm()).abs() < 1e-9);
        prop_assert!(t.compose(&t.inverse()).max_abs_diff(&RigidTransform::identity()) < 1e-12);
        prop_assert!(t.is_rigid(1e-12));
    }

    #[test]
    fn row_major_round_trip(t in rigid()) {
        let back = RigidTransform::from_row_major(&t.to_row_major()).unwrap();
        prop_assert!(back.max_abs_diff(&t) == 0.0);
    }

    #[test]
    fn sections_move_with_the_mesh(t in rigid(), offset in -2.5f64..2.5) {
        let m = icosphere(&Point3::origin(), 3.0, 3);
        let plane = Plane::new(Vector3::new(0.3, -0.2, 1.0).normalize(), offset).unwrap();
        let a = plane_section(&m, &plane);
        let b = plane_section(&m.transformed(&t), &plane.transformed(&t));
        prop_assert_eq!(a.len(), 1);
        prop_assert_eq!(b.len(), 1);
        prop_assert!(a[0].closed && b[0].closed);
        prop_assert!((a[0].length() - b[0].length()).abs() < 1e-9);
        for p in &b[0].points {
            prop_assert!(plane.transformed(&t).signed_distance(p).abs() < 1e-9);
        }
        // a sphere section is a circle of radius sqrt(R² - d²), up to faceting
        let radius = (9.0 - offset * offset).sqrt();
        prop_assert!(a[0].length() <= 2.0 * std::f64::consts::PI * radius + 1e-9);
        prop_assert!(a[0].length() > 0.95 * 2.0 * std::f64::consts::PI * radius);
    }

    #[test]
    fn nearest_point_matches_brute_force(p in point(10.0)) {
        let m = blob();
        let indexed = IndexedMesh::new(m.clone());
        let hit = indexed.nearest(&p).unwrap();
        let brute = (0..m.triangle_count())
            .map(|t| {
                let [a, b, c] = m.triangle(t);
                (closest_point_on_triangle(&p, &a, &b, &c).0 - p).norm()
            })
            .fold(f64::INFINITY, f64::min);
        prop_assert!((hit.distance - brute).abs() < 1e-12, "{} vs {}", hit.distance, brute);
        prop_assert!(((hit.point - p).norm() - hit.distance).abs() < 1e-12);
    }

    #[test]
    fn signed_distance_to_a_sphere(p in point(6.0)) {
        let m = icosphere(&Point3::origin(), 3.0, 4);
        let d = signed_distance(&p, &IndexedMesh::new(m)).unwrap();
        let exact = p.coords.norm() - 3.0;
        prop_assert!((d - exact).abs() < 0.01, "{} vs {}", d, exact);
    }

    #[test]
    fn ray_hits_match_plane_crossings(p in point(0.9), dz in 0.5f64..1.0) {
        let m = box_mesh(&Point3::new(-1.0, -1.0, -1.0), &Point3::new(1.0, 1.0, 1.0));
        let im = IndexedMesh::new(m);
        let dir = Vector3::new(0.1, -0.05, dz).normalize();
        let hits = im.ray_hits(&p, &dir, 0.0, 100.0);
        prop_assert_eq!(hits.len(), 1);
        let exit = p + dir * hits[0].t;
        let on_face = [exit.x, exit.y, exit.z].iter().any(|c| (c.abs() - 1.0).abs() < 1e-9);
        prop_assert!(on_face);
    }
}

#[test]
fn every_format_round_trips() {
    let m = icosphere(&Point3::new(0.25, -1.5, 3.0), 2.0, 2).transformed(&RigidTransform::from_rotation_vector(
        &Vector3::new(0.1, 0.2, 0.3),
        Vector3::new(1.0, 2.0, 3.0),
    ));
    let dir = tempfile::tempdir().unwrap();
    for (name, f, tol) in [
        ("a.stl", MeshFormat::StlBinary, 1e-5),
        ("b.stl", MeshFormat::StlAscii, 1e-5),
        ("c.ply", MeshFormat::PlyBinary, 0.0),
        ("d.ply", MeshFormat::PlyAscii, 0.0),
        ("e.obj", MeshFormat::Obj, 0.0),
    ] {
        let path = dir.path().join(name);
        save_mesh(&m, &path, f).unwrap();
        let back = load_mesh(&path).unwrap();
        assert_eq!(back.vertex_count(), m.vertex_count(), "{name}");
        assert_eq!(back.triangle_count(), m.triangle_count(), "{name}");
        assert!(is_watertight(&back), "{name}");
        assert_eq!(euler_characteristic(&back), 2, "{name}");
        // STL regroups vertices in first-use order, so compare by nearest vertex
        let im = IndexedMesh::new(back.clone());
        for p in m.vertices() {
            assert!(im.nearest(p).unwrap().distance <= tol, "{name}");
        }
        assert!((back.volume() - m.volume()).abs() < 1e-3, "{name}");
    }
}

#[test]
fn malformed_and_missing_files() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.ply");
    std::fs::write(&bad, "ply\nformat ascii 1.0\nelement vertex 3\nend_header\n0 0 0\n").unwrap();
    assert!(matches!(load_mesh(&bad), Err(MeshError::Malformed(_))));
    assert!(matches!(load_mesh(dir.path().join("none.stl")), Err(MeshError::NotFound(_))));
    let weird = dir.path().join("x.dae");
    std::fs::write(&weird, "").unwrap();
    assert!(matches!(load_mesh(&weird), Err(MeshError::UnknownFormat(_))));
}

#[test]
fn open_surfaces_are_signed_by_their_normals() {
    let plate = IndexedMesh::new(splintcad::mesh::flat_plate(2.0, 2.0, 2, 2, 0.0));
    assert!((signed_distance(&Point3::new(1.0, 1.0, 0.5), &plate).unwrap() - 0.5).abs() < 1e-12);
    assert!((signed_distance(&Point3::new(1.0, 1.0, -0.5), &plate).unwrap() + 0.5).abs() < 1e-12);
    assert!(plate.has_open_boundary());
    assert!(matches!(
        signed_distance(&Point3::origin(), &IndexedMesh::new(TriangleMesh::empty())),
        Err(MeshError::Empty)
    ));
}
