//! Round-trips a mesh through every supported format and applies a rigid motion.

use splintcad::mesh::{icosphere, load_mesh, save_mesh, MeshFormat, Point3, RigidTransform, Vector3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ball = icosphere(&Point3::origin(), 5.0, 3);
    let dir = std::env::temp_dir().join("splintcad_mesh_io");
    std::fs::create_dir_all(&dir)?;
    for (name, format) in [
        ("ball.stl", MeshFormat::StlBinary),
        ("ball_ascii.stl", MeshFormat::StlAscii),
        ("ball.ply", MeshFormat::PlyBinary),
        ("ball_ascii.ply", MeshFormat::PlyAscii),
        ("ball.obj", MeshFormat::Obj),
    ] {
        let path = dir.join(name);
        save_mesh(&ball, &path, format)?;
        let back = load_mesh(&path)?;
        println!(
            "{name:15} {} bytes, {} triangles, volume {:.3}",
            std::fs::metadata(&path)?.len(),
            back.triangle_count(),
            back.volume()
        );
    }

    let t = RigidTransform::from_axis_angle(&Vector3::z(), 30f64.to_radians())
        .compose(&RigidTransform::from_translation(Vector3::new(10.0, 0.0, 0.0)));
    let moved = ball.transformed(&t);
    println!("centroid after motion: {:?}", moved.centroid());
    println!("row-major matrix: {:?}", t.to_row_major());
    Ok(())
}
