//! Builds a positioning splint for a synthetic arch pair and writes it as STL.
//!
//! `cargo run --release --example build_splint [resolution]`

use splintcad::builder::{build_splint, DesignCase, SplintParams};
use splintcad::mesh::{save_mesh, MeshFormat, Plane, Vector3};
use splintcad::synth::{hinge_opening, make_arch_pair, ArchSpec, CUT_HEIGHT};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let resolution = std::env::args().nth(1).map_or(Ok(0.2), |s| s.parse())?;
    let pair = make_arch_pair(&ArchSpec::default())?;
    let mut case = DesignCase::new(pair.maxilla.clone(), pair.mandible.clone(), hinge_opening(2.0, 1.0));
    case.occlusal = Some(pair.occlusal.clone());
    let params = SplintParams {
        resolution,
        cutting_plane: Plane::new(Vector3::z(), CUT_HEIGHT)?,
        ..SplintParams::default()
    };
    let model = build_splint(&case, &params)?;
    println!(
        "{} triangles, {} component(s), euler characteristic {}, footprint {:.1} mm2",
        model.mesh.triangle_count(),
        model.components,
        model.euler_characteristic,
        model.footprint_area
    );
    let path = std::env::temp_dir().join("splint.stl");
    save_mesh(&model.mesh, &path, MeshFormat::StlBinary)?;
    println!("wrote {}", path.display());
    Ok(())
}
