//! Checks a few candidate therapeutic positions against the design constraints.

use splintcad::builder::{check_feasibility, DesignCase, SplintParams};
use splintcad::mesh::{Plane, RigidTransform, Vector3};
use splintcad::synth::{hinge_opening, make_arch_pair, ArchSpec, CUT_HEIGHT};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pair = make_arch_pair(&ArchSpec {
        grid_spacing: 0.8,
        ..ArchSpec::default()
    })?;
    let params = SplintParams {
        cutting_plane: Plane::new(Vector3::z(), CUT_HEIGHT)?,
        ..SplintParams::default()
    };
    let candidates = [
        ("closed bite", RigidTransform::identity()),
        ("2 deg opening", hinge_opening(2.0, 1.0)),
        ("raised 5 mm", RigidTransform::from_translation(Vector3::new(0.0, 0.0, 5.0))),
        ("20 deg opening", hinge_opening(20.0, 1.0)),
    ];
    for (name, t) in candidates {
        let case = DesignCase::new(pair.maxilla.clone(), pair.mandible.clone(), t);
        let report = check_feasibility(&case, &params);
        println!("{name}:");
        for c in &report.checks {
            println!("  {}", c.describe());
        }
    }
    Ok(())
}
