//! Cuts a synthetic arch with a sagittal plane and prints the section polylines.

use splintcad::mesh::{plane_section, Plane, Vector3};
use splintcad::synth::{make_arch_pair, ArchSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pair = make_arch_pair(&ArchSpec {
        grid_spacing: 0.8,
        ..ArchSpec::default()
    })?;
    for x in [0.0, 10.0, 20.0] {
        let plane = Plane::new(Vector3::x(), x)?;
        let lines = plane_section(&pair.maxilla, &plane);
        let total: f64 = lines.iter().map(|l| l.length()).sum();
        println!("x = {x:4}: {} polylines, {total:.2} mm total", lines.len());
    }
    Ok(())
}
