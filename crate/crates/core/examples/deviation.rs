//! Deviation map of a displaced, noisy copy of an arch and the corrective fit that
//! undoes the displacement.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use splintcad::accuracy::{deviation_map, fit_corrective, DeviationParams};
use splintcad::mesh::{IndexedMesh, RigidTransform, Vector3};
use splintcad::synth::{add_noise, make_arch_pair, ArchSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pair = make_arch_pair(&ArchSpec {
        grid_spacing: 0.8,
        ..ArchSpec::default()
    })?;
    let reference = IndexedMesh::new(pair.maxilla.clone());
    let shift = RigidTransform::from_axis_angle(&Vector3::y(), 0.5f64.to_radians())
        .compose(&RigidTransform::from_translation(Vector3::new(0.2, 0.0, 0.1)));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let measured = add_noise(&pair.maxilla.transformed(&shift), 0.03, &mut rng);

    let map = deviation_map(&measured, &reference, &DeviationParams::default())?;
    println!("AVG {:.4} mm, STD {:.4} mm over {} points", map.stats.avg, map.stats.std, map.stats.n);
    let fit = fit_corrective(&measured, &reference, None)?;
    println!(
        "corrective: {:.3} deg, {:.3} mm; residual STD {:.4} mm",
        fit.alpha_deg, fit.t_mm, fit.residual.std
    );
    Ok(())
}
