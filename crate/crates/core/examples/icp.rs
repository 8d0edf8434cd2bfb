//! Recovers a small rotation between two copies of an arch with both ICP metrics.

use splintcad::mesh::{IndexedMesh, RigidTransform, Vector3};
use splintcad::registration::{decompose_error, icp_align, IcpMetric, IcpParams};
use splintcad::synth::{make_arch_pair, ArchSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pair = make_arch_pair(&ArchSpec {
        grid_spacing: 0.8,
        ..ArchSpec::default()
    })?;
    let target = IndexedMesh::new(pair.maxilla.clone());
    let offset = RigidTransform::from_axis_angle(&Vector3::new(0.3, 1.0, 0.2).normalize(), 5f64.to_radians());
    let source = pair.maxilla.transformed(&offset);
    for metric in [IcpMetric::PointToPoint, IcpMetric::PointToPlane] {
        let params = IcpParams {
            metric,
            initial: Some(RigidTransform::identity()),
            ..IcpParams::default()
        };
        let r = icp_align(&source, &target, &params)?;
        let (deg, mm) = decompose_error(&r.transform.compose(&offset));
        println!(
            "{metric:?}: {} iterations, rms {:.2e} mm, error {deg:.2e} deg / {mm:.2e} mm",
            r.iterations, r.rms
        );
    }
    Ok(())
}
