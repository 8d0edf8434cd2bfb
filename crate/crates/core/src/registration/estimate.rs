//! Therapeutic transform from scan pairs or from a tracked mandibular bow.

use super::{check_spread, icp_align, AlignmentResult, IcpParams, RegistrationError};
use crate::mesh::{IndexedMesh, MeshError, Point3, RigidTransform, TriangleMesh};

/// Upper and lower arches in MI (reference frame) and in the therapeutic position
/// (measurement frame).
#[derive(Clone, Debug)]
pub struct ScanPairSet {
    pub u0: TriangleMesh,
    pub l0: TriangleMesh,
    pub u1: TriangleMesh,
    pub l1: TriangleMesh,
}

#[derive(Clone, Debug)]
pub struct ScanDiagnostics {
    /// `U1 -> U0`, giving the measurement-to-reference transform.
    pub upper: AlignmentResult,
    /// `L0 -> L_th`, giving the therapeutic transform.
    pub lower: AlignmentResult,
}

/// Returns `(T, T_th, diagnostics)` where `T` maps the measurement frame to the
/// reference frame and `T_th` moves the MI mandible to the therapeutic position.
pub fn estimate_tth_from_scans(
    scans: &ScanPairSet,
    params: &IcpParams,
) -> Result<(RigidTransform, RigidTransform, ScanDiagnostics), RegistrationError> {
    for m in [&scans.u0, &scans.l0, &scans.u1, &scans.l1] {
        if m.vertex_count() == 0 {
            return Err(MeshError::Empty.into());
        }
    }
    let upper = icp_align(&scans.u1, &IndexedMesh::new(scans.u0.clone()), params)?;
    if upper.rms > params.max_residual {
        return Err(RegistrationError::ResidualTooHigh {
            what: "upper-arch",
            rms: upper.rms,
            threshold: params.max_residual,
        });
    }
    let t = upper.transform;
    let l_th = scans.l1.transformed(&t);
    let lower_params = IcpParams {
        initial: None,
        ..params.clone()
    };
    let lower = icp_align(&scans.l0, &IndexedMesh::new(l_th), &lower_params)?;
    let t_th = lower.transform;
    Ok((t, t_th, ScanDiagnostics { upper, lower }))
}

/// Bow motion and face-scanner / dental-model calibration.
#[derive(Clone, Debug)]
pub struct TrackerRecord {
    pub b0: TriangleMesh,
    pub b1: TriangleMesh,
    pub t_f: RigidTransform,
    pub t_d: RigidTransform,
}

#[derive(Clone, Debug)]
pub struct TrackerEstimate {
    pub t_b: RigidTransform,
    /// Face-scanner to dental-model frame, `T_D⁻¹ · T_F`.
    pub t: RigidTransform,
    pub t_th: RigidTransform,
    pub bow: AlignmentResult,
    /// The MI mandible carried through the face-scanner frame into the therapeutic position.
    pub l1: TriangleMesh,
}

/// Maps points through face-scanner space: `T · (T_B · (T⁻¹ · p))`.
pub fn map_stepwise(points: &[Point3], t: &RigidTransform, t_b: &RigidTransform) -> Vec<Point3> {
    let t_inv = t.inverse();
    points
        .iter()
        .map(|p| {
            let in_face = t_inv.apply_point(p);
            let moved = t_b.apply_point(&in_face);
            t.apply_point(&moved)
        })
        .collect()
}

pub fn estimate_tth_from_tracker(
    rec: &TrackerRecord,
    l0: &TriangleMesh,
    params: &IcpParams,
) -> Result<TrackerEstimate, RegistrationError> {
    for t in [&rec.t_f, &rec.t_d] {
        if !t.is_rigid(1e-9) {
            return Err(MeshError::NotRigid("calibration transform".into()).into());
        }
    }
    if rec.b0.vertex_count() == 0 || rec.b1.vertex_count() == 0 {
        return Err(MeshError::Empty.into());
    }
    check_spread(rec.b0.vertices().iter().copied())?;
    check_spread(rec.b1.vertices().iter().copied())?;
    let bow = icp_align(&rec.b0, &IndexedMesh::new(rec.b1.clone()), params)?;
    if bow.rms > params.max_residual {
        return Err(RegistrationError::ResidualTooHigh {
            what: "bow",
            rms: bow.rms,
            threshold: params.max_residual,
        });
    }
    let t_b = bow.transform;
    let t = rec.t_d.inverse().compose(&rec.t_f);
    let t_th = t.compose(&t_b).compose(&t.inverse());
    let l1 = l0.with_vertices(map_stepwise(l0.vertices(), &t, &t_b));
    Ok(TrackerEstimate { t_b, t, t_th, bow, l1 })
}
