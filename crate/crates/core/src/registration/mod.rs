//! Rigid registration: closed-form point-pair fits, ICP, and the two procedures
//! that turn scans or tracker records into a therapeutic transform.

mod estimate;
mod exchange;
mod icp;

use nalgebra::{Matrix3, SymmetricEigen};
use thiserror::Error;

use crate::mesh::{MeshError, Point3, RigidTransform, Vector3};

pub use estimate::{
    estimate_tth_from_scans, estimate_tth_from_tracker, map_stepwise, ScanDiagnostics, ScanPairSet,
    TrackerEstimate, TrackerRecord,
};
pub use exchange::TransformFile;
pub use icp::{icp_align, principal_frame, AlignmentResult, IcpMetric, IcpParams};

#[derive(Debug, Error)]
pub enum RegistrationError {
    #[error("rigid fit needs at least 3 point pairs, got {0}")]
    TooFewPairs(usize),
    #[error("degenerate configuration: points are collinear or coincident")]
    Degenerate,
    #[error("no correspondences within the rejection distance of {0} mm (meshes too far apart)")]
    NoCorrespondences(f64),
    #[error("{what} residual {rms:.4} mm exceeds threshold {threshold:.4} mm")]
    ResidualTooHigh {
        what: &'static str,
        rms: f64,
        threshold: f64,
    },
    #[error("invalid ICP parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Relative size of the second principal spread below which points count as collinear.
const COLLINEAR_RATIO: f64 = 1e-10;

/// Fails when the points do not span a plane.
pub(crate) fn check_spread(points: impl Iterator<Item = Point3> + Clone) -> Result<(), RegistrationError> {
    let n = points.clone().count();
    if n < 3 {
        return Err(RegistrationError::TooFewPairs(n));
    }
    let c = points.clone().fold(Vector3::zeros(), |a, p| a + p.coords) / n as f64;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p.coords - c;
        cov += d * d.transpose();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(cov).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    if ev[0] <= 0.0 || ev[1] <= COLLINEAR_RATIO * ev[0] {
        return Err(RegistrationError::Degenerate);
    }
    Ok(())
}

/// Least-squares rigid motion `T` minimising `Σ |T·source - target|²` (Kabsch, no scale).
pub fn fit_rigid(pairs: &[(Point3, Point3)]) -> Result<RigidTransform, RegistrationError> {
    if pairs.len() < 3 {
        return Err(RegistrationError::TooFewPairs(pairs.len()));
    }
    check_spread(pairs.iter().map(|p| p.0))?;
    Ok(fit_rigid_unchecked(pairs.iter().map(|&(s, t)| (s, t))))
}

/// Kabsch without the degeneracy check; sums run in iteration order.
pub(crate) fn fit_rigid_unchecked(pairs: impl Iterator<Item = (Point3, Point3)> + Clone) -> RigidTransform {
    let mut n = 0usize;
    let (mut cs, mut ct) = (Vector3::zeros(), Vector3::zeros());
    for (s, t) in pairs.clone() {
        cs += s.coords;
        ct += t.coords;
        n += 1;
    }
    cs /= n as f64;
    ct /= n as f64;
    let mut h = Matrix3::zeros();
    for (s, t) in pairs {
        h += (s.coords - cs) * (t.coords - ct).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd v_t");
    let mut d = Matrix3::identity();
    if (vt.transpose() * u.transpose()).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let r = vt.transpose() * d * u.transpose();
    RigidTransform::from_parts(r, ct - r * cs)
}

/// Rotation error in degrees and translation error in mm of a (corrective) transform.
pub fn decompose_error(t: &RigidTransform) -> (f64, f64) {
    (t.rotation_angle().to_degrees(), t.translation().norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rigid(rng: &mut ChaCha8Rng) -> RigidTransform {
        let w = Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let t = Vector3::new(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0));
        RigidTransform::from_rotation_vector(&(w * 1.5), t)
    }

    #[test]
    fn identical_pairs_give_identity() {
        let pts = [Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0), Point3::new(0.0, 2.0, 1.0)];
        let pairs: Vec<_> = pts.iter().map(|p| (*p, *p)).collect();
        let t = fit_rigid(&pairs).unwrap();
        assert!(t.max_abs_diff(&RigidTransform::identity()) < 1e-12);
    }

    #[test]
    fn recovers_known_motion() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let truth = random_rigid(&mut rng);
        let pairs: Vec<_> = (0..100)
            .map(|_| {
                let p = Point3::new(rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0), rng.gen_range(-10.0..10.0));
                (p, truth.apply_point(&p))
            })
            .collect();
        assert!(fit_rigid(&pairs).unwrap().max_abs_diff(&truth) < 1e-9);
    }

    #[test]
    fn collinear_and_short_inputs_fail() {
        let line: Vec<_> = (0..3).map(|i| {
            let p = Point3::new(i as f64, 2.0 * i as f64, 0.0);
            (p, p)
        }).collect();
        assert!(matches!(fit_rigid(&line), Err(RegistrationError::Degenerate)));
        assert!(matches!(fit_rigid(&line[..2]), Err(RegistrationError::TooFewPairs(2))));
    }

    #[test]
    fn decompose_examples() {
        assert_eq!(decompose_error(&RigidTransform::identity()), (0.0, 0.0));
        let t = RigidTransform::from_translation(Vector3::new(1.0, 2.0, 2.0))
            .compose(&RigidTransform::from_axis_angle(&Vector3::z(), 10f64.to_radians()));
        let (a, d) = decompose_error(&t);
        assert!((a - 10.0).abs() < 1e-12);
        assert!((d - 3.0).abs() < 1e-12);
        let (a, d) = decompose_error(&t.compose(&t.inverse()));
        assert!(a < 1e-9 && d < 1e-9);
    }
}
