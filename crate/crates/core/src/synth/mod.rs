//! Deterministic synthetic data: dental-arch pairs, scan-pair and bow-tracker
//! scenarios, and whole validation studies with a ground-truth ledger.
//!
//! All randomness comes from `ChaCha8Rng` seeded with a `u64`; independent draws use
//! separate ChaCha streams so that adding a scan never changes another.

mod arch;
mod scenario;
mod study;

use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use thiserror::Error;

use crate::builder::BuildError;
use crate::mesh::{MeshError, RigidTransform, TriangleMesh, Vector3};
use crate::registration::decompose_error;

pub use arch::{make_arch_pair, ArchPair, ArchSpec, CUT_HEIGHT};
pub use scenario::{
    make_scan_pair_scenario, make_tracker_scenario, write_scenario, BowSpec, ScanPairScenario, ScenarioSpec, TrackerScenario,
};
pub use study::{
    hinge_opening, make_study, read_study, write_study, GroundTruth, Study, StudyCase, StudyCaseSpec, StudySpec,
};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// A rigid motion with a uniformly random axis, rotation up to `max_deg` and
/// translation components up to `max_mm` in magnitude.
pub fn random_rigid(rng: &mut ChaCha8Rng, max_deg: f64, max_mm: f64) -> RigidTransform {
    let axis = loop {
        let v = Vector3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        if v.norm() > 1e-6 {
            break v.normalize();
        }
    };
    let angle = rng.gen_range(0.0..=max_deg).to_radians();
    let t = Vector3::new(
        rng.gen_range(-max_mm..=max_mm),
        rng.gen_range(-max_mm..=max_mm),
        rng.gen_range(-max_mm..=max_mm),
    );
    RigidTransform::from_rotation_vector(&(axis * angle), t)
}

/// Isotropic Gaussian displacement of every vertex.
pub fn add_noise(mesh: &TriangleMesh, sigma: f64, rng: &mut ChaCha8Rng) -> TriangleMesh {
    if sigma == 0.0 {
        return mesh.clone();
    }
    let n = Normal::new(0.0, sigma).expect("finite sigma");
    let v = mesh
        .vertices()
        .iter()
        .map(|p| p + Vector3::new(n.sample(rng), n.sample(rng), n.sample(rng)))
        .collect();
    mesh.with_vertices(v)
}

/// Ground-truth CSV: `case,quantity,alpha_deg,t_mm,m00..m23`.
pub fn ledger_csv(rows: &[(&str, &str, &RigidTransform)]) -> String {
    let mut s = String::from("case,quantity,alpha_deg,t_mm");
    for r in 0..3 {
        for c in 0..4 {
            let _ = write!(s, ",m{r}{c}");
        }
    }
    s.push('\n');
    for (case, q, t) in rows {
        let (a, d) = decompose_error(t);
        let _ = write!(s, "{case},{q},{a:.6},{d:.6}");
        for v in &t.to_row_major()[..12] {
            let _ = write!(s, ",{v:.17e}");
        }
        s.push('\n');
    }
    s
}

pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub(crate) fn check_sigma(sigma: f64) -> Result<(), SynthError> {
    if sigma >= 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(SynthError::InvalidSpec(format!("noise sigma must be non-negative, got {sigma}")))
    }
}
