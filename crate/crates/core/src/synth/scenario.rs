//! Scan-pair and bow-tracker scenarios with known therapeutic transforms.

use serde::{Deserialize, Serialize};

use std::path::{Path, PathBuf};

use super::{
    add_noise, check_sigma, hinge_opening, ledger_csv, make_arch_pair, random_rigid, stream, ArchSpec, SynthError,
    CUT_HEIGHT,
};
use crate::builder::{CaseFile, CaseMeshes, CaseTransform, SplintParams};
use crate::mesh::{save_mesh, save_points, write_bytes, MeshError, MeshFormat, Plane, Point3, RigidTransform, TriangleMesh, Vector3};
use crate::registration::{ScanPairSet, TrackerRecord, TransformFile};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BowSpec {
    /// Box the bow points are drawn from [mm].
    pub size: [f64; 3],
    pub points: usize,
    /// Put every point on one line (a degenerate bow).
    pub collinear: bool,
    /// Use identity face-scanner and dental-model calibrations.
    pub identity_calibration: bool,
}

impl Default for BowSpec {
    fn default() -> Self {
        Self {
            size: [40.0, 20.0, 10.0],
            points: 400,
            collinear: false,
            identity_calibration: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub arch: ArchSpec,
    /// Mandible motion from MI to the therapeutic position.
    pub t_true: RigidTransform,
    /// Scan noise [mm].
    pub noise: f64,
    /// Splint seating error carried into the study scans.
    pub seating_offset: RigidTransform,
    pub bow: BowSpec,
    /// Seed of the scan frames, the noise and the bow.
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            arch: ArchSpec::default(),
            t_true: hinge_opening(2.0, 1.0),
            noise: 0.0,
            seating_offset: RigidTransform::identity(),
            bow: BowSpec::default(),
            seed: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScanPairScenario {
    pub scans: ScanPairSet,
    /// Measurement-frame motion `M`: the scans satisfy `U1 = M⁻¹ U0`.
    pub frame: RigidTransform,
    pub t_true: RigidTransform,
}

/// `U1 = M⁻¹·U0 + noise`, `L1 = M⁻¹·T_true·L0 + noise` for a seeded random `M`.
pub fn make_scan_pair_scenario(spec: &ScenarioSpec) -> Result<ScanPairScenario, SynthError> {
    check_sigma(spec.noise)?;
    let pair = make_arch_pair(&spec.arch)?;
    let m = random_rigid(&mut stream(spec.seed, 0), 30.0, 10.0);
    let m_inv = m.inverse();
    let u1 = add_noise(&pair.maxilla.transformed(&m_inv), spec.noise, &mut stream(spec.seed, 1));
    let l1 = add_noise(
        &pair.mandible.transformed(&m_inv.compose(&spec.t_true)),
        spec.noise,
        &mut stream(spec.seed, 2),
    );
    Ok(ScanPairScenario {
        scans: ScanPairSet {
            u0: pair.maxilla,
            l0: pair.mandible,
            u1,
            l1,
        },
        frame: m,
        t_true: spec.t_true,
    })
}

#[derive(Clone, Debug)]
pub struct TrackerScenario {
    pub record: TrackerRecord,
    /// Bow motion in face-scanner coordinates.
    pub t_b: RigidTransform,
    /// MI mandible in the dental-model frame.
    pub l0: TriangleMesh,
    pub t_th: RigidTransform,
}

fn bow_points(spec: &BowSpec, seed: u64) -> Vec<Point3> {
    use rand::Rng;
    let mut rng = stream(seed, 3);
    let [sx, sy, sz] = spec.size;
    (0..spec.points)
        .map(|_| {
            if spec.collinear {
                let t: f64 = rng.gen_range(-0.5..=0.5);
                Point3::new(t * sx, t * sy, t * sz)
            } else {
                Point3::new(
                    rng.gen_range(-0.5..=0.5) * sx,
                    rng.gen_range(-0.5..=0.5) * sy,
                    rng.gen_range(-0.5..=0.5) * sz,
                )
            }
        })
        .collect()
}

/// Bow clouds `B0`, `B1 = T_B·B0 + noise` with `T_B = T⁻¹·T_true·T`, where
/// `T = T_D⁻¹·T_F`, so the therapeutic transform is `T·T_B·T⁻¹ = T_true`.
pub fn make_tracker_scenario(spec: &ScenarioSpec) -> Result<TrackerScenario, SynthError> {
    check_sigma(spec.noise)?;
    if spec.bow.points < 3 || spec.bow.size.iter().any(|s| !(*s > 0.0)) {
        return Err(SynthError::InvalidSpec("bow needs at least 3 points and a positive size".into()));
    }
    let pair = make_arch_pair(&spec.arch)?;
    let (t_f, t_d) = if spec.bow.identity_calibration {
        (RigidTransform::identity(), RigidTransform::identity())
    } else {
        let mut rng = stream(spec.seed, 4);
        (random_rigid(&mut rng, 180.0, 200.0), random_rigid(&mut rng, 180.0, 200.0))
    };
    let t = t_d.inverse().compose(&t_f);
    let t_b = t.inverse().compose(&spec.t_true).compose(&t);
    let pts = bow_points(&spec.bow, spec.seed);
    let b0 = TriangleMesh::from_points(pts);
    let b1 = add_noise(&b0.transformed(&t_b), spec.noise, &mut stream(spec.seed, 5));
    Ok(TrackerScenario {
        record: TrackerRecord { b0, b1, t_f, t_d },
        t_b,
        l0: pair.mandible,
        t_th: spec.t_true,
    })
}

/// Writes the MI arches, the therapeutic-position scans, the bow clouds and
/// calibrations, a build case file and the ground-truth ledger into `dir`.
pub fn write_scenario(spec: &ScenarioSpec, dir: &Path) -> Result<Vec<PathBuf>, SynthError> {
    let scans = make_scan_pair_scenario(spec)?;
    let tracker = make_tracker_scenario(spec)?;
    let pair = make_arch_pair(&spec.arch)?;
    std::fs::create_dir_all(dir).map_err(|e| MeshError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut out = Vec::new();
    let mut put = |name: &str, bytes: Vec<u8>| -> Result<(), SynthError> {
        write_bytes(&dir.join(name), &bytes)?;
        out.push(dir.join(name));
        Ok(())
    };
    let ply = |m: &TriangleMesh, name: &str| -> Result<PathBuf, SynthError> {
        let p = dir.join(name);
        save_mesh(m, &p, MeshFormat::PlyBinary)?;
        Ok(p)
    };
    let mut meshes = vec![
        ply(&scans.scans.u0, "maxilla.ply")?,
        ply(&scans.scans.l0, "mandible.ply")?,
        ply(&pair.occlusal, "occlusal.ply")?,
        ply(&scans.scans.u1, "u1.ply")?,
        ply(&scans.scans.l1, "l1.ply")?,
    ];
    for (name, m) in [("bow_b0.xyz", &tracker.record.b0), ("bow_b1.xyz", &tracker.record.b1)] {
        let p = dir.join(name);
        save_points(m.vertices(), &p)?;
        meshes.push(p);
    }
    let mask: String = pair.palate_mask.iter().map(|t| format!("{t}\n")).collect();
    put("palate_mask.txt", mask.into_bytes())?;
    let transform = |t: &RigidTransform, from: &str, to: &str| {
        let mut f = TransformFile::new(*t);
        f.from = from.into();
        f.to = to.into();
        f.to_toml().into_bytes()
    };
    put("t_true.toml", transform(&spec.t_true, "MI", "TP"))?;
    put("t_f.toml", transform(&tracker.record.t_f, "face-scanner", "world"))?;
    put("t_d.toml", transform(&tracker.record.t_d, "dental-model", "world"))?;
    let case = CaseFile {
        meshes: CaseMeshes {
            maxilla: "maxilla.ply".into(),
            mandible: "mandible.ply".into(),
            occlusal: Some("occlusal.ply".into()),
            crown_mask: None,
            condyle: None,
            fossa: None,
        },
        transform: CaseTransform {
            file: Some("t_true.toml".into()),
            matrix: None,
        },
        params: SplintParams {
            cutting_plane: Plane::new(Vector3::z(), CUT_HEIGHT).expect("unit normal"),
            ..SplintParams::default()
        },
    };
    put("case.toml", case.to_toml().into_bytes())?;
    let rows: [(&str, &str, &RigidTransform); 6] = [
        ("scenario", "t_true", &spec.t_true),
        ("scenario", "scan_frame", &scans.frame),
        ("scenario", "bow_motion", &tracker.t_b),
        ("scenario", "t_f", &tracker.record.t_f),
        ("scenario", "t_d", &tracker.record.t_d),
        ("scenario", "seating", &spec.seating_offset),
    ];
    put("ground_truth.csv", ledger_csv(&rows).into_bytes())?;
    put("spec.toml", toml::to_string(spec).expect("spec serializes").into_bytes())?;
    meshes.extend(out);
    Ok(meshes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registration::{estimate_tth_from_scans, estimate_tth_from_tracker, IcpParams, RegistrationError};

    fn coarse() -> ScenarioSpec {
        ScenarioSpec {
            arch: ArchSpec {
                grid_spacing: 0.8,
                ..ArchSpec::default()
            },
            ..ScenarioSpec::default()
        }
    }

    #[test]
    fn scans_recover_the_true_transform_without_noise() {
        let s = make_scan_pair_scenario(&coarse()).unwrap();
        let p = IcpParams {
            convergence: 1e-12,
            max_iterations: 200,
            ..IcpParams::default()
        };
        let (t, t_th, _) = estimate_tth_from_scans(&s.scans, &p).unwrap();
        assert!(t.max_abs_diff(&s.frame) < 1e-6, "{t:?} vs {:?}", s.frame);
        assert!(t_th.max_abs_diff(&s.t_true) < 1e-6);
    }

    #[test]
    fn identity_calibration_gives_the_bow_motion() {
        let spec = ScenarioSpec {
            bow: BowSpec {
                identity_calibration: true,
                ..BowSpec::default()
            },
            ..coarse()
        };
        let s = make_tracker_scenario(&spec).unwrap();
        assert!(s.t_b.max_abs_diff(&s.t_th) < 1e-12);
    }

    #[test]
    fn tracker_recovers_the_true_transform() {
        let s = make_tracker_scenario(&coarse()).unwrap();
        let p = IcpParams {
            initial: Some(s.t_b.compose(&random_rigid(&mut stream(7, 0), 0.5, 0.2))),
            convergence: 1e-12,
            max_iterations: 200,
            ..IcpParams::default()
        };
        let est = estimate_tth_from_tracker(&s.record, &s.l0, &p).unwrap();
        assert!(est.t_th.max_abs_diff(&s.t_th) < 1e-6);
    }

    #[test]
    fn collinear_bow_is_degenerate() {
        let spec = ScenarioSpec {
            bow: BowSpec {
                collinear: true,
                ..BowSpec::default()
            },
            ..coarse()
        };
        let s = make_tracker_scenario(&spec).unwrap();
        let r = estimate_tth_from_tracker(&s.record, &s.l0, &IcpParams::default());
        assert!(matches!(r, Err(RegistrationError::Degenerate)), "{r:?}");
    }
}
