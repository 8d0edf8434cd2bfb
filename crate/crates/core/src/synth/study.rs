//! Synthetic validation studies: built splints, simulated scans and the expected
//! output of every accuracy stage.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{add_noise, check_sigma, ledger_csv, make_arch_pair, random_rigid, stream, ArchPair, ArchSpec, SynthError, CUT_HEIGHT};
use crate::accuracy::CaseInputs;
use crate::builder::{build_splint, DesignCase, SplintModel, SplintParams};
use crate::mesh::{
    load_mesh, read_bytes, save_mesh, write_bytes, MeshError, MeshFormat, Plane, Point3, RigidTransform, TriangleMesh,
    Vector3,
};
use crate::registration::TransformFile;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyCaseSpec {
    pub name: String,
    pub t_th: RigidTransform,
    /// Pose error of the seated splint on the maxilla.
    #[serde(default)]
    pub seating: RigidTransform,
    /// Mandible pose error relative to the splint.
    #[serde(default)]
    pub sliding: RigidTransform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySpec {
    pub arch: ArchSpec,
    pub params: SplintParams,
    /// Scan noise [mm].
    pub noise: f64,
    pub seed: u64,
    pub cases: Vec<StudyCaseSpec>,
}

/// Opening rotation about a transverse hinge behind and above the arch, plus a
/// vertical drop.
pub fn hinge_opening(deg: f64, drop_mm: f64) -> RigidTransform {
    let hinge = RigidTransform::rotation_about(&Point3::new(0.0, -40.0, 20.0), &Vector3::x(), -deg.to_radians());
    RigidTransform::from_translation(Vector3::new(0.0, 0.0, -drop_mm)).compose(&hinge)
}

impl Default for StudySpec {
    fn default() -> Self {
        StudySpec::standard(8, 0.0, 1)
    }
}

impl StudySpec {
    /// `n` splints for increasingly opened positions.
    pub fn standard(n: usize, noise: f64, seed: u64) -> StudySpec {
        let cases = (0..n)
            .map(|k| StudyCaseSpec {
                name: format!("{}", k + 1),
                t_th: hinge_opening(1.5 + 0.25 * k as f64, 1.0),
                seating: RigidTransform::identity(),
                sliding: RigidTransform::identity(),
            })
            .collect();
        StudySpec {
            arch: ArchSpec {
                grid_spacing: 0.5,
                ..ArchSpec::default()
            },
            params: SplintParams {
                resolution: 0.2,
                cutting_plane: Plane::new(Vector3::z(), CUT_HEIGHT).expect("unit normal"),
                ..SplintParams::default()
            },
            noise,
            seed,
            cases,
        }
    }

    /// Gives case `index` a seating error: a translation of `mm` along a random
    /// direction in the occlusal plane plus a small tilt.
    pub fn with_seating_offset(mut self, index: usize, mm: f64) -> StudySpec {
        let mut rng = stream(self.seed, 1000 + index as u64);
        let phi = rand::Rng::gen_range(&mut rng, 0.0..std::f64::consts::TAU);
        let t = Vector3::new(phi.cos(), phi.sin(), 0.0) * mm;
        self.cases[index].seating = RigidTransform::from_rotation_vector(&Vector3::new(0.0, 0.25f64.to_radians(), 0.0), t);
        self
    }

    pub fn parse(text: &str) -> Result<StudySpec, SynthError> {
        let s: StudySpec = toml::from_str(text).map_err(|e| SynthError::InvalidSpec(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("study spec serializes")
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        self.arch.validate()?;
        check_sigma(self.noise)?;
        self.params.validate()?;
        if self.cases.is_empty() {
            return Err(SynthError::InvalidSpec("a study needs at least one case".into()));
        }
        let mut names: Vec<&str> = self.cases.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) || names.iter().any(|n| n.is_empty()) {
            return Err(SynthError::InvalidSpec("case names must be unique and non-empty".into()));
        }
        Ok(())
    }
}

/// Frames and the exact transforms each corrective stage should report.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    pub t_th: RigidTransform,
    pub seating: RigidTransform,
    pub sliding: RigidTransform,
    /// Frame of the upper and lower scans taken with the splint in place.
    pub scan_frame: RigidTransform,
    /// Frame of the stand-alone splint scan.
    pub splint_scan_frame: RigidTransform,
    pub mandible_scan_frame: RigidTransform,
    pub maxillary_clearance: RigidTransform,
    pub mandibular_sliding: RigidTransform,
    pub final_transformation: RigidTransform,
}

impl GroundTruth {
    fn rows(&self) -> [(&'static str, &RigidTransform); 9] {
        [
            ("t_th", &self.t_th),
            ("seating", &self.seating),
            ("sliding", &self.sliding),
            ("scan_frame", &self.scan_frame),
            ("splint_scan_frame", &self.splint_scan_frame),
            ("mandible_scan_frame", &self.mandible_scan_frame),
            ("maxillary-clearance", &self.maxillary_clearance),
            ("mandibular-sliding", &self.mandibular_sliding),
            ("final-transformation", &self.final_transformation),
        ]
    }
}

#[derive(Clone, Debug)]
pub struct StudyCase {
    pub inputs: CaseInputs,
    pub splint: SplintModel,
    pub truth: GroundTruth,
}

#[derive(Clone, Debug)]
pub struct Study {
    pub spec: StudySpec,
    pub arch: ArchPair,
    pub cases: Vec<StudyCase>,
}

impl Study {
    pub fn inputs(&self) -> Vec<CaseInputs> {
        self.cases.iter().map(|c| c.inputs.clone()).collect()
    }

    /// One row per case and quantity: rotation, translation and the 3×4 matrix.
    pub fn ledger_csv(&self) -> String {
        let rows: Vec<(&str, &str, &RigidTransform)> = self
            .cases
            .iter()
            .flat_map(|c| c.truth.rows().map(|(q, t)| (c.inputs.name.as_str(), q, t)))
            .collect();
        ledger_csv(&rows)
    }
}

/// Builds every splint and simulates its scans. Cases are generated in parallel;
/// the result does not depend on the thread count.
pub fn make_study(spec: &StudySpec) -> Result<Study, SynthError> {
    spec.validate()?;
    let arch = make_arch_pair(&spec.arch)?;
    let cases = spec
        .cases
        .par_iter()
        .enumerate()
        .map(|(k, c)| make_case(spec, &arch, k as u64, c))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Study {
        spec: spec.clone(),
        arch,
        cases,
    })
}

fn make_case(spec: &StudySpec, arch: &ArchPair, k: u64, c: &StudyCaseSpec) -> Result<StudyCase, SynthError> {
    let mut design = DesignCase::new(arch.maxilla.clone(), arch.mandible.clone(), c.t_th);
    design.occlusal = Some(arch.occlusal.clone());
    let splint = build_splint(&design, &spec.params)?;
    let s = &splint.mesh;

    let base = 16 * (k + 1);
    let mut frames = stream(spec.seed, base);
    let a = random_rigid(&mut frames, 30.0, 10.0);
    let p = random_rigid(&mut frames, 30.0, 10.0);
    let q = random_rigid(&mut frames, 30.0, 10.0);
    let noisy = |m: &TriangleMesh, t: &RigidTransform, i: u64| add_noise(&m.transformed(t), spec.noise, &mut stream(spec.seed, base + i));

    let mandible_pose = c.seating.compose(&c.sliding).compose(&c.t_th);
    let inputs = CaseInputs {
        name: c.name.clone(),
        splint: s.clone(),
        maxilla: arch.maxilla.clone(),
        mandible: arch.mandible.clone(),
        t_th: c.t_th,
        palate_mask: Some(arch.palate_mask.clone()),
        splint_scan: Some(noisy(s, &p, 1)),
        upper_maxilla_scan: Some(noisy(&arch.maxilla, &a, 2)),
        upper_splint_scan: Some(noisy(s, &a.compose(&c.seating), 3)),
        lower_scan: Some(noisy(&arch.mandible, &a.compose(&mandible_pose), 4)),
        mandible_scan: Some(noisy(&arch.mandible, &q, 5)),
    };
    let truth = GroundTruth {
        t_th: c.t_th,
        seating: c.seating,
        sliding: c.sliding,
        scan_frame: a,
        splint_scan_frame: p,
        mandible_scan_frame: q,
        maxillary_clearance: c.seating,
        mandibular_sliding: c.sliding.inverse(),
        final_transformation: c.seating.compose(&c.sliding).inverse(),
    };
    Ok(StudyCase { inputs, splint, truth })
}

/// Layout of a study directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    maxilla: String,
    mandible: String,
    #[serde(default)]
    palate_mask: Option<String>,
    cases: Vec<ManifestCase>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestCase {
    name: String,
    splint: String,
    t_th: String,
    #[serde(default)]
    mandible: Option<String>,
    #[serde(default)]
    scans: BTreeMap<String, String>,
}

pub const MANIFEST: &str = "study.toml";
const SCAN_KEYS: [&str; 5] = ["splint", "upper_maxilla", "upper_splint", "lower", "mandible"];

/// Writes the models, scans, transforms, palate mask, ledger and manifest.
/// Returns the written paths in a fixed order.
pub fn write_study(study: &Study, dir: &Path) -> Result<Vec<PathBuf>, SynthError> {
    std::fs::create_dir_all(dir).map_err(|e| MeshError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let mut out = Vec::new();
    let mesh = |m: &TriangleMesh, name: &str, out: &mut Vec<PathBuf>| -> Result<String, SynthError> {
        let p = dir.join(name);
        save_mesh(m, &p, MeshFormat::PlyBinary)?;
        out.push(p);
        Ok(name.to_string())
    };
    let maxilla = mesh(&study.arch.maxilla, "maxilla.ply", &mut out)?;
    let mandible = mesh(&study.arch.mandible, "mandible.ply", &mut out)?;
    mesh(&study.arch.occlusal, "occlusal.ply", &mut out)?;
    let mask: String = study.arch.palate_mask.iter().map(|t| format!("{t}\n")).collect();
    write_bytes(&dir.join("palate_mask.txt"), mask.as_bytes())?;
    out.push(dir.join("palate_mask.txt"));

    let mut cases = Vec::new();
    for c in &study.cases {
        let n = &c.inputs.name;
        let i = &c.inputs;
        let splint = mesh(&i.splint, &format!("case_{n}_splint.ply"), &mut out)?;
        let t_th = format!("case_{n}_t_th.toml");
        write_bytes(&dir.join(&t_th), TransformFile::new(i.t_th).to_toml().as_bytes())?;
        out.push(dir.join(&t_th));
        let mut scans = BTreeMap::new();
        let parts = [
            &i.splint_scan,
            &i.upper_maxilla_scan,
            &i.upper_splint_scan,
            &i.lower_scan,
            &i.mandible_scan,
        ];
        for (key, m) in SCAN_KEYS.iter().zip(parts) {
            if let Some(m) = m {
                scans.insert(key.to_string(), mesh(m, &format!("case_{n}_scan_{key}.ply"), &mut out)?);
            }
        }
        cases.push(ManifestCase {
            name: n.clone(),
            splint,
            t_th,
            mandible: None,
            scans,
        });
    }
    write_bytes(&dir.join("ground_truth.csv"), study.ledger_csv().as_bytes())?;
    out.push(dir.join("ground_truth.csv"));
    write_bytes(&dir.join("spec.toml"), study.spec.to_toml().as_bytes())?;
    out.push(dir.join("spec.toml"));
    let manifest = Manifest {
        maxilla,
        mandible,
        palate_mask: Some("palate_mask.txt".into()),
        cases,
    };
    let text = toml::to_string(&manifest).expect("manifest serializes");
    write_bytes(&dir.join(MANIFEST), text.as_bytes())?;
    out.push(dir.join(MANIFEST));
    Ok(out)
}

fn read_mask(path: &Path) -> Result<Vec<usize>, SynthError> {
    let text = String::from_utf8(read_bytes(path)?)
        .map_err(|_| SynthError::InvalidSpec(format!("{}: not UTF-8", path.display())))?;
    text.split_whitespace()
        .map(|w| {
            w.parse()
                .map_err(|_| SynthError::InvalidSpec(format!("{}: invalid triangle index '{w}'", path.display())))
        })
        .collect()
}

/// Loads the cases of a study directory written by [`write_study`] or by hand.
pub fn read_study(dir: &Path) -> Result<Vec<CaseInputs>, SynthError> {
    let mpath = dir.join(MANIFEST);
    let text = String::from_utf8(read_bytes(&mpath)?)
        .map_err(|_| SynthError::InvalidSpec(format!("{}: not UTF-8", mpath.display())))?;
    let manifest: Manifest =
        toml::from_str(&text).map_err(|e| SynthError::InvalidSpec(format!("{}: {e}", mpath.display())))?;
    let maxilla = load_mesh(dir.join(&manifest.maxilla))?;
    let mandible = load_mesh(dir.join(&manifest.mandible))?;
    let palate_mask = manifest.palate_mask.as_ref().map(|p| read_mask(&dir.join(p))).transpose()?;
    let mut out = Vec::new();
    for c in &manifest.cases {
        if let Some(k) = c.scans.keys().find(|k| !SCAN_KEYS.contains(&k.as_str())) {
            return Err(SynthError::InvalidSpec(format!("case {}: unknown scan '{k}'", c.name)));
        }
        let scan = |key: &str| c.scans.get(key).map(|f| load_mesh(dir.join(f))).transpose();
        let t_th = TransformFile::load(dir.join(&c.t_th))?.matrix;
        out.push(CaseInputs {
            name: c.name.clone(),
            splint: load_mesh(dir.join(&c.splint))?,
            maxilla: maxilla.clone(),
            mandible: match &c.mandible {
                Some(f) => load_mesh(dir.join(f))?,
                None => mandible.clone(),
            },
            t_th,
            palate_mask: palate_mask.clone(),
            splint_scan: scan("splint")?,
            upper_maxilla_scan: scan("upper_maxilla")?,
            upper_splint_scan: scan("upper_splint")?,
            lower_scan: scan("lower")?,
            mandible_scan: scan("mandible")?,
        });
    }
    Ok(out)
}
