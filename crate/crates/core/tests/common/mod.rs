#![allow(dead_code)]

use splintcad::builder::{DesignCase, SplintParams};
use splintcad::mesh::{Plane, Point3, RigidTransform, TriangleMesh, Vector3};
use splintcad::synth::{make_arch_pair, ArchPair, ArchSpec, CUT_HEIGHT};

/// Synthetic arch pair on a coarse grid, small enough for brute-force oracles.
pub fn arch(spacing: f64) -> ArchPair {
    make_arch_pair(&ArchSpec {
        grid_spacing: spacing,
        ..ArchSpec::default()
    })
    .expect("default arch is valid")
}

pub fn case(pair: &ArchPair, t_th: RigidTransform) -> DesignCase {
    let mut c = DesignCase::new(pair.maxilla.clone(), pair.mandible.clone(), t_th);
    c.occlusal = Some(pair.occlusal.clone());
    c
}

pub fn params(resolution: f64) -> SplintParams {
    SplintParams {
        resolution,
        cutting_plane: Plane::new(Vector3::z(), CUT_HEIGHT).unwrap(),
        ..SplintParams::default()
    }
}

pub fn translation(x: f64, y: f64, z: f64) -> RigidTransform {
    RigidTransform::from_translation(Vector3::new(x, y, z))
}

/// Flat square patch `[-s/2, s/2]²` at height `z`, facing +z.
pub fn square(s: f64, n: usize, z: f64) -> TriangleMesh {
    splintcad::mesh::flat_plate(s, s, n, n, z).transformed(&translation(-s / 2.0, -s / 2.0, 0.0))
}

pub fn max_vertex_gap(a: &TriangleMesh, b: &TriangleMesh) -> f64 {
    assert_eq!(a.vertex_count(), b.vertex_count());
    a.vertices()
        .iter()
        .zip(b.vertices())
        .map(|(p, q): (&Point3, &Point3)| (p - q).norm())
        .fold(0.0, f64::max)
}

/// A study small enough to analyze in a few seconds per case.
pub fn small_study(n: usize, noise: f64, seed: u64) -> splintcad::synth::StudySpec {
    let mut s = splintcad::synth::StudySpec::standard(n, noise, seed);
    s.arch.grid_spacing = 0.8;
    s.params.resolution = 0.3;
    s
}

pub fn data(name: &str) -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// The `Weighted mean` and `Pooled STD` values printed under a typed table.
pub fn printed_totals(text: &str) -> (f64, f64) {
    let field = |label: &str, col: usize| -> f64 {
        let line = text.lines().find(|l| l.starts_with(label)).expect(label);
        line.split(',').nth(col).unwrap().parse().unwrap()
    };
    (field("Weighted mean", 2), field("Pooled STD", 3))
}

pub const TABLES: [&str; 6] = [
    "splint_reproduction.csv",
    "maxilla_reproduction.csv",
    "mandible_reproduction.csv",
    "maxillary_clearance.csv",
    "mandibular_sliding.csv",
    "final_transformation.csv",
];
