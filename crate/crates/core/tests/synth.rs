mod common;

use common::small_study;
use splintcad::accuracy::{stage_pipeline, PipelineOptions, StageKind};
use splintcad::mesh::{euler_characteristic, is_watertight, min_distance_between, IndexedMesh};
use splintcad::registration::decompose_error;
use splintcad::synth::{
    make_arch_pair, make_study, read_study, write_scenario, write_study, ArchSpec, ScenarioSpec, StudySpec, SynthError,
};

fn coarse(spec: ArchSpec) -> ArchSpec {
    ArchSpec {
        grid_spacing: 0.8,
        ..spec
    }
}

#[test]
fn arch_pair_is_deterministic_closed_and_separated_by_the_gap() {
    let spec = coarse(ArchSpec::default());
    let a = make_arch_pair(&spec).unwrap();
    let b = make_arch_pair(&spec).unwrap();
    assert_eq!(a.maxilla, b.maxilla);
    assert_eq!(a.mandible, b.mandible);
    for m in [&a.maxilla, &a.mandible] {
        assert!(is_watertight(m));
        assert_eq!(euler_characteristic(m), 2);
        assert!(m.volume() > 0.0);
    }
    let (d, _, _) = min_distance_between(&IndexedMesh::new(a.maxilla.clone()), &IndexedMesh::new(a.mandible.clone())).unwrap();
    assert!(d > 0.0 && d <= spec.gap + 1e-9, "{d}");

    let other = make_arch_pair(&ArchSpec { seed: 2, ..spec.clone() }).unwrap();
    assert_ne!(other.maxilla, a.maxilla);
}

#[test]
fn more_teeth_means_more_surface() {
    let area = |n: usize| {
        make_arch_pair(&coarse(ArchSpec {
            tooth_count: n,
            cusp_jitter: 0.0,
            ..ArchSpec::default()
        }))
        .unwrap()
        .occlusal
        .surface_area()
    };
    let (a, b, c) = (area(8), area(12), area(16));
    assert!(a < b && b < c, "{a} {b} {c}");
}

#[test]
fn invalid_specs_are_rejected() {
    let bad = [
        ArchSpec { tooth_count: 2, ..ArchSpec::default() },
        ArchSpec { width: -1.0, ..ArchSpec::default() },
        ArchSpec { gap: 5.0, ..ArchSpec::default() },
        ArchSpec { cusp_jitter: 1.5, ..ArchSpec::default() },
    ];
    for s in bad {
        assert!(matches!(make_arch_pair(&s), Err(SynthError::InvalidSpec(_))), "{s:?}");
    }
    let mut study = small_study(2, 0.0, 1);
    study.cases[1].name = study.cases[0].name.clone();
    assert!(matches!(make_study(&study), Err(SynthError::InvalidSpec(_))));
    let noisy = StudySpec { noise: -0.1, ..small_study(1, 0.0, 1) };
    assert!(make_study(&noisy).is_err());
    assert!(StudySpec::parse("[arch]\nwidht = 3\n").is_err());
}

#[test]
fn study_spec_survives_toml() {
    let s = small_study(3, 0.05, 9).with_seating_offset(1, 0.3);
    assert_eq!(StudySpec::parse(&s.to_toml()).unwrap(), s);
}

#[test]
fn scenario_files_are_byte_identical_across_runs() {
    let spec = ScenarioSpec {
        arch: coarse(ArchSpec::default()),
        noise: 0.05,
        ..ScenarioSpec::default()
    };
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let f1 = write_scenario(&spec, d1.path()).unwrap();
    let f2 = write_scenario(&spec, d2.path()).unwrap();
    assert_eq!(f1.len(), f2.len());
    for (a, b) in f1.iter().zip(&f2) {
        assert_eq!(a.file_name(), b.file_name());
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap(), "{}", a.display());
    }
}

#[test]
fn ledger_matches_a_zero_noise_analysis() {
    let spec = small_study(1, 0.0, 3).with_seating_offset(0, 0.3);
    let study = make_study(&spec).unwrap();
    let case = &study.cases[0];
    let r = stage_pipeline(&case.inputs, &PipelineOptions::default());
    let truth = [
        (StageKind::MaxillaryClearance, &case.truth.maxillary_clearance),
        (StageKind::MandibularSliding, &case.truth.mandibular_sliding),
        (StageKind::FinalTransformation, &case.truth.final_transformation),
    ];
    for (kind, t) in truth {
        let fit = r.get(kind).corrective().unwrap_or_else(|| panic!("{kind}: {:?}", r.get(kind)));
        let (a, d) = decompose_error(t);
        assert!((fit.alpha_deg - a).abs() < 1e-6 && (fit.t_mm - d).abs() < 1e-6, "{kind}: {} {} vs {a} {d}", fit.alpha_deg, fit.t_mm);
        assert!(fit.transform.max_abs_diff(t) < 1e-6, "{kind}");
    }
    assert!(case.truth.maxillary_clearance.translation().norm() > 0.25);
}

#[test]
fn study_round_trips_through_its_directory() {
    let study = make_study(&small_study(2, 0.02, 8)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = write_study(&study, dir.path()).unwrap();
    assert!(files.iter().any(|f| f.ends_with("ground_truth.csv")));
    let ledger = std::fs::read_to_string(dir.path().join("ground_truth.csv")).unwrap();
    assert_eq!(ledger, study.ledger_csv());
    assert_eq!(ledger.lines().count(), 1 + 2 * 9);
    let back = read_study(dir.path()).unwrap();
    assert_eq!(back.len(), 2);
    for (a, b) in back.iter().zip(study.inputs()) {
        assert_eq!(a.name, b.name);
        assert_eq!(a.splint.triangle_count(), b.splint.triangle_count());
        assert_eq!(a.palate_mask, b.palate_mask);
        let (la, lb) = (a.lower_scan.as_ref().unwrap(), b.lower_scan.as_ref().unwrap());
        // loading renumbers vertices in first-use order; the triangles stay put
        assert_eq!(la.triangle_count(), lb.triangle_count());
        for t in 0..la.triangle_count() {
            assert_eq!(la.triangle(t), lb.triangle(t));
        }
        assert!(a.t_th.max_abs_diff(&b.t_th) == 0.0);
    }
}
