//! Runs the six-stage accuracy analysis on a small synthetic study and exports the
//! tables, distance maps and profiles.

use splintcad::accuracy::{analyze_study, export_report, extract_profiles, write_stage_csv, PipelineOptions, StageKind};
use splintcad::mesh::{Plane, Vector3};
use splintcad::synth::{make_study, StudySpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = StudySpec::standard(3, 0.05, 1).with_seating_offset(2, 0.3);
    spec.arch.grid_spacing = 0.8;
    spec.params.resolution = 0.3;
    let study = make_study(&spec)?;
    let report = analyze_study(&study.inputs(), &PipelineOptions::default())?;
    for kind in StageKind::ALL {
        println!("{kind}\n{}", write_stage_csv(report.table(kind)));
    }
    let first = &study.cases[0].inputs;
    let plane = Plane::new(Vector3::x(), 0.0)?;
    let lower = first.mandible.transformed(&first.t_th);
    let profile = extract_profiles(
        &[("splint", &first.splint), ("maxilla", &first.maxilla), ("mandible", &lower)],
        &plane,
    );
    let dir = std::env::temp_dir().join("splintcad_report");
    let files = export_report(&report, &[profile], &dir)?;
    println!("{} files written to {}", files.len(), dir.display());
    Ok(())
}
