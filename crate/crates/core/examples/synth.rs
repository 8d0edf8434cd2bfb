//! Writes a synthetic design scenario and a small study to disk.

use splintcad::synth::{make_study, write_scenario, write_study, ArchSpec, ScenarioSpec, StudySpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::temp_dir().join("splintcad_synth");
    let scenario = ScenarioSpec {
        arch: ArchSpec {
            grid_spacing: 0.8,
            ..ArchSpec::default()
        },
        seed: 9,
        ..ScenarioSpec::default()
    };
    for f in write_scenario(&scenario, &root.join("scenario"))? {
        println!("{}", f.display());
    }
    let mut spec = StudySpec::standard(2, 0.05, 9);
    spec.arch.grid_spacing = 0.8;
    spec.params.resolution = 0.3;
    let files = write_study(&make_study(&spec)?, &root.join("study"))?;
    println!("study: {} files", files.len());
    print!("{}", spec.to_toml());
    Ok(())
}
