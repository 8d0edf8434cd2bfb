//! Estimates the therapeutic transform from a synthetic MI/therapeutic scan pair.

use splintcad::registration::{decompose_error, estimate_tth_from_scans, IcpParams};
use splintcad::synth::{hinge_opening, make_scan_pair_scenario, ArchSpec, ScenarioSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec {
        arch: ArchSpec {
            grid_spacing: 0.8,
            ..ArchSpec::default()
        },
        t_true: hinge_opening(3.0, 1.0),
        noise: 0.05,
        seed: 11,
        ..ScenarioSpec::default()
    };
    let scenario = make_scan_pair_scenario(&spec)?;
    let (_, t_th, diag) = estimate_tth_from_scans(&scenario.scans, &IcpParams::default())?;
    let (deg, mm) = decompose_error(&t_th.compose(&scenario.t_true.inverse()));
    println!("upper rms {:.4} mm, lower rms {:.4} mm", diag.upper.rms, diag.lower.rms);
    println!("error against ground truth: {deg:.4} deg, {mm:.4} mm");
    Ok(())
}
