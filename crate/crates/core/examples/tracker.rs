//! Estimates the therapeutic transform from a bow-tracker recording and checks the
//! conjugated motion against stepwise mapping.

use splintcad::registration::{decompose_error, estimate_tth_from_tracker, map_stepwise, IcpParams};
use splintcad::synth::{hinge_opening, make_tracker_scenario, ArchSpec, ScenarioSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec {
        arch: ArchSpec {
            grid_spacing: 0.8,
            ..ArchSpec::default()
        },
        t_true: hinge_opening(4.0, 1.5),
        noise: 0.02,
        seed: 5,
        ..ScenarioSpec::default()
    };
    let s = make_tracker_scenario(&spec)?;
    let est = estimate_tth_from_tracker(&s.record, &s.l0, &IcpParams::default())?;
    let (deg, mm) = decompose_error(&est.t_th.compose(&s.t_th.inverse()));
    println!("bow fit rms {:.4} mm; error {deg:.4} deg, {mm:.4} mm", est.bow.rms);

    let pts = &s.l0.vertices()[..5];
    let stepwise = map_stepwise(pts, &est.t, &est.t_b);
    for (p, q) in pts.iter().zip(&stepwise) {
        println!("moved {:.4} mm, conjugation gap {:.1e} mm", (q - p).norm(), (est.t_th.apply_point(p) - q).norm());
    }
    Ok(())
}
