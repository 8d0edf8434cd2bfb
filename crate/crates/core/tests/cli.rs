mod common;

use std::path::Path;
use std::process::{Command, Output};

use splintcad::mesh::{icosphere, save_mesh, MeshFormat, Point3, RigidTransform};
use splintcad::registration::TransformFile;

const COARSE: &str = "[scenario]\nseed = 3\n[scenario.arch]\ngrid_spacing = 0.8\n";

fn splintcad(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splintcad"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scenario(dir: &Path) {
    std::fs::write(dir.join("spec.toml"), COARSE).unwrap();
    let o = splintcad(dir, &["synth", "spec.toml", "-o", "s"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn estimate_and_build_succeed() {
    let d = tempfile::tempdir().unwrap();
    scenario(d.path());
    let o = splintcad(
        d.path(),
        &["estimate", "--mode", "scans", "--mi", "s/maxilla.ply", "s/mandible.ply", "--tp", "s/u1.ply", "s/l1.ply", "-o", "est/t.toml"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let est = TransformFile::load(d.path().join("est/t.toml")).unwrap().matrix;
    let truth = TransformFile::load(d.path().join("s/t_true.toml")).unwrap().matrix;
    assert!(est.max_abs_diff(&truth) < 1e-4);
    assert!(d.path().join("est/t.diagnostics.csv").exists());

    let o = splintcad(
        d.path(),
        &["estimate", "--mode", "tracker", "--bow", "s/bow_b0.xyz", "s/bow_b1.xyz", "--t-f", "s/t_f.toml", "--t-d", "s/t_d.toml", "--mandible", "s/mandible.ply", "-o", "tr.toml"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let tr = TransformFile::load(d.path().join("tr.toml")).unwrap().matrix;
    assert!(tr.max_abs_diff(&truth) < 1e-4);

    let o = splintcad(d.path(), &["build", "s/case.toml", "-o", "out", "--set", "resolution=0.3", "--format", "ply"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("feasible: true"));
    for f in ["splint.ply", "feasibility.txt", "provenance.toml"] {
        assert!(d.path().join("out").join(f).exists(), "{f}");
    }
}

#[test]
fn input_errors_exit_with_one() {
    let d = tempfile::tempdir().unwrap();
    let o = splintcad(d.path(), &["build", "nope.toml"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.toml"));
    assert_eq!(code(&splintcad(d.path(), &["frobnicate"])), 1);
    assert_eq!(code(&splintcad(d.path(), &["--help"])), 0);
    assert_eq!(code(&splintcad(d.path(), &["synth", "--outlier", "x"])), 1);

    scenario(d.path());
    let o = splintcad(d.path(), &["build", "s/case.toml", "--set", "no_such_key=1"]);
    assert_eq!(code(&o), 1);
    let o = splintcad(d.path(), &["build", "s/case.toml", "--set", "wall_thickness=0.1", "--set", "resolution=0.3"]);
    assert_eq!(code(&o), 1);

    let o = Command::new(env!("CARGO_BIN_EXE_splintcad"))
        .current_dir(d.path())
        .env("SPLINT_THREADS", "many")
        .args(["synth", "spec.toml", "-o", "t"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn registration_failure_exits_with_two() {
    let d = tempfile::tempdir().unwrap();
    scenario(d.path());
    save_mesh(&icosphere(&Point3::new(0.0, 20.0, 0.0), 15.0, 3), d.path().join("ball.ply"), MeshFormat::PlyBinary).unwrap();
    let o = splintcad(
        d.path(),
        &["estimate", "--mode", "scans", "--mi", "s/maxilla.ply", "s/mandible.ply", "--tp", "ball.ply", "s/l1.ply", "--icp", "max_residual=0.2", "--icp", "rejection_distance=50.0"],
    );
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn infeasible_and_failed_builds() {
    let d = tempfile::tempdir().unwrap();
    scenario(d.path());
    TransformFile::new(RigidTransform::identity()).save(d.path().join("s/t_true.toml")).unwrap();
    let o = splintcad(d.path(), &["build", "s/case.toml", "-o", "inf", "--set", "resolution=0.3"]);
    assert_eq!(code(&o), 3);
    let report = std::fs::read_to_string(d.path().join("inf/feasibility.txt")).unwrap();
    assert!(report.contains("feasible: false") && report.contains("clearance"), "{report}");

    // forcing the closed bite leaves the apertures stage nothing to work with
    let o = splintcad(d.path(), &["build", "s/case.toml", "-o", "forced", "--set", "resolution=0.3", "--override-feasibility"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("apertures"));
}

#[test]
fn synth_output_is_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("spec.toml"), COARSE).unwrap();
    for (out, threads) in [("a", "1"), ("b", "2")] {
        let o = Command::new(env!("CARGO_BIN_EXE_splintcad"))
            .current_dir(d.path())
            .env("SPLINT_THREADS", threads)
            .args(["synth", "spec.toml", "--noise", "0.05", "-o", out])
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
    }
    let mut names: Vec<_> = std::fs::read_dir(d.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 12);
    for n in names {
        let a = std::fs::read(d.path().join("a").join(&n)).unwrap();
        let b = std::fs::read(d.path().join("b").join(&n)).unwrap();
        assert!(a == b, "{n:?} differs");
    }
}

#[test]
fn typed_tables_are_aggregated() {
    let d = tempfile::tempdir().unwrap();
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    let table = data.join("mandible_reproduction.csv");
    let o = splintcad(d.path(), &["analyze", "--table", table.to_str().unwrap(), "-o", "agg"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    assert!(out.contains("Total N,1267491"), "{out}");
    assert!(out.contains("Weighted mean,,0.0209"), "{out}");
    assert!(out.contains("Pooled STD,,,0.127"), "{out}");
    assert!(d.path().join("agg/mandible_reproduction.csv").exists());

    std::fs::write(d.path().join("bad.csv"), "splint,N\n").unwrap();
    assert_eq!(code(&splintcad(d.path(), &["analyze", "--table", "bad.csv"])), 1);
}
