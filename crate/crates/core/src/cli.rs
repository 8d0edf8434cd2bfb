//! Command-line front end: `estimate`, `build`, `analyze` and `synth`.
//!
//! Exit codes: 0 success, 1 input error, 2 registration failure, 3 infeasible
//! transform, 4 failure in a construction stage. `SPLINT_THREADS` sets the
//! worker-thread count.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::accuracy::{
    aggregate, analyze_study, export_report, extract_profiles, format_table, parse_table_csv, AccuracyError,
    ChainOrder, PipelineOptions, ProfileSection, StageKind, TableRow,
};
use crate::builder::{build_splint, load_case, BuildError, SplintParams};
use crate::mesh::{
    load_mesh, load_points, save_mesh, write_bytes, MeshError, MeshFormat, Plane, TriangleMesh, Vector3,
};
use crate::registration::{
    decompose_error, estimate_tth_from_scans, estimate_tth_from_tracker, IcpParams, RegistrationError, ScanPairSet,
    TrackerRecord, TransformFile,
};
use crate::synth::{make_study, read_study, write_scenario, write_study, ScenarioSpec, StudySpec, SynthError};

pub const THREADS_VAR: &str = "SPLINT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "splintcad", version, about = "Positioning-splint design and accuracy analysis")]
pub struct RunConfig {
    /// Print timings and extra diagnostics to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the therapeutic transform from scans or a tracked bow.
    Estimate(EstimateArgs),
    /// Check feasibility and build a splint from a case file.
    Build(BuildArgs),
    /// Run the six-stage accuracy analysis on a study, or aggregate typed tables.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic scenario or study.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimateMode {
    Scans,
    Tracker,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, value_enum)]
    pub mode: EstimateMode,
    /// Upper and lower arch in maximum intercuspation.
    #[arg(long, num_args = 2, value_names = ["U0", "L0"])]
    pub mi: Vec<PathBuf>,
    /// Upper and lower arch in the therapeutic position.
    #[arg(long, num_args = 2, value_names = ["U1", "L1"])]
    pub tp: Vec<PathBuf>,
    /// Bow point clouds before and after the motion (`.xyz` or a mesh).
    #[arg(long, num_args = 2, value_names = ["B0", "B1"])]
    pub bow: Vec<PathBuf>,
    /// Face-scanner calibration (identity when omitted).
    #[arg(long)]
    pub t_f: Option<PathBuf>,
    /// Dental-model calibration (identity when omitted).
    #[arg(long)]
    pub t_d: Option<PathBuf>,
    /// MI mandible, carried into the therapeutic position in tracker mode.
    #[arg(long)]
    pub mandible: Option<PathBuf>,
    #[arg(short, long, default_value = "t_th.toml")]
    pub output: PathBuf,
    /// ICP parameter override, e.g. `--icp max_iterations=200`.
    #[arg(long = "icp", value_name = "KEY=VALUE")]
    pub icp: Vec<String>,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    pub case: PathBuf,
    #[arg(short, long, default_value = "splint_out")]
    pub output: PathBuf,
    /// Splint parameter override, e.g. `--set resolution=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Build even when a feasibility constraint fails; failures become warnings.
    #[arg(long)]
    pub override_feasibility: bool,
    #[arg(long, value_enum, default_value = "stl")]
    pub format: OutFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Stl,
    Ply,
    Obj,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Chain {
    RcsFirst,
    SplintFirst,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Study directory containing `study.toml`.
    pub study: Option<PathBuf>,
    #[arg(short, long, default_value = "report")]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "rcs-first")]
    pub chain: Chain,
    /// Section plane `nx,ny,nz,offset`; repeat for several profiles.
    #[arg(long, value_name = "NX,NY,NZ,D", allow_hyphen_values = true)]
    pub profile: Vec<String>,
    /// Aggregate typed table CSVs instead of analyzing a study.
    #[arg(long, value_name = "CSV")]
    pub table: Vec<PathBuf>,
    /// ICP parameter override for scan registration.
    #[arg(long = "icp", value_name = "KEY=VALUE")]
    pub icp: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// TOML file with a `[scenario]` or a `[study]` table.
    pub spec: Option<PathBuf>,
    #[arg(short, long, default_value = "synth_out")]
    pub output: PathBuf,
    /// Generate a study with this many cases.
    #[arg(long)]
    pub cases: Option<usize>,
    /// Scan noise [mm].
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Seating offset for one study case, `CASE:MM` (cases count from 1).
    #[arg(long, value_name = "CASE:MM")]
    pub outlier: Vec<String>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<RegistrationError> for CliError {
    fn from(e: RegistrationError) -> Self {
        let code = match e {
            RegistrationError::Mesh(_) | RegistrationError::InvalidParams(_) => 1,
            _ => 2,
        };
        CliError {
            code,
            message: format!("registration failed: {e}"),
        }
    }
}

impl From<BuildError> for CliError {
    fn from(e: BuildError) -> Self {
        match e {
            BuildError::Infeasible(r) => CliError {
                code: 3,
                message: format!("infeasible transform (failed: {})\n{r}", r.failed_names().join(", ")),
            },
            BuildError::Stage { stage, message } => CliError {
                code: 4,
                message: format!("build failed in stage {stage}: {message}"),
            },
            other => CliError::input(other.to_string()),
        }
    }
}

impl From<AccuracyError> for CliError {
    fn from(e: AccuracyError) -> Self {
        match e {
            AccuracyError::Registration(r) => r.into(),
            other => CliError::input(other.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Build(b) => b.into(),
            other => CliError::input(other.to_string()),
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cfg) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn thread_count() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::input(format!("{THREADS_VAR} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(None),
    }
}

pub fn execute(cfg: &RunConfig) -> Result<(), CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count()? {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::input(format!("thread pool: {e}")))?;
    let started = Instant::now();
    let r = pool.install(|| match &cfg.command {
        Command::Estimate(a) => cmd_estimate(a),
        Command::Build(a) => cmd_build(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Synth(a) => cmd_synth(a),
    });
    if cfg.verbose > 0 {
        eprintln!(
            "{} thread(s), {:.2} s",
            pool.current_num_threads(),
            started.elapsed().as_secs_f64()
        );
    }
    r
}

/// Applies `key=value` overrides to a serializable parameter struct; values are
/// parsed as TOML and type-checked by deserializing the result.
pub fn apply_overrides<T: Serialize + DeserializeOwned>(base: &T, overrides: &[String]) -> Result<T, CliError> {
    let mut table = toml::Value::try_from(base).map_err(|e| CliError::input(e.to_string()))?;
    for o in overrides {
        let Some((key, value)) = o.split_once('=') else {
            return Err(CliError::input(format!("override '{o}' is not KEY=VALUE")));
        };
        let key = key.trim();
        let parsed: toml::Value = format!("v = {}", value.trim())
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(value.trim().to_string()));
        let toml::Value::Table(t) = &mut table else { unreachable!() };
        if !t.contains_key(key) && key != "initial" {
            return Err(CliError::input(format!("unknown parameter '{key}'")));
        }
        t.insert(key.to_string(), parsed);
    }
    table
        .try_into()
        .map_err(|e: toml::de::Error| CliError::input(format!("invalid override: {}", e.message())))
}

fn num(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

fn load_cloud(path: &Path) -> Result<TriangleMesh, CliError> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    if matches!(ext.as_str(), "xyz" | "txt" | "csv") {
        Ok(TriangleMesh::from_points(load_points(path)?))
    } else {
        Ok(load_mesh(path)?)
    }
}

fn load_transform(path: &Option<PathBuf>) -> Result<crate::mesh::RigidTransform, CliError> {
    match path {
        Some(p) => Ok(TransformFile::load(p)?.matrix),
        None => Ok(crate::mesh::RigidTransform::identity()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    Ok(write_bytes(path, text.as_bytes())?)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::input(format!("cannot create {}: {e}", dir.display())))
}

pub fn cmd_estimate(a: &EstimateArgs) -> Result<(), CliError> {
    let icp = apply_overrides(&IcpParams::default(), &a.icp)?;
    if let Some(parent) = a.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let mut diag = String::from("quantity,value\n");
    let mut out = TransformFile::new(crate::mesh::RigidTransform::identity());
    out.from = "MI".into();
    out.to = "TP".into();
    match a.mode {
        EstimateMode::Scans => {
            if a.mi.len() != 2 || a.tp.len() != 2 {
                return Err(CliError::input("scans mode needs --mi U0 L0 and --tp U1 L1"));
            }
            let scans = ScanPairSet {
                u0: load_mesh(&a.mi[0])?,
                l0: load_mesh(&a.mi[1])?,
                u1: load_mesh(&a.tp[0])?,
                l1: load_mesh(&a.tp[1])?,
            };
            let (t, t_th, d) = estimate_tth_from_scans(&scans, &icp)?;
            let (ta, tt) = decompose_error(&t);
            let (a_deg, t_mm) = decompose_error(&t_th);
            for (k, v) in [
                ("upper_rms_mm", d.upper.rms),
                ("upper_iterations", d.upper.iterations as f64),
                ("lower_rms_mm", d.lower.rms),
                ("lower_iterations", d.lower.iterations as f64),
                ("measurement_alpha_deg", ta),
                ("measurement_t_mm", tt),
                ("t_th_alpha_deg", a_deg),
                ("t_th_t_mm", t_mm),
            ] {
                diag.push_str(&format!("{k},{}\n", num(v)));
            }
            out.matrix = t_th;
            let mut mf = TransformFile::new(t);
            mf.from = "MCS".into();
            mf.to = "RCS".into();
            write_text(&a.output.with_extension("mcs_to_rcs.toml"), &mf.to_toml())?;
        }
        EstimateMode::Tracker => {
            if a.bow.len() != 2 {
                return Err(CliError::input("tracker mode needs --bow B0 B1"));
            }
            let Some(mandible) = &a.mandible else {
                return Err(CliError::input("tracker mode needs --mandible L0"));
            };
            let rec = TrackerRecord {
                b0: load_cloud(&a.bow[0])?,
                b1: load_cloud(&a.bow[1])?,
                t_f: load_transform(&a.t_f)?,
                t_d: load_transform(&a.t_d)?,
            };
            let l0 = load_mesh(mandible)?;
            let est = estimate_tth_from_tracker(&rec, &l0, &icp)?;
            let (ba, bt) = decompose_error(&est.t_b);
            let (a_deg, t_mm) = decompose_error(&est.t_th);
            for (k, v) in [
                ("bow_rms_mm", est.bow.rms),
                ("bow_iterations", est.bow.iterations as f64),
                ("bow_alpha_deg", ba),
                ("bow_t_mm", bt),
                ("t_th_alpha_deg", a_deg),
                ("t_th_t_mm", t_mm),
            ] {
                diag.push_str(&format!("{k},{}\n", num(v)));
            }
            out.matrix = est.t_th;
            save_mesh(&est.l1, a.output.with_extension("l1.ply"), MeshFormat::PlyBinary)?;
        }
    }
    write_text(&a.output, &out.to_toml())?;
    write_text(&a.output.with_extension("diagnostics.csv"), &diag)?;
    print!("{diag}");
    println!("wrote {}", a.output.display());
    Ok(())
}

pub fn cmd_build(a: &BuildArgs) -> Result<(), CliError> {
    let (case, file_params) = load_case(&a.case)?;
    let mut params: SplintParams = apply_overrides(&file_params, &a.set)?;
    params.override_feasibility |= a.override_feasibility;
    create_dir(&a.output)?;
    let model = match build_splint(&case, &params) {
        Err(BuildError::Infeasible(r)) => {
            write_text(&a.output.join("feasibility.txt"), &r.to_string())?;
            return Err(BuildError::Infeasible(r).into());
        }
        r => r?,
    };
    let (name, format) = match a.format {
        OutFormat::Stl => ("splint.stl", MeshFormat::StlBinary),
        OutFormat::Ply => ("splint.ply", MeshFormat::PlyBinary),
        OutFormat::Obj => ("splint.obj", MeshFormat::Obj),
    };
    save_mesh(&model.mesh, a.output.join(name), format)?;
    write_text(&a.output.join("feasibility.txt"), &model.feasibility.to_string())?;
    if let Some(p) = &model.provenance {
        let text = toml::to_string(p).map_err(|e| CliError::input(e.to_string()))?;
        write_text(&a.output.join("provenance.toml"), &text)?;
        for w in &p.warnings {
            eprintln!("warning: {w}");
        }
    }
    print!("{}", model.feasibility);
    println!(
        "splint: {} triangles, {} component(s), {} aperture(s), euler characteristic {}",
        model.mesh.triangle_count(),
        model.components,
        model.apertures.len(),
        model.euler_characteristic
    );
    println!("footprint_mm2,{}", num(model.footprint_area));
    println!("aperture_mm2,{}", num(model.aperture_area));
    println!("wrote {}", a.output.join(name).display());
    Ok(())
}

fn parse_plane(s: &str) -> Result<Plane, CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|w| w.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::input(format!("profile plane '{s}' is not NX,NY,NZ,D")))?;
    if v.len() != 4 {
        return Err(CliError::input(format!("profile plane '{s}' is not NX,NY,NZ,D")));
    }
    Ok(Plane::new(Vector3::new(v[0], v[1], v[2]), v[3])?)
}

fn aggregate_tables(a: &AnalyzeArgs) -> Result<(), CliError> {
    let mut written = false;
    for path in &a.table {
        let bytes = crate::mesh::read_bytes(path)?;
        let text = String::from_utf8(bytes).map_err(|_| CliError::input(format!("{}: not UTF-8", path.display())))?;
        let rows = parse_table_csv(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        if rows.is_empty() {
            return Err(CliError::input(format!("{}: no rows", path.display())));
        }
        let corrective = rows.iter().any(|r| r.alpha_deg.is_some());
        let summary = aggregate(&rows.iter().map(TableRow::stats).collect::<Vec<_>>())?;
        let out = format_table(&rows, corrective, Some(&summary));
        println!("# {}", path.display());
        print!("{out}");
        if a.output.is_dir() || a.output != Path::new("report") {
            create_dir(&a.output)?;
            let name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
            write_text(&a.output.join(name), &out)?;
            written = true;
        }
    }
    if written {
        println!("wrote {}", a.output.display());
    }
    Ok(())
}

pub fn cmd_analyze(a: &AnalyzeArgs) -> Result<(), CliError> {
    if !a.table.is_empty() {
        return aggregate_tables(a);
    }
    let Some(dir) = &a.study else {
        return Err(CliError::input("give a study directory or --table files"));
    };
    let planes = a.profile.iter().map(|s| parse_plane(s)).collect::<Result<Vec<_>, _>>()?;
    let cases = read_study(dir)?;
    if cases.is_empty() {
        return Err(CliError::input("empty study"));
    }
    let opts = PipelineOptions {
        icp: apply_overrides(&PipelineOptions::default().icp, &a.icp)?,
        chain: match a.chain {
            Chain::RcsFirst => ChainOrder::RcsFirst,
            Chain::SplintFirst => ChainOrder::SplintFirst,
        },
        ..PipelineOptions::default()
    };
    let report = analyze_study(&cases, &opts)?;
    let mut profiles: Vec<ProfileSection> = Vec::new();
    for plane in &planes {
        for c in &cases {
            let tp = c.mandible.transformed(&c.t_th);
            profiles.push(extract_profiles(
                &[("splint", &c.splint), ("maxilla", &c.maxilla), ("mandible", &tp)],
                plane,
            ));
        }
    }
    let written = export_report(&report, &profiles, &a.output)?;
    for kind in StageKind::ALL {
        let t = report.table(kind);
        match &t.summary {
            Some(s) => println!(
                "stage {} {}: N={} weighted mean={} pooled STD={}",
                kind.number(),
                kind,
                s.total_n,
                num(s.weighted_avg),
                num(s.pooled_std)
            ),
            None => println!("stage {} {}: no data", kind.number(), kind),
        }
    }
    for (case, stage, reason) in report.skipped() {
        eprintln!("skipped: case {case}, {stage}: {reason}");
    }
    println!("wrote {} files to {}", written.len(), a.output.display());
    Ok(())
}

#[derive(Debug, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct SynthFile {
    scenario: Option<ScenarioSpec>,
    study: Option<StudySpec>,
}

fn parse_outlier(s: &str) -> Result<(usize, f64), CliError> {
    let bad = || CliError::input(format!("outlier '{s}' is not CASE:MM"));
    let (c, mm) = s.split_once(':').ok_or_else(bad)?;
    let c: usize = c.trim().parse().map_err(|_| bad())?;
    let mm: f64 = mm.trim().parse().map_err(|_| bad())?;
    if c == 0 || !mm.is_finite() {
        return Err(bad());
    }
    Ok((c - 1, mm))
}

pub fn cmd_synth(a: &SynthArgs) -> Result<(), CliError> {
    let file = match &a.spec {
        Some(p) => {
            let bytes = crate::mesh::read_bytes(p)?;
            let text = String::from_utf8(bytes).map_err(|_| CliError::input(format!("{}: not UTF-8", p.display())))?;
            let f: SynthFile =
                toml::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", p.display())))?;
            if f.scenario.is_some() && f.study.is_some() {
                return Err(CliError::input("spec file may hold a [scenario] or a [study], not both"));
            }
            f
        }
        None => SynthFile {
            scenario: None,
            study: None,
        },
    };
    let written = if file.study.is_some() || a.cases.is_some() {
        let mut spec = file.study.unwrap_or_else(|| StudySpec::standard(a.cases.unwrap_or(8), 0.0, 1));
        if let Some(n) = a.cases {
            if n != spec.cases.len() {
                spec.cases = StudySpec::standard(n, 0.0, 1).cases;
            }
        }
        if let Some(s) = a.noise {
            spec.noise = s;
        }
        if let Some(s) = a.seed {
            spec.seed = s;
        }
        for o in &a.outlier {
            let (k, mm) = parse_outlier(o)?;
            if k >= spec.cases.len() {
                return Err(CliError::input(format!("outlier case {} does not exist", k + 1)));
            }
            spec = spec.with_seating_offset(k, mm);
        }
        spec.validate()?;
        let study = make_study(&spec)?;
        write_study(&study, &a.output)?
    } else {
        if !a.outlier.is_empty() {
            return Err(CliError::input("--outlier applies to studies (use --cases)"));
        }
        let mut spec = file.scenario.unwrap_or_default();
        if let Some(s) = a.noise {
            spec.noise = s;
        }
        if let Some(s) = a.seed {
            spec.seed = s;
        }
        write_scenario(&spec, &a.output)?
    };
    for p in &written {
        println!("{}", p.display());
    }
    Ok(())
}
