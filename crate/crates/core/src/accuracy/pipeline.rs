//! The six-stage accuracy protocol for a study of splints.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    aggregate, deviation_map, fit_corrective, AccuracyError, CorrectiveFit, DeviationParams, DeviationStats,
    StudySummary,
};
use crate::mesh::{IndexedMesh, RigidTransform, TriangleMesh};
use crate::registration::{icp_align, IcpParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageKind {
    SplintReproduction,
    MaxillaReproduction,
    MandibleReproduction,
    MaxillaryClearance,
    MandibularSliding,
    FinalTransformation,
}

impl StageKind {
    pub const ALL: [StageKind; 6] = [
        StageKind::SplintReproduction,
        StageKind::MaxillaReproduction,
        StageKind::MandibleReproduction,
        StageKind::MaxillaryClearance,
        StageKind::MandibularSliding,
        StageKind::FinalTransformation,
    ];

    pub fn number(&self) -> usize {
        StageKind::ALL.iter().position(|s| s == self).unwrap() + 1
    }

    pub fn name(&self) -> &'static str {
        match self {
            StageKind::SplintReproduction => "splint-reproduction",
            StageKind::MaxillaReproduction => "maxilla-reproduction",
            StageKind::MandibleReproduction => "mandible-reproduction",
            StageKind::MaxillaryClearance => "maxillary-clearance",
            StageKind::MandibularSliding => "mandibular-sliding",
            StageKind::FinalTransformation => "final-transformation",
        }
    }

    /// Stages 4 to 6 report a corrective transform besides the deviation.
    pub fn is_corrective(&self) -> bool {
        matches!(
            self,
            StageKind::MaxillaryClearance | StageKind::MandibularSliding | StageKind::FinalTransformation
        )
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the upper scan taken with the splint in place is brought into the reference frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainOrder {
    /// Register the scanned maxilla to the reference maxilla directly.
    #[default]
    RcsFirst,
    /// Register the scanned splint to its digital model, then correct by the
    /// maxillary-clearance fit.
    SplintFirst,
}

/// Everything measured for one splint. Scans may be in any frame; missing scans
/// skip the stages that need them.
#[derive(Clone, Debug)]
pub struct CaseInputs {
    pub name: String,
    /// Digital splint model in the reference frame.
    pub splint: TriangleMesh,
    pub maxilla: TriangleMesh,
    /// Mandible in maximum intercuspation.
    pub mandible: TriangleMesh,
    pub t_th: RigidTransform,
    /// Palate triangles of the maxilla, shared by its scans.
    pub palate_mask: Option<Vec<usize>>,
    /// The printed splint scanned on its own.
    pub splint_scan: Option<TriangleMesh>,
    /// Upper scan with the splint in place: the maxilla part...
    pub upper_maxilla_scan: Option<TriangleMesh>,
    /// ...and the splint part, in the same frame.
    pub upper_splint_scan: Option<TriangleMesh>,
    /// Mandible scanned with the splint in place, in the frame of the upper scan.
    pub lower_scan: Option<TriangleMesh>,
    /// Separate mandible scan for stage 3; the lower scan is used when absent.
    pub mandible_scan: Option<TriangleMesh>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageOutcome {
    Deviation(DeviationStats),
    Corrective(CorrectiveFit),
    Skipped(String),
    Failed(String),
}

impl StageOutcome {
    /// The row statistics: the deviation, or the uncorrected deviation of a fit.
    pub fn stats(&self) -> Option<&DeviationStats> {
        match self {
            StageOutcome::Deviation(s) => Some(s),
            StageOutcome::Corrective(c) => Some(&c.before),
            _ => None,
        }
    }

    pub fn corrective(&self) -> Option<&CorrectiveFit> {
        match self {
            StageOutcome::Corrective(c) => Some(c),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    /// Registration of scans onto their reference models.
    pub icp: IcpParams,
    pub chain: ChainOrder,
    pub deviation: DeviationParams,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            icp: IcpParams {
                max_iterations: 200,
                convergence: 1e-10,
                max_points: 20_000,
                ..IcpParams::default()
            },
            chain: ChainOrder::RcsFirst,
            deviation: DeviationParams::default(),
        }
    }
}

/// Per-vertex signed errors of one registered scan.
#[derive(Clone, Debug)]
pub struct DistanceMap {
    pub stage: StageKind,
    pub mesh: TriangleMesh,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct CaseReport {
    pub name: String,
    pub chain: ChainOrder,
    /// One outcome per stage, in stage order.
    pub stages: Vec<StageOutcome>,
    pub maps: Vec<DistanceMap>,
}

impl CaseReport {
    pub fn get(&self, kind: StageKind) -> &StageOutcome {
        &self.stages[kind.number() - 1]
    }
}

fn register(scan: &TriangleMesh, reference: &IndexedMesh, icp: &IcpParams) -> Result<RigidTransform, AccuracyError> {
    Ok(icp_align(scan, reference, icp)?.transform)
}

fn reproduction(
    stage: StageKind,
    scan: Option<&TriangleMesh>,
    reference: &IndexedMesh,
    opts: &PipelineOptions,
    maps: &mut Vec<DistanceMap>,
) -> (StageOutcome, Option<RigidTransform>) {
    let Some(scan) = scan else {
        return (StageOutcome::Skipped("scan not supplied".into()), None);
    };
    let run = || -> Result<(RigidTransform, DeviationStats, DistanceMap), AccuracyError> {
        let g = register(scan, reference, &opts.icp)?;
        let moved = scan.transformed(&g);
        let m = deviation_map(&moved, reference, &opts.deviation)?;
        Ok((g, m.stats, DistanceMap { stage, mesh: moved, values: m.values }))
    };
    match run() {
        Ok((g, stats, map)) => {
            maps.push(map);
            (StageOutcome::Deviation(stats), Some(g))
        }
        Err(e) => (StageOutcome::Failed(e.to_string()), None),
    }
}

fn corrective(r: Result<CorrectiveFit, AccuracyError>) -> StageOutcome {
    match r {
        Ok(c) => StageOutcome::Corrective(c),
        Err(e) => StageOutcome::Failed(e.to_string()),
    }
}

/// Runs all six stages for one case. Missing inputs skip a stage; failures are
/// recorded per stage.
pub fn stage_pipeline(case: &CaseInputs, opts: &PipelineOptions) -> CaseReport {
    let splint = IndexedMesh::new(case.splint.clone());
    let maxilla = IndexedMesh::new(case.maxilla.clone());
    let mandible = IndexedMesh::new(case.mandible.clone());
    let target = IndexedMesh::new(case.mandible.transformed(&case.t_th));
    let mut maps = Vec::new();

    let (s1, _) = reproduction(StageKind::SplintReproduction, case.splint_scan.as_ref(), &splint, opts, &mut maps);
    let (s2, g_upper) = reproduction(
        StageKind::MaxillaReproduction,
        case.upper_maxilla_scan.as_ref(),
        &maxilla,
        opts,
        &mut maps,
    );
    let (s3, _) = reproduction(
        StageKind::MandibleReproduction,
        case.mandible_scan.as_ref().or(case.lower_scan.as_ref()),
        &mandible,
        opts,
        &mut maps,
    );

    // splint part of the upper scan onto the digital model: the splint frame
    let g_splint = case
        .upper_splint_scan
        .as_ref()
        .map(|s| register(s, &splint, &opts.icp).map_err(|e| e.to_string()));

    let s4 = match (&g_splint, &case.upper_maxilla_scan) {
        (Some(Ok(g)), Some(upper)) => corrective(fit_corrective(
            &upper.transformed(g),
            &maxilla,
            case.palate_mask.as_deref(),
        )),
        (Some(Err(e)), _) => StageOutcome::Failed(format!("splint registration: {e}")),
        _ => StageOutcome::Skipped("needs the upper scan with its splint part".into()),
    };
    let s5 = match (&g_splint, &case.lower_scan) {
        (Some(Ok(g)), Some(lower)) => corrective(fit_corrective(&lower.transformed(g), &target, None)),
        (Some(Err(e)), _) => StageOutcome::Failed(format!("splint registration: {e}")),
        _ => StageOutcome::Skipped("needs the splint part of the upper scan and the lower scan".into()),
    };
    let to_reference = match opts.chain {
        ChainOrder::RcsFirst => g_upper,
        ChainOrder::SplintFirst => match (&g_splint, s4.corrective()) {
            (Some(Ok(g)), Some(c)) => Some(c.transform.compose(g)),
            _ => None,
        },
    };
    let s6 = match (to_reference, &case.lower_scan) {
        (Some(g), Some(lower)) => corrective(fit_corrective(&lower.transformed(&g), &target, None)),
        (None, _) => StageOutcome::Skipped("upper scan could not be brought into the reference frame".into()),
        (_, None) => StageOutcome::Skipped("lower scan not supplied".into()),
    };

    CaseReport {
        name: case.name.clone(),
        chain: opts.chain,
        stages: vec![s1, s2, s3, s4, s5, s6],
        maps,
    }
}

/// One stage across all cases.
#[derive(Clone, Debug)]
pub struct StageTable {
    pub kind: StageKind,
    pub rows: Vec<(String, StageOutcome)>,
    /// Aggregate of every row that produced statistics.
    pub summary: Option<StudySummary>,
}

#[derive(Clone, Debug)]
pub struct StudyReport {
    pub chain: ChainOrder,
    pub cases: Vec<CaseReport>,
    pub tables: Vec<StageTable>,
}

impl StudyReport {
    pub fn table(&self, kind: StageKind) -> &StageTable {
        &self.tables[kind.number() - 1]
    }

    /// `(case, stage, reason)` for every stage that produced no numbers.
    pub fn skipped(&self) -> Vec<(String, StageKind, String)> {
        let mut out = Vec::new();
        for t in &self.tables {
            for (name, o) in &t.rows {
                match o {
                    StageOutcome::Skipped(r) | StageOutcome::Failed(r) => out.push((name.clone(), t.kind, r.clone())),
                    _ => {}
                }
            }
        }
        out
    }
}

/// Runs the pipeline over every case (in parallel) and aggregates each stage.
pub fn analyze_study(cases: &[CaseInputs], opts: &PipelineOptions) -> Result<StudyReport, AccuracyError> {
    if cases.is_empty() {
        return Err(AccuracyError::Input("empty study".into()));
    }
    let reports: Vec<CaseReport> = cases.par_iter().map(|c| stage_pipeline(c, opts)).collect();
    let tables = StageKind::ALL
        .iter()
        .map(|&kind| {
            let rows: Vec<(String, StageOutcome)> =
                reports.iter().map(|r| (r.name.clone(), r.get(kind).clone())).collect();
            let stats: Vec<DeviationStats> = rows.iter().filter_map(|(_, o)| o.stats().cloned()).collect();
            StageTable {
                kind,
                summary: aggregate(&stats).ok(),
                rows,
            }
        })
        .collect();
    Ok(StudyReport {
        chain: opts.chain,
        cases: reports,
        tables,
    })
}
