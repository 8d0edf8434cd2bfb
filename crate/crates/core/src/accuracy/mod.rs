//! Signed deviation maps, per-case statistics, study aggregation and corrective fits.

mod pipeline;
mod profile;
mod report;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::mesh::{IndexedMesh, MeshError, RigidTransform, TriangleMesh};
use crate::registration::{decompose_error, icp_align, IcpMetric, IcpParams, RegistrationError};

pub use pipeline::{
    analyze_study, stage_pipeline, CaseInputs, CaseReport, ChainOrder, DistanceMap, PipelineOptions, StageKind,
    StageOutcome, StageTable, StudyReport,
};
pub use profile::{extract_profiles, ProfileSection};
pub use report::{export_report, format_table, parse_table_csv, write_stage_csv, TableRow};

#[derive(Debug, Error)]
pub enum AccuracyError {
    #[error("all {0} points were excluded")]
    AllExcluded(usize),
    #[error("no cases to aggregate")]
    Empty,
    #[error("corrective region is empty")]
    EmptyRegion,
    #[error("registration failed: {0}")]
    Registration(#[from] RegistrationError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("{0}")]
    Input(String),
}

/// Lower edge, width and count of the fixed histogram bins [mm].
pub const HIST_MIN: f64 = -1.0;
pub const HIST_BIN: f64 = 0.02;
pub const HIST_BINS: usize = 100;

/// Signed-error histogram: `HIST_BINS` bins over `[-1, 1]` mm plus an underflow
/// bin in front and an overflow bin at the end.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn of(values: &[f64]) -> Histogram {
        let edges: Vec<f64> = (0..=HIST_BINS).map(|k| HIST_MIN + k as f64 * HIST_BIN).collect();
        let mut counts = vec![0u64; HIST_BINS + 2];
        for &v in values {
            let k = ((v - HIST_MIN) / HIST_BIN).floor();
            let slot = if k < 0.0 {
                0
            } else if k >= HIST_BINS as f64 {
                HIST_BINS + 1
            } else {
                k as usize + 1
            };
            counts[slot] += 1;
        }
        Histogram { edges, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// One row of an accuracy table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationStats {
    pub n: usize,
    /// Mean signed error [mm].
    pub avg: f64,
    /// Population standard deviation of the signed error [mm].
    pub std: f64,
    pub histogram: Option<Histogram>,
    /// Points left out by the exclusion distance or the peripheral filter.
    pub excluded: usize,
}

impl DeviationStats {
    /// Statistics of a list of signed errors, summed in index order.
    pub fn from_values(values: &[f64]) -> Option<DeviationStats> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let avg = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - avg) * (v - avg)).sum::<f64>() / n;
        Some(DeviationStats {
            n: values.len(),
            avg,
            std: var.sqrt(),
            histogram: Some(Histogram::of(values)),
            excluded: 0,
        })
    }

    /// A row known only by its summary numbers, e.g. typed from a published table.
    pub fn from_summary(n: usize, avg: f64, std: f64) -> DeviationStats {
        DeviationStats {
            n,
            avg,
            std,
            histogram: None,
            excluded: 0,
        }
    }

    pub fn rms(&self) -> f64 {
        (self.avg * self.avg + self.std * self.std).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudySummary {
    pub cases: Vec<DeviationStats>,
    pub total_n: usize,
    /// `Σ N_i AVG_i / Σ N_i`.
    pub weighted_avg: f64,
    /// Standard deviation of all points of all cases about the weighted mean.
    pub pooled_std: f64,
    /// `sqrt(Σ N_i STD_i² / Σ N_i)`, ignoring the spread of the per-case means.
    pub within_std: f64,
}

/// Combines per-case rows. The pooled STD is the dispersion of the union of all
/// points, reconstructed from each row's N, AVG and STD.
pub fn aggregate(cases: &[DeviationStats]) -> Result<StudySummary, AccuracyError> {
    let total: usize = cases.iter().map(|c| c.n).sum();
    if cases.is_empty() || total == 0 {
        return Err(AccuracyError::Empty);
    }
    let nt = total as f64;
    let weighted_avg = cases.iter().map(|c| c.n as f64 * c.avg).sum::<f64>() / nt;
    let within = cases.iter().map(|c| c.n as f64 * c.std * c.std).sum::<f64>() / nt;
    let between = cases
        .iter()
        .map(|c| c.n as f64 * (c.avg - weighted_avg) * (c.avg - weighted_avg))
        .sum::<f64>()
        / nt;
    Ok(StudySummary {
        cases: cases.to_vec(),
        total_n: total,
        weighted_avg,
        pooled_std: (within + between).sqrt(),
        within_std: within.sqrt(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeviationParams {
    /// Points farther than this from the reference are ignored [mm].
    pub exclusion_distance: f64,
    /// Ignore points whose nearest reference point is within `peripheral_band` of an open boundary.
    pub peripheral_filter: bool,
    pub peripheral_band: f64,
}

impl Default for DeviationParams {
    fn default() -> Self {
        Self {
            exclusion_distance: f64::INFINITY,
            peripheral_filter: false,
            peripheral_band: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviationMap {
    /// Signed error per measured vertex; NaN for excluded vertices.
    pub values: Vec<f64>,
    pub stats: DeviationStats,
}

/// Signed distance of every measured vertex to the reference surface.
pub fn deviation_map(
    measured: &TriangleMesh,
    reference: &IndexedMesh,
    params: &DeviationParams,
) -> Result<DeviationMap, AccuracyError> {
    if reference.mesh().triangle_count() == 0 || measured.vertex_count() == 0 {
        return Err(MeshError::Empty.into());
    }
    let values: Vec<f64> = measured
        .vertices()
        .par_iter()
        .map(|p| {
            let Some(hit) = reference.nearest_within(p, params.exclusion_distance) else {
                return f64::NAN;
            };
            if params.peripheral_filter {
                if let Some(d) = reference.distance_to_boundary(&hit.point) {
                    if d < params.peripheral_band {
                        return f64::NAN;
                    }
                }
            }
            let side = (p - hit.point).dot(&hit.pseudo_normal);
            if side < 0.0 {
                -hit.distance
            } else {
                hit.distance
            }
        })
        .collect();
    let kept: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
    let mut stats = DeviationStats::from_values(&kept).ok_or(AccuracyError::AllExcluded(values.len()))?;
    stats.excluded = values.len() - kept.len();
    Ok(DeviationMap { values, stats })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrectiveFit {
    /// Moves the measured region onto the reference.
    pub transform: RigidTransform,
    /// Deviation of the region before correction.
    pub before: DeviationStats,
    /// Deviation after applying `transform`.
    pub residual: DeviationStats,
    pub alpha_deg: f64,
    pub t_mm: f64,
}

/// Registration settings for corrective fits: every correspondence counts, so the
/// residual RMS can only go down from the uncorrected pose.
pub fn corrective_icp_params() -> IcpParams {
    IcpParams {
        max_iterations: 200,
        convergence: 1e-12,
        rejection_distance: f64::INFINITY,
        trim_fraction: 1.0,
        metric: IcpMetric::PointToPlane,
        initial: Some(RigidTransform::identity()),
        max_residual: f64::INFINITY,
        max_points: 0,
    }
}

/// Least-squares rigid correction of `measured` (restricted to `mask` triangles)
/// against `reference`, starting from the identity.
pub fn fit_corrective(
    measured: &TriangleMesh,
    reference: &IndexedMesh,
    mask: Option<&[usize]>,
) -> Result<CorrectiveFit, AccuracyError> {
    fit_corrective_with(measured, reference, mask, &corrective_icp_params())
}

pub fn fit_corrective_with(
    measured: &TriangleMesh,
    reference: &IndexedMesh,
    mask: Option<&[usize]>,
    params: &IcpParams,
) -> Result<CorrectiveFit, AccuracyError> {
    let region = match mask {
        Some(m) => {
            let mut keep = vec![false; measured.triangle_count()];
            for &t in m {
                if t < keep.len() {
                    keep[t] = true;
                }
            }
            measured.select_triangles(|t| keep[t])
        }
        None => measured.clone(),
    };
    if region.triangle_count() == 0 {
        return Err(AccuracyError::EmptyRegion);
    }
    let dev = DeviationParams::default();
    let before = deviation_map(&region, reference, &dev)?.stats;
    let fit = icp_align(&region, reference, params)?;
    let residual = deviation_map(&region.transformed(&fit.transform), reference, &dev)?.stats;
    let (alpha_deg, t_mm) = decompose_error(&fit.transform);
    Ok(CorrectiveFit {
        transform: fit.transform,
        before,
        residual,
        alpha_deg,
        t_mm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{flat_plate, icosphere, Point3, Vector3};

    #[test]
    fn identical_meshes_have_zero_deviation() {
        let s = icosphere(&Point3::origin(), 5.0, 3);
        let m = deviation_map(&s, &IndexedMesh::new(s.clone()), &DeviationParams::default()).unwrap();
        assert_eq!(m.stats.n, s.vertex_count());
        assert!(m.stats.avg.abs() < 1e-12 && m.stats.std < 1e-12);
        assert_eq!(m.stats.histogram.as_ref().unwrap().total(), m.stats.n as u64);
    }

    #[test]
    fn shifted_plate_and_split_plate() {
        let plate = flat_plate(10.0, 10.0, 10, 10, 0.0);
        let reference = IndexedMesh::new(plate.clone());
        let up = plate.transformed(&RigidTransform::from_translation(Vector3::new(0.0, 0.0, 0.1)));
        let dev = DeviationParams::default();
        let m = deviation_map(&up, &reference, &dev).unwrap();
        assert!((m.stats.avg - 0.1).abs() < 1e-12 && m.stats.std < 1e-12);

        let mut moved = plate.vertices().to_vec();
        for (i, p) in moved.iter_mut().enumerate() {
            p.z = if i % 2 == 0 { 0.1 } else { -0.1 };
        }
        let m = deviation_map(&plate.with_vertices(moved), &reference, &dev).unwrap();
        assert_eq!(m.stats.n % 2, 1);
        // 121 vertices: 61 up, 60 down
        let expect_avg = 0.1 / 121.0;
        assert!((m.stats.avg - expect_avg).abs() < 1e-12);
    }

    #[test]
    fn even_split_gives_exact_std() {
        let mut v = vec![0.1; 50];
        v.extend(vec![-0.1; 50]);
        let s = DeviationStats::from_values(&v).unwrap();
        assert!(s.avg.abs() < 1e-15);
        assert!((s.std - 0.1).abs() < 1e-12);
    }

    #[test]
    fn aggregation_identities() {
        let one = DeviationStats::from_summary(100, 0.02, 0.1);
        let s = aggregate(&[one.clone()]).unwrap();
        assert_eq!(s.weighted_avg, 0.02);
        assert!((s.pooled_std - 0.1).abs() < 1e-15);

        let eq = vec![DeviationStats::from_summary(50, 0.0, 0.2); 4];
        assert!((aggregate(&eq).unwrap().pooled_std - 0.2).abs() < 1e-15);
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn exclusion_and_all_excluded() {
        let plate = flat_plate(10.0, 10.0, 4, 4, 0.0);
        let reference = IndexedMesh::new(plate.clone());
        let far = plate.transformed(&RigidTransform::from_translation(Vector3::new(0.0, 0.0, 5.0)));
        let dev = DeviationParams {
            exclusion_distance: 1.0,
            ..Default::default()
        };
        assert!(matches!(deviation_map(&far, &reference, &dev), Err(AccuracyError::AllExcluded(25))));

        let periph = DeviationParams {
            peripheral_filter: true,
            peripheral_band: 1.0,
            ..Default::default()
        };
        let m = deviation_map(&plate, &reference, &periph).unwrap();
        assert_eq!(m.stats.n, 9);
        assert_eq!(m.stats.excluded, 16);
    }

    #[test]
    fn corrective_recovers_a_known_displacement() {
        let s = icosphere(&Point3::new(1.0, 2.0, 3.0), 6.0, 4);
        let bumpy: Vec<Point3> = s
            .vertices()
            .iter()
            .map(|p| {
                let d = p - Point3::new(1.0, 2.0, 3.0);
                Point3::new(1.0, 2.0, 3.0) + d * (1.0 + 0.05 * (3.0 * d.x / 6.0).sin() * (2.0 * d.z / 6.0).cos())
            })
            .collect();
        let reference = s.with_vertices(bumpy);
        let q = RigidTransform::from_rotation_vector(&Vector3::new(0.2f64.to_radians(), 0.0, 0.0), Vector3::new(0.3, 0.0, 0.0));
        let measured = reference.transformed(&q);
        let fit = fit_corrective(&measured, &IndexedMesh::new(reference.clone()), None).unwrap();
        let (alpha, t) = decompose_error(&q.inverse());
        assert!((fit.alpha_deg - alpha).abs() < 0.02, "{} vs {alpha}", fit.alpha_deg);
        assert!((fit.t_mm - t).abs() < 0.03);
        assert!(fit.residual.rms() <= fit.before.rms() + 1e-12);
    }
}
