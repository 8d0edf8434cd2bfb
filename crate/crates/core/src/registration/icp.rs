//! Iterative closest point with trimmed correspondences.

use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Vector6};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_rigid_unchecked, RegistrationError};
use crate::mesh::{IndexedMesh, Point3, RigidTransform, TriangleMesh, Vector3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IcpMetric {
    PointToPoint,
    PointToPlane,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Stop once the RMS residual improves by less than this [mm].
    pub convergence: f64,
    /// Correspondences farther than this are ignored [mm].
    pub rejection_distance: f64,
    /// Fraction of the closest correspondences kept each iteration.
    pub trim_fraction: f64,
    pub metric: IcpMetric,
    pub initial: Option<RigidTransform>,
    /// Residual above which two scans are not treated as the same anatomy [mm].
    pub max_residual: f64,
    /// Use at most this many evenly strided source vertices (0 = all).
    pub max_points: usize,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            convergence: 1e-5,
            rejection_distance: 2.0,
            trim_fraction: 0.9,
            metric: IcpMetric::PointToPlane,
            initial: None,
            max_residual: 0.5,
            max_points: 0,
        }
    }
}

impl IcpParams {
    pub fn validate(&self) -> Result<(), RegistrationError> {
        let bad = |m: &str| Err(RegistrationError::InvalidParams(m.into()));
        if self.max_iterations < 1 {
            return bad("max_iterations must be at least 1");
        }
        if !(self.convergence > 0.0) {
            return bad("convergence threshold must be positive");
        }
        if !(self.rejection_distance > 0.0) {
            return bad("rejection distance must be positive");
        }
        if !(self.trim_fraction > 0.0 && self.trim_fraction <= 1.0) {
            return bad("trim fraction must lie in (0, 1]");
        }
        if !(self.max_residual > 0.0) {
            return bad("residual threshold must be positive");
        }
        if let Some(t) = &self.initial {
            if !t.is_rigid(1e-9) {
                return bad("initial transform is not rigid");
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentResult {
    /// Maps the source into the target frame.
    pub transform: RigidTransform,
    pub rms: f64,
    pub iterations: usize,
    pub inlier_fraction: f64,
    /// RMS after each accepted iteration, starting with the initial pose.
    pub rms_history: Vec<f64>,
}

struct Pair {
    src: Point3,
    tgt: Point3,
    normal: Vector3,
    d: f64,
}

struct Matches {
    pairs: Vec<Pair>,
    rms: f64,
}

fn correspond(points: &[Point3], t: &RigidTransform, target: &IndexedMesh, reject: f64, trim: f64) -> Option<Matches> {
    let found: Vec<Option<Pair>> = points
        .par_iter()
        .map(|p| {
            let q = t.apply_point(p);
            target.nearest_within(&q, reject).map(|h| Pair {
                src: q,
                tgt: h.point,
                normal: h.pseudo_normal,
                d: h.distance,
            })
        })
        .collect();
    let mut pairs: Vec<Pair> = found.into_iter().flatten().collect();
    if pairs.is_empty() {
        return None;
    }
    let keep = ((pairs.len() as f64 * trim).ceil() as usize).clamp(1, pairs.len());
    if keep < pairs.len() {
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.sort_by(|&a, &b| pairs[a].d.total_cmp(&pairs[b].d).then(a.cmp(&b)));
        let mut mask = vec![false; pairs.len()];
        for &i in &order[..keep] {
            mask[i] = true;
        }
        let mut i = 0;
        pairs.retain(|_| {
            i += 1;
            mask[i - 1]
        });
    }
    let ss: f64 = pairs.iter().map(|p| p.d * p.d).sum();
    let rms = (ss / pairs.len() as f64).sqrt();
    Some(Matches { pairs, rms })
}

fn point_to_plane_step(pairs: &[Pair]) -> RigidTransform {
    let n = pairs.len() as f64;
    let c = pairs.iter().fold(Vector3::zeros(), |a, p| a + p.src.coords) / n;
    let mut a = Matrix6::zeros();
    let mut b = Vector6::zeros();
    for p in pairs {
        let arm = (p.src.coords - c).cross(&p.normal);
        let j = Vector6::new(arm.x, arm.y, arm.z, p.normal.x, p.normal.y, p.normal.z);
        let r = (p.tgt - p.src).dot(&p.normal);
        a += j * j.transpose();
        b += j * r;
    }
    let scale = a.abs().max();
    let x = if scale > 0.0 {
        a.svd(true, true).solve(&b, scale * 1e-12).unwrap_or_else(|_| Vector6::zeros())
    } else {
        Vector6::zeros()
    };
    let omega = Vector3::new(x[0], x[1], x[2]);
    let v = Vector3::new(x[3], x[4], x[5]);
    RigidTransform::from_translation(c + v)
        .compose(&RigidTransform::from_rotation_vector(&omega, Vector3::zeros()))
        .compose(&RigidTransform::from_translation(-c))
}

struct Loop<'a> {
    points: &'a [Point3],
    target: &'a IndexedMesh,
    metric: IcpMetric,
    reject: f64,
    trim: f64,
    max_iterations: usize,
    convergence: f64,
}

impl Loop<'_> {
    fn run(&self, init: RigidTransform) -> Result<AlignmentResult, RegistrationError> {
        let mut t = init;
        let mut m = correspond(self.points, &t, self.target, self.reject, self.trim)
            .ok_or(RegistrationError::NoCorrespondences(self.reject))?;
        let mut history = vec![m.rms];
        let mut iterations = 0;
        while iterations < self.max_iterations && m.rms > 0.0 {
            iterations += 1;
            let inc = match self.metric {
                IcpMetric::PointToPlane => point_to_plane_step(&m.pairs),
                IcpMetric::PointToPoint => {
                    if m.pairs.len() < 3 {
                        break;
                    }
                    fit_rigid_unchecked(m.pairs.iter().map(|p| (p.src, p.tgt)))
                }
            };
            let next = inc.compose(&t);
            let Some(nm) = correspond(self.points, &next, self.target, self.reject, self.trim) else {
                break;
            };
            // keep the best pose so the reported residual never increases
            if !(nm.rms <= m.rms) {
                break;
            }
            let change = m.rms - nm.rms;
            t = next;
            m = nm;
            history.push(m.rms);
            if change < self.convergence {
                break;
            }
        }
        Ok(AlignmentResult {
            transform: t,
            rms: m.rms,
            iterations,
            inlier_fraction: m.pairs.len() as f64 / self.points.len() as f64,
            rms_history: history,
        })
    }
}

/// Centroid and right-handed principal axes (columns, decreasing spread) of a point set.
pub fn principal_frame(points: &[Point3]) -> (Point3, Matrix3<f64>) {
    let n = points.len().max(1) as f64;
    let c = points.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p.coords - c;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut axes = Matrix3::zeros();
    for (k, &i) in order.iter().enumerate() {
        axes.set_column(k, &eig.eigenvectors.column(i));
    }
    if axes.determinant() < 0.0 {
        let flipped = -axes.column(2);
        axes.set_column(2, &flipped);
    }
    (Point3::from(c), axes)
}

fn initial_candidates(src: &[Point3], tgt: &[Point3]) -> Vec<RigidTransform> {
    let (cs, es) = principal_frame(src);
    let (ct, et) = principal_frame(tgt);
    let mut out = vec![RigidTransform::from_translation(ct - cs)];
    for s in [[1.0, 1.0, 1.0], [1.0, -1.0, -1.0], [-1.0, 1.0, -1.0], [-1.0, -1.0, 1.0]] {
        let r = et * Matrix3::from_diagonal(&Vector3::from(s)) * es.transpose();
        out.push(RigidTransform::from_parts(r, ct.coords - r * cs.coords));
    }
    out
}

fn subsample(points: &[Point3], max: usize) -> Vec<Point3> {
    let stride = points.len().div_ceil(max).max(1);
    points.iter().step_by(stride).copied().collect()
}

const COARSE_POINTS: usize = 600;
const COARSE_ITERATIONS: usize = 40;

/// Aligns `source` onto `target`. Without an initial transform, the centroid offset
/// and the four proper principal-axis pairings are each refined coarsely and the
/// best one seeds the final refinement.
pub fn icp_align(source: &TriangleMesh, target: &IndexedMesh, params: &IcpParams) -> Result<AlignmentResult, RegistrationError> {
    params.validate()?;
    if source.vertex_count() == 0 || target.mesh().vertex_count() == 0 {
        return Err(crate::mesh::MeshError::Empty.into());
    }
    let strided;
    let points = if params.max_points > 0 && source.vertex_count() > params.max_points {
        strided = subsample(source.vertices(), params.max_points);
        &strided[..]
    } else {
        source.vertices()
    };
    let metric = if target.mesh().triangle_count() == 0 {
        IcpMetric::PointToPoint
    } else {
        params.metric
    };
    let init = match params.initial {
        Some(t) => t,
        None => {
            let coarse_pts = subsample(points, COARSE_POINTS);
            let coarse = Loop {
                points: &coarse_pts,
                target,
                metric: IcpMetric::PointToPoint,
                reject: f64::INFINITY,
                trim: params.trim_fraction,
                max_iterations: COARSE_ITERATIONS,
                convergence: params.convergence,
            };
            let mut best: Option<AlignmentResult> = None;
            for cand in initial_candidates(points, target.mesh().vertices()) {
                let r = coarse.run(cand)?;
                if best.as_ref().map_or(true, |b| r.rms < b.rms) {
                    best = Some(r);
                }
            }
            best.expect("at least one candidate").transform
        }
    };
    Loop {
        points,
        target,
        metric,
        reject: params.rejection_distance,
        trim: params.trim_fraction,
        max_iterations: params.max_iterations,
        convergence: params.convergence,
    }
    .run(init)
}
