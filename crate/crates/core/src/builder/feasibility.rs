//! Realizability checks on the therapeutic transform.

use std::fmt;

use serde::Serialize;

use super::{generate_occlusal_surface, grid::insertion_frame, DesignCase, SplintParams};
use crate::mesh::{meshes_intersect, meshes_touch, min_distance_between, IndexedMesh};
use crate::registration::decompose_error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    /// Interocclusal distance in the therapeutic position.
    Clearance,
    /// Maxilla and transformed mandible must not touch.
    Intersection,
    RotationLimit,
    ContactUniformity,
    /// Condyle against fossa; needs bone meshes.
    TmjCollision,
}

impl Constraint {
    pub fn name(&self) -> &'static str {
        match self {
            Constraint::Clearance => "clearance",
            Constraint::Intersection => "intersection",
            Constraint::RotationLimit => "rotation-limit",
            Constraint::ContactUniformity => "contact-uniformity",
            Constraint::TmjCollision => "tmj-collision",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NotEvaluated,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintCheck {
    pub constraint: Constraint,
    pub verdict: Verdict,
    pub measured: Option<f64>,
    pub threshold: Option<f64>,
    pub note: String,
}

impl ConstraintCheck {
    pub fn describe(&self) -> String {
        let v = match self.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "FAIL",
            Verdict::NotEvaluated => "not evaluated",
        };
        let mut s = format!("{}: {v}", self.constraint.name());
        if let Some(m) = self.measured {
            s.push_str(&format!(" (measured {m:.4}"));
            if let Some(t) = self.threshold {
                s.push_str(&format!(", threshold {t:.4}"));
            }
            s.push(')');
        }
        if !self.note.is_empty() {
            s.push_str(" - ");
            s.push_str(&self.note);
        }
        s
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub checks: Vec<ConstraintCheck>,
}

impl FeasibilityReport {
    /// True when no evaluated constraint fails.
    pub fn feasible(&self) -> bool {
        self.checks.iter().all(|c| c.verdict != Verdict::Fail)
    }

    pub fn failed(&self) -> Vec<Constraint> {
        self.checks
            .iter()
            .filter(|c| c.verdict == Verdict::Fail)
            .map(|c| c.constraint)
            .collect()
    }

    pub fn failed_names(&self) -> Vec<&'static str> {
        self.failed().iter().map(|c| c.name()).collect()
    }

    pub fn get(&self, c: Constraint) -> Option<&ConstraintCheck> {
        self.checks.iter().find(|k| k.constraint == c)
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "feasible: {}", self.feasible())?;
        for c in &self.checks {
            writeln!(f, "  {}", c.describe())?;
        }
        Ok(())
    }
}

fn check(constraint: Constraint, pass: bool, measured: f64, threshold: f64, note: String) -> ConstraintCheck {
    ConstraintCheck {
        constraint,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        measured: Some(measured),
        threshold: Some(threshold),
        note,
    }
}

fn not_evaluated(constraint: Constraint, note: &str) -> ConstraintCheck {
    ConstraintCheck {
        constraint,
        verdict: Verdict::NotEvaluated,
        measured: None,
        threshold: None,
        note: note.to_string(),
    }
}

/// Evaluates every constraint; failures are verdicts, never errors.
pub fn check_feasibility(case: &DesignCase, params: &SplintParams) -> FeasibilityReport {
    let maxilla = IndexedMesh::new(case.maxilla.clone());
    let moved = IndexedMesh::new(case.mandible.transformed(&case.t_th));
    let mut checks = Vec::new();

    match min_distance_between(&maxilla, &moved) {
        Some((d, _, _)) => checks.push(check(
            Constraint::Clearance,
            d >= params.min_clearance,
            d,
            params.min_clearance,
            String::new(),
        )),
        None => checks.push(not_evaluated(Constraint::Clearance, "empty mesh")),
    }

    let hits = meshes_intersect(&maxilla, &moved, 0.0);
    checks.push(check(
        Constraint::Intersection,
        !hits.intersects(),
        hits.pairs.len() as f64,
        0.0,
        "intersecting triangle pairs".to_string(),
    ));

    let (alpha, _) = decompose_error(&case.t_th);
    checks.push(check(
        Constraint::RotationLimit,
        alpha <= params.max_rotation_deg,
        alpha,
        params.max_rotation_deg,
        "degrees".to_string(),
    ));

    checks.push(contact_uniformity(case, params, &moved));

    match (&case.condyle, &case.fossa) {
        (Some(condyle), Some(fossa)) => {
            let c = IndexedMesh::new(condyle.transformed(&case.t_th));
            let f = IndexedMesh::new(fossa.clone());
            let touching = meshes_touch(&c, &f, 0.0);
            let d = min_distance_between(&c, &f).map_or(f64::NAN, |x| x.0);
            checks.push(check(Constraint::TmjCollision, !touching, d, 0.0, "condyle-fossa distance".into()));
        }
        _ => checks.push(not_evaluated(Constraint::TmjCollision, "no condyle/fossa meshes supplied")),
    }
    FeasibilityReport { checks }
}

/// Relative difference of the mean interocclusal distance between the two halves of
/// the occlusal region split across its major in-plane axis.
fn contact_uniformity(case: &DesignCase, params: &SplintParams, moved: &IndexedMesh) -> ConstraintCheck {
    let occlusal = match &case.occlusal {
        Some(o) => o.clone(),
        None => match generate_occlusal_surface(case, params) {
            Ok(o) => o,
            Err(_) => return not_evaluated(Constraint::ContactUniformity, "no occlusal region"),
        },
    };
    if occlusal.triangle_count() == 0 {
        return not_evaluated(Constraint::ContactUniformity, "empty occlusal surface");
    }
    let frame = insertion_frame(&params.cutting_plane, &occlusal);
    let axis = frame.apply_vector(&crate::mesh::Vector3::x());
    let origin = frame.translation();
    let mut sum = [0.0f64; 2];
    let mut wsum = [0.0f64; 2];
    for t in 0..occlusal.triangle_count() {
        let [a, b, c] = occlusal.triangle(t);
        let m = nalgebra::Point3::from((a.coords + b.coords + c.coords) / 3.0);
        let Some(hit) = moved.nearest(&m) else { continue };
        let side = usize::from((m.coords - origin).dot(&axis) >= 0.0);
        let w = occlusal.triangle_area(t);
        sum[side] += hit.distance * w;
        wsum[side] += w;
    }
    if wsum[0] <= 0.0 || wsum[1] <= 0.0 {
        return not_evaluated(Constraint::ContactUniformity, "occlusal region lies on one side only");
    }
    let (l, r) = (sum[0] / wsum[0], sum[1] / wsum[1]);
    let imbalance = if l + r > 0.0 { (l - r).abs() / (l + r) } else { 0.0 };
    check(
        Constraint::ContactUniformity,
        imbalance <= params.max_contact_imbalance,
        imbalance,
        params.max_contact_imbalance,
        format!("mean distances {l:.4} / {r:.4} mm"),
    )
}
