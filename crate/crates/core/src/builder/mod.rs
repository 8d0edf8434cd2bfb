//! Splint construction: feasibility gating, offset surfaces, virtual impression,
//! embossing, mandible impression, apertures and final assembly.
//!
//! All offsets are computed on columns of side `resolution` along the insertion axis
//! (the cutting-plane normal), which makes every surface single-valued along that
//! axis by construction.

mod assemble;
mod case;
mod feasibility;
pub mod grid;
mod shell;
mod stamp;

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::mesh::{MeshError, Plane, RigidTransform, TriangleMesh, Vector3};

pub use assemble::{assemble_splint, ApertureLoop, SplintModel};
pub use case::{load_case, CaseFile, CaseMeshes, CaseTransform};
pub use feasibility::{check_feasibility, Constraint, ConstraintCheck, FeasibilityReport, Verdict};
pub use grid::{ColumnGrid, Heightfield};
pub use shell::{build_inner_surface, build_outer_shell, emboss, impress_mandible, resolve_conflicts, Aperture, Shell};
pub use stamp::{clean_stamp, generate_occlusal_surface, make_stamp, OcclusalStamp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Feasibility,
    OcclusalSurface,
    InnerSurface,
    OuterShell,
    Stamp,
    StampCleaning,
    Emboss,
    Impress,
    Apertures,
    Assembly,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Feasibility => "feasibility",
            Stage::OcclusalSurface => "occlusal-surface",
            Stage::InnerSurface => "inner-surface",
            Stage::OuterShell => "outer-shell",
            Stage::Stamp => "stamp",
            Stage::StampCleaning => "stamp-cleaning",
            Stage::Emboss => "emboss",
            Stage::Impress => "impress",
            Stage::Apertures => "apertures",
            Stage::Assembly => "assembly",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("infeasible transform, failed constraints: {}", .0.failed_names().join(", "))]
    Infeasible(Box<FeasibilityReport>),
    #[error("{stage}: {message}")]
    Stage { stage: Stage, message: String },
    #[error("case file: {0}")]
    Case(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

pub(crate) fn stage_err<T>(stage: Stage, message: impl Into<String>) -> Result<T, BuildError> {
    Err(BuildError::Stage {
        stage,
        message: message.into(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplintParams {
    /// Column size of the offset grid [mm].
    pub resolution: f64,
    /// Minimum wall thickness `w` [mm].
    pub wall_thickness: f64,
    /// Clearance between maxillary crowns and the inner surface [mm].
    pub clearance: f64,
    /// Offset of the occlusal contact face toward the splint [mm].
    pub contact_gap: f64,
    /// Crown selection plane; its normal is the insertion axis and points toward the maxilla.
    pub cutting_plane: Plane,
    /// How far below the cutting plane the splint is trimmed [mm].
    pub cutting_depth: f64,
    /// Minimum maxilla–mandible distance in the therapeutic position [mm].
    pub min_clearance: f64,
    pub max_rotation_deg: f64,
    /// Largest tolerated left/right imbalance of interocclusal distance (0 = perfectly even).
    pub max_contact_imbalance: f64,
    pub stamp_min_area: f64,
    pub spike_angle_deg: f64,
    pub stamp_extrusion: f64,
    /// Search distance for automatic occlusal-surface selection [mm].
    pub contact_search_distance: f64,
    /// Largest aperture area as a fraction of the shell footprint.
    pub max_aperture_fraction: f64,
    /// Solid pieces smaller than this are discarded [mm²].
    pub min_island_area: f64,
    pub override_feasibility: bool,
}

impl Default for SplintParams {
    fn default() -> Self {
        Self {
            resolution: 0.1,
            wall_thickness: 1.5,
            clearance: 0.1,
            contact_gap: 0.0,
            cutting_plane: Plane::new(Vector3::z(), 0.0).expect("unit normal"),
            cutting_depth: 0.5,
            min_clearance: 1.0,
            max_rotation_deg: 15.0,
            max_contact_imbalance: 0.25,
            stamp_min_area: 2.0,
            spike_angle_deg: 80.0,
            stamp_extrusion: 3.0,
            contact_search_distance: 2.0,
            max_aperture_fraction: 0.5,
            min_island_area: 2.0,
            override_feasibility: false,
        }
    }
}

impl SplintParams {
    pub fn validate(&self) -> Result<(), BuildError> {
        let bad = |m: String| Err(BuildError::InvalidParams(m));
        let r = self.resolution;
        if !(r > 0.0 && r.is_finite()) {
            return bad(format!("resolution must be positive, got {r}"));
        }
        if !(self.wall_thickness >= 2.0 * r) {
            return bad(format!(
                "wall thickness {} is below two grid cells (2 × {r})",
                self.wall_thickness
            ));
        }
        if !(self.clearance >= 0.0) {
            return bad("clearance must be non-negative".into());
        }
        if !(self.contact_gap >= 0.0) {
            return bad("contact gap must be non-negative".into());
        }
        if !(self.cutting_depth >= 0.0) {
            return bad("cutting depth must be non-negative".into());
        }
        if !(self.min_clearance > 0.0) {
            return bad("clearance threshold must be positive".into());
        }
        if !(self.max_rotation_deg >= 0.0) {
            return bad("rotation limit must be non-negative".into());
        }
        if !(self.stamp_min_area >= 0.0 && self.min_island_area >= 0.0) {
            return bad("area thresholds must be non-negative".into());
        }
        if !(self.spike_angle_deg > 0.0 && self.spike_angle_deg <= 180.0) {
            return bad("spike angle must lie in (0, 180]".into());
        }
        if !(self.stamp_extrusion > 0.0) {
            return bad("stamp extrusion must be positive".into());
        }
        if !(self.contact_search_distance > 0.0) {
            return bad("contact search distance must be positive".into());
        }
        if !(self.max_aperture_fraction > 0.0 && self.max_aperture_fraction <= 1.0) {
            return bad("aperture fraction must lie in (0, 1]".into());
        }
        Ok(())
    }
}

/// Everything needed to design one splint, in the reference frame.
#[derive(Clone, Debug)]
pub struct DesignCase {
    pub maxilla: TriangleMesh,
    /// Mandible in maximum intercuspation.
    pub mandible: TriangleMesh,
    pub occlusal: Option<TriangleMesh>,
    pub t_th: RigidTransform,
    /// Maxilla triangles forming the crown region; defaults to everything below the cutting plane.
    pub crown_mask: Option<Vec<usize>>,
    pub condyle: Option<TriangleMesh>,
    pub fossa: Option<TriangleMesh>,
}

impl DesignCase {
    pub fn new(maxilla: TriangleMesh, mandible: TriangleMesh, t_th: RigidTransform) -> Self {
        Self {
            maxilla,
            mandible,
            occlusal: None,
            t_th,
            crown_mask: None,
            condyle: None,
            fossa: None,
        }
    }

    /// The case moved by `q`, with the therapeutic transform conjugated to match.
    pub fn transformed(&self, q: &RigidTransform) -> DesignCase {
        let mv = |m: &TriangleMesh| m.transformed(q);
        DesignCase {
            maxilla: mv(&self.maxilla),
            mandible: mv(&self.mandible),
            occlusal: self.occlusal.as_ref().map(mv),
            t_th: q.compose(&self.t_th).compose(&q.inverse()),
            crown_mask: self.crown_mask.clone(),
            condyle: self.condyle.as_ref().map(mv),
            fossa: self.fossa.as_ref().map(mv),
        }
    }

    pub fn crown_region(&self, plane: &Plane) -> TriangleMesh {
        match &self.crown_mask {
            Some(mask) => {
                let mut keep = vec![false; self.maxilla.triangle_count()];
                for &t in mask {
                    if t < keep.len() {
                        keep[t] = true;
                    }
                }
                self.maxilla.select_triangles(|t| keep[t])
            }
            None => {
                let v = self.maxilla.vertices();
                self.maxilla.select_triangles(|t| {
                    self.maxilla.triangles()[t]
                        .iter()
                        .all(|&i| plane.signed_distance(&v[i as usize]) <= 0.0)
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub params: SplintParams,
    pub t_th: RigidTransform,
    /// SHA-256 of each input mesh's vertex and index data.
    pub input_hashes: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    pub occlusal_generated: bool,
    pub runtime_s: f64,
}

pub fn mesh_hash(mesh: &TriangleMesh) -> String {
    let mut h = Sha256::new();
    for p in mesh.vertices() {
        for c in [p.x, p.y, p.z] {
            h.update(c.to_le_bytes());
        }
    }
    for t in mesh.triangles() {
        for i in t {
            h.update(i.to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// Runs the whole pipeline: feasibility, inner and outer surfaces, stamp, embossing,
/// mandible impression, apertures and assembly.
pub fn build_splint(case: &DesignCase, params: &SplintParams) -> Result<SplintModel, BuildError> {
    let started = Instant::now();
    params.validate()?;
    let feasibility = check_feasibility(case, params);
    let mut warnings = Vec::new();
    if !feasibility.feasible() {
        if !params.override_feasibility {
            return Err(BuildError::Infeasible(Box::new(feasibility)));
        }
        for c in feasibility.checks.iter().filter(|c| c.verdict == Verdict::Fail) {
            warnings.push(format!("feasibility overridden: {}", c.describe()));
        }
    }

    let plane = &params.cutting_plane;
    let crown = case.crown_region(plane);
    if crown.triangle_count() == 0 {
        return stage_err(Stage::InnerSurface, "empty crown selection");
    }
    let frame = grid::insertion_frame(plane, &crown);
    let margin = params.clearance + params.wall_thickness + 4.0 * params.resolution;
    let local_bounds = crown.transformed(&frame.inverse()).bounds();
    let g = ColumnGrid::covering(frame, &local_bounds, params.resolution, margin);

    let (occlusal, generated) = match &case.occlusal {
        Some(o) => (o.clone(), false),
        None => (generate_occlusal_surface(case, params)?, true),
    };
    let press = *plane.normal();
    let stamp = clean_stamp(&make_stamp(&occlusal, &case.t_th, &press, params)?, params)?;

    let inner = build_inner_surface(&crown, &g, params)?;
    let outer = build_outer_shell(&inner, params)?;
    let cap = grid::erode(
        &grid::rasterize(&g.to_local(&case.maxilla), &g, grid::Envelope::Lowest),
        &g,
        params.clearance,
    );
    let shell = Shell::new(&inner, &outer, Some(&cap), -params.cutting_depth, params);
    let shell = emboss(&shell, &stamp, params)?;
    let shell = impress_mandible(&shell, &case.mandible, &case.t_th, params);
    let (shell, apertures) = resolve_conflicts(&shell, params)?;
    let mut model = assemble_splint(&shell, &apertures, params)?;

    let mut input_hashes = BTreeMap::new();
    input_hashes.insert("maxilla".to_string(), mesh_hash(&case.maxilla));
    input_hashes.insert("mandible".to_string(), mesh_hash(&case.mandible));
    input_hashes.insert("occlusal".to_string(), mesh_hash(&occlusal));
    if let Some(m) = &case.condyle {
        input_hashes.insert("condyle".to_string(), mesh_hash(m));
    }
    if let Some(m) = &case.fossa {
        input_hashes.insert("fossa".to_string(), mesh_hash(m));
    }
    if generated {
        warnings.push("occlusal surface generated from the MI mandible".to_string());
    }
    model.feasibility = feasibility;
    model.provenance = Some(Provenance {
        params: params.clone(),
        t_th: case.t_th,
        input_hashes,
        warnings,
        occlusal_generated: generated,
        runtime_s: started.elapsed().as_secs_f64(),
    });
    Ok(model)
}
