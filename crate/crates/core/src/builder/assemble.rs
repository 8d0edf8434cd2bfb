//! Joins the inner and outer surfaces into a closed, printable solid.

use std::collections::BTreeMap;

use super::feasibility::FeasibilityReport;
use super::grid::corner_average;
use super::{stage_err, Aperture, BuildError, Provenance, Shell, SplintParams, Stage};
use crate::mesh::{boundary_loops, euler_characteristic, is_watertight, Point3, TriangleMesh, Vector3};

/// Rim of one aperture on the inner and on the outer surface.
#[derive(Clone, Debug, PartialEq)]
pub struct ApertureLoop {
    pub inner: Vec<Point3>,
    pub outer: Vec<Point3>,
    /// Area enclosed by the rim, projected on the cutting plane [mm²].
    pub area: f64,
}

#[derive(Clone, Debug)]
pub struct SplintModel {
    pub mesh: TriangleMesh,
    /// Faces of the final mesh lying on the inner (maxilla-facing) surface.
    pub inner_surface: TriangleMesh,
    /// Faces of the final mesh lying on the outer (occlusal) surface.
    pub outer_surface: TriangleMesh,
    pub apertures: Vec<ApertureLoop>,
    pub components: usize,
    pub euler_characteristic: i64,
    pub insertion_axis: Vector3,
    /// Area of the stamp footprint on the shell [mm²].
    pub footprint_area: f64,
    /// Area of the columns removed as apertures [mm²].
    pub aperture_area: f64,
    pub feasibility: FeasibilityReport,
    pub provenance: Option<Provenance>,
}

/// Removes one of two solid columns that touch only at a corner, repeatedly, so the
/// boundary of the solid stays a manifold.
fn remove_diagonal_contacts(solid: &mut [bool], shell: &Shell) {
    let g = &shell.grid;
    if g.nx < 2 || g.ny < 2 {
        return;
    }
    loop {
        let mut changed = false;
        for j in 0..g.ny - 1 {
            for i in 0..g.nx - 1 {
                let a = g.idx(i, j);
                let b = g.idx(i + 1, j);
                let c = g.idx(i, j + 1);
                let d = g.idx(i + 1, j + 1);
                let pair = if solid[a] && solid[d] && !solid[b] && !solid[c] {
                    Some((a, d))
                } else if solid[b] && solid[c] && !solid[a] && !solid[d] {
                    Some((b, c))
                } else {
                    None
                };
                if let Some((p, q)) = pair {
                    let drop = if shell.thickness(q) < shell.thickness(p) { q } else { p };
                    solid[drop] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

fn components(solid: &[bool], shell: &Shell) -> Vec<Vec<usize>> {
    let g = &shell.grid;
    let mut seen = vec![false; solid.len()];
    let mut out = Vec::new();
    for s in 0..solid.len() {
        if !solid[s] || seen[s] {
            continue;
        }
        seen[s] = true;
        let mut cells = vec![s];
        let mut head = 0;
        while head < cells.len() {
            let k = cells[head];
            head += 1;
            for q in g.neighbours4(k) {
                if solid[q] && !seen[q] {
                    seen[q] = true;
                    cells.push(q);
                }
            }
        }
        out.push(cells);
    }
    out
}

fn shoelace(corners: &[[f64; 2]]) -> f64 {
    let n = corners.len();
    let mut s = 0.0;
    for k in 0..n {
        let (a, b) = (corners[k], corners[(k + 1) % n]);
        s += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * s
}

/// Meshes the solid columns: inner surface on top, outer surface below, vertical
/// walls along the trim line and around every aperture.
pub fn assemble_splint(shell: &Shell, apertures: &[Aperture], params: &SplintParams) -> Result<SplintModel, BuildError> {
    let g = &shell.grid;
    let mut solid = shell.solid.clone();
    remove_diagonal_contacts(&mut solid, shell);
    let min_cells = (params.min_island_area / g.cell_area()).ceil() as usize;
    let parts: Vec<Vec<usize>> = components(&solid, shell)
        .into_iter()
        .filter(|c| c.len() >= min_cells.max(1))
        .collect();
    if parts.is_empty() {
        return stage_err(Stage::Assembly, "no printable material left");
    }
    let mut keep = vec![false; solid.len()];
    for p in &parts {
        for &k in p {
            keep[k] = true;
        }
    }
    let solid = keep;

    let top_c = corner_average(&shell.top, &solid, g);
    let bot_c = corner_average(&shell.bottom, &solid, g);
    let ncorner = (g.nx + 1) * (g.ny + 1);
    let mut top_id = vec![u32::MAX; ncorner];
    let mut bot_id = vec![u32::MAX; ncorner];
    let mut verts: Vec<Point3> = Vec::new();
    let mut corner_of: Vec<usize> = Vec::new();
    let mut vertex = |ids: &mut Vec<u32>, heights: &[f64], c: usize, verts: &mut Vec<Point3>| -> u32 {
        if ids[c] == u32::MAX {
            ids[c] = verts.len() as u32;
            let (ci, cj) = (c % (g.nx + 1), c / (g.nx + 1));
            let [x, y] = g.corner(ci, cj);
            verts.push(g.world_point(x, y, heights[c]));
            corner_of.push(c);
        }
        ids[c]
    };

    let mut top_tris = Vec::new();
    let mut top_inner = Vec::new();
    let mut bot_tris = Vec::new();
    let mut wall_tris = Vec::new();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.idx(i, j);
            if !solid[k] {
                continue;
            }
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)].map(|(ci, cj)| cj * (g.nx + 1) + ci);
            let t = corners.map(|c| vertex(&mut top_id, &top_c, c, &mut verts));
            let b = corners.map(|c| vertex(&mut bot_id, &bot_c, c, &mut verts));
            top_tris.push([t[0], t[1], t[2]]);
            top_tris.push([t[0], t[2], t[3]]);
            top_inner.push(shell.on_inner[k]);
            top_inner.push(shell.on_inner[k]);
            bot_tris.push([b[0], b[2], b[1]]);
            bot_tris.push([b[0], b[3], b[2]]);
            // sides in counter-clockwise order: south, east, north, west
            let nb = [
                (j > 0).then(|| g.idx(i, j - 1)),
                (i + 1 < g.nx).then(|| g.idx(i + 1, j)),
                (j + 1 < g.ny).then(|| g.idx(i, j + 1)),
                (i > 0).then(|| g.idx(i - 1, j)),
            ];
            for s in 0..4 {
                if nb[s].map_or(false, |q| solid[q]) {
                    continue;
                }
                let (p, q) = (s, (s + 1) % 4);
                wall_tris.push([t[q], t[p], b[p]]);
                wall_tris.push([t[q], b[p], b[q]]);
            }
        }
    }

    let mut all = top_tris.clone();
    all.extend_from_slice(&bot_tris);
    all.extend_from_slice(&wall_tris);
    let mesh = TriangleMesh::new(verts.clone(), all)?;
    if !is_watertight(&mesh) {
        return stage_err(Stage::Assembly, "watertightness unachievable at this resolution");
    }

    let loops_of = |tris: &[[u32; 3]]| -> Result<Vec<(Vec<u32>, f64)>, BuildError> {
        let patch = TriangleMesh::new(verts.clone(), tris.to_vec())?;
        Ok(boundary_loops(&patch)
            .into_iter()
            .map(|lp| {
                let xy: Vec<[f64; 2]> = lp
                    .iter()
                    .map(|&v| {
                        let c = corner_of[v as usize];
                        g.corner(c % (g.nx + 1), c / (g.nx + 1))
                    })
                    .collect();
                let a = shoelace(&xy);
                (lp, a)
            })
            .collect())
    };
    let top_loops = loops_of(&top_tris)?;
    let bot_loops = loops_of(&bot_tris)?;
    // holes wind clockwise on the upward-facing top and counter-clockwise below
    let top_holes: Vec<&(Vec<u32>, f64)> = top_loops.iter().filter(|l| l.1 < 0.0).collect();
    let bot_holes: BTreeMap<Vec<usize>, &(Vec<u32>, f64)> = bot_loops
        .iter()
        .filter(|l| l.1 > 0.0)
        .map(|l| {
            let mut key: Vec<usize> = l.0.iter().map(|&v| corner_of[v as usize]).collect();
            key.sort_unstable();
            (key, l)
        })
        .collect();
    if top_holes.len() != bot_holes.len() || top_loops.len() != bot_loops.len() {
        return stage_err(Stage::Assembly, "non-matching boundary loops");
    }
    let mut aperture_loops = Vec::new();
    for (lp, a) in top_holes {
        let mut key: Vec<usize> = lp.iter().map(|&v| corner_of[v as usize]).collect();
        key.sort_unstable();
        let Some((blp, _)) = bot_holes.get(&key) else {
            return stage_err(Stage::Assembly, "non-matching boundary loops");
        };
        aperture_loops.push(ApertureLoop {
            inner: lp.iter().map(|&v| verts[v as usize]).collect(),
            outer: blp.iter().map(|&v| verts[v as usize]).collect(),
            area: -a,
        });
    }

    let chi = euler_characteristic(&mesh);
    let expected = 2 * parts.len() as i64 - 2 * aperture_loops.len() as i64;
    if chi != expected {
        return stage_err(
            Stage::Assembly,
            format!("Euler characteristic {chi} does not match {} pieces with {} apertures", parts.len(), aperture_loops.len()),
        );
    }

    let n_top = top_tris.len();
    let n_bot = bot_tris.len();
    let inner_surface = mesh.select_triangles(|t| t < n_top && top_inner[t]);
    let outer_surface = mesh.select_triangles(|t| t >= n_top && t < n_top + n_bot);
    let footprint_area = shell.footprint.iter().filter(|&&f| f).count() as f64 * g.cell_area();
    Ok(SplintModel {
        mesh,
        inner_surface,
        outer_surface,
        apertures: aperture_loops,
        components: parts.len(),
        euler_characteristic: chi,
        insertion_axis: g.axis(),
        footprint_area,
        aperture_area: apertures.iter().map(|a| a.area).sum(),
        feasibility: FeasibilityReport::default(),
        provenance: None,
    })
}
