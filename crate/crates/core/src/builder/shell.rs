//! Column-wise shell: inner and outer surfaces, embossing, mandible impression and
//! aperture detection.

use std::collections::VecDeque;

use super::grid::{erode, rasterize, ColumnGrid, Envelope, Heightfield};
use super::{stage_err, BuildError, OcclusalStamp, SplintParams, Stage};
use crate::mesh::{RigidTransform, TriangleMesh};

/// Offsets the crown region by the clearance and fills every undercut along the
/// insertion axis (the lowest crown crossing of each column is kept).
pub fn build_inner_surface(crown: &TriangleMesh, grid: &ColumnGrid, params: &SplintParams) -> Result<Heightfield, BuildError> {
    if crown.triangle_count() == 0 {
        return stage_err(Stage::InnerSurface, "empty crown selection");
    }
    let lowest = rasterize(&grid.to_local(crown), grid, Envelope::Lowest);
    if lowest.iter().all(|v| v.is_nan()) {
        return stage_err(Stage::InnerSurface, "crown selection does not project onto the grid");
    }
    Ok(Heightfield {
        grid: grid.clone(),
        z: erode(&lowest, grid, params.clearance),
    })
}

/// Offsets the inner surface by the wall thickness away from the maxilla.
pub fn build_outer_shell(inner: &Heightfield, params: &SplintParams) -> Result<Heightfield, BuildError> {
    if 2.0 * params.resolution > params.wall_thickness {
        return Err(BuildError::InvalidParams(format!(
            "wall thickness {} is below two grid cells",
            params.wall_thickness
        )));
    }
    if inner.defined_cells() == 0 {
        return stage_err(Stage::OuterShell, "inner surface is empty");
    }
    Ok(Heightfield {
        grid: inner.grid.clone(),
        z: erode(&inner.z, &inner.grid, params.wall_thickness),
    })
}

/// Splint material per column: `bottom ≤ z ≤ top` in the insertion frame.
#[derive(Clone, Debug)]
pub struct Shell {
    pub grid: ColumnGrid,
    pub top: Vec<f64>,
    pub bottom: Vec<f64>,
    /// Columns thick enough to print before embossing.
    pub base_solid: Vec<bool>,
    /// Columns whose top lies on the inner surface rather than the trim cap.
    pub on_inner: Vec<bool>,
    /// Columns covered by the stamp footprint.
    pub footprint: Vec<bool>,
    /// Columns kept as material after conflict resolution.
    pub solid: Vec<bool>,
    pub min_thickness: f64,
}

impl Shell {
    /// Material between `outer` and `min(inner, cap, z_trim)`.
    pub fn new(inner: &Heightfield, outer: &Heightfield, cap: Option<&[f64]>, z_trim: f64, params: &SplintParams) -> Shell {
        let n = outer.z.len();
        let min_thickness = 2.0 * params.resolution;
        let mut top = vec![f64::NAN; n];
        let mut on_inner = vec![false; n];
        for k in 0..n {
            if outer.z[k].is_nan() {
                continue;
            }
            let i = if inner.z[k].is_nan() { f64::INFINITY } else { inner.z[k] };
            let c = cap.map_or(f64::INFINITY, |c| if c[k].is_nan() { f64::INFINITY } else { c[k] });
            let t = i.min(c).min(z_trim);
            top[k] = t;
            on_inner[k] = i <= c && i < z_trim;
        }
        let bottom = outer.z.clone();
        let base_solid: Vec<bool> = (0..n).map(|k| top[k] - bottom[k] >= min_thickness).collect();
        Shell {
            grid: outer.grid.clone(),
            solid: base_solid.clone(),
            top,
            bottom,
            base_solid,
            on_inner,
            footprint: vec![false; n],
            min_thickness,
        }
    }

    pub fn thickness(&self, k: usize) -> f64 {
        self.top[k] - self.bottom[k]
    }

    pub fn solid_area(&self) -> f64 {
        self.solid.iter().filter(|&&s| s).count() as f64 * self.grid.cell_area()
    }

    fn refresh_solid(&mut self) {
        for k in 0..self.top.len() {
            self.solid[k] = self.thickness(k) >= self.min_thickness;
        }
    }
}

/// Cells outside `mask` that cannot reach the grid border without crossing `mask`.
fn enclosed(mask: &[bool], g: &ColumnGrid) -> Vec<bool> {
    let mut outside = vec![false; mask.len()];
    let mut queue = VecDeque::new();
    for k in 0..mask.len() {
        let (i, j) = g.ij(k);
        if !mask[k] && (i == 0 || j == 0 || i + 1 == g.nx || j + 1 == g.ny) {
            outside[k] = true;
            queue.push_back(k);
        }
    }
    while let Some(k) = queue.pop_front() {
        for q in g.neighbours4(k) {
            if !mask[q] && !outside[q] {
                outside[q] = true;
                queue.push_back(q);
            }
        }
    }
    (0..mask.len()).map(|k| !mask[k] && !outside[k]).collect()
}

/// Fills NaN cells flagged in `holes` by repeated averaging of defined 4-neighbours.
fn fill_holes(z: &mut [f64], holes: &[bool], g: &ColumnGrid) {
    let mut pending: Vec<usize> = (0..z.len()).filter(|&k| holes[k]).collect();
    while !pending.is_empty() {
        let mut updates = Vec::new();
        for &k in &pending {
            let (mut s, mut n) = (0.0, 0);
            for q in g.neighbours4(k) {
                if !z[q].is_nan() {
                    s += z[q];
                    n += 1;
                }
            }
            if n > 0 {
                updates.push((k, s / n as f64));
            }
        }
        if updates.is_empty() {
            break;
        }
        for &(k, v) in &updates {
            z[k] = v;
        }
        pending.retain(|&k| z[k].is_nan());
    }
}

/// Width of the transition band around the stamp footprint, in cells.
const BLEND_CELLS: isize = 3;

/// Presses the stamp into the shell: inside the footprint the shell bottom becomes
/// the stamp contact face (material is carved or added as needed); just outside it,
/// added material tapers back to the shell over a band of three cells.
pub fn emboss(shell: &Shell, stamp: &OcclusalStamp, _params: &SplintParams) -> Result<Shell, BuildError> {
    let g = &shell.grid;
    let local = g.to_local(&stamp.contact);
    let mut s = rasterize(&local, g, Envelope::Highest);
    let covered: Vec<bool> = s.iter().map(|v| !v.is_nan()).collect();
    let holes = enclosed(&covered, g);
    fill_holes(&mut s, &holes, g);
    let footprint: Vec<bool> = s.iter().map(|v| !v.is_nan()).collect();

    let mut out = shell.clone();
    let mut touched = false;
    for k in 0..s.len() {
        if footprint[k] && !shell.bottom[k].is_nan() {
            out.bottom[k] = s[k];
            out.footprint[k] = true;
            touched = true;
        }
    }
    let band = BLEND_CELLS as f64 * g.spacing;
    for k in 0..s.len() {
        if footprint[k] || shell.bottom[k].is_nan() {
            continue;
        }
        let (i, j) = g.ij(k);
        let mut best: Option<(f64, f64)> = None;
        for dj in -BLEND_CELLS..=BLEND_CELLS {
            for di in -BLEND_CELLS..=BLEND_CELLS {
                let (qi, qj) = (i as isize + di, j as isize + dj);
                if qi < 0 || qj < 0 || qi >= g.nx as isize || qj >= g.ny as isize {
                    continue;
                }
                let q = g.idx(qi as usize, qj as usize);
                if !footprint[q] {
                    continue;
                }
                let d = ((di * di + dj * dj) as f64).sqrt() * g.spacing;
                if best.map_or(true, |(bd, _)| d < bd) {
                    best = Some((d, s[q]));
                }
            }
        }
        if let Some((d, sv)) = best {
            if d < band {
                let t = d / band;
                let blended = (1.0 - t) * sv + t * shell.bottom[k];
                out.bottom[k] = shell.bottom[k].min(blended);
            }
        }
    }
    if touched {
        out.refresh_solid();
    }
    Ok(out)
}

/// Carves the shell wherever the mandible in the therapeutic position would reach
/// it, leaving at least one grid cell of gap along the insertion axis.
pub fn impress_mandible(shell: &Shell, mandible: &TriangleMesh, t_th: &RigidTransform, _params: &SplintParams) -> Shell {
    let g = &shell.grid;
    let local = g.to_local(&mandible.transformed(t_th));
    let env = super::grid::dilate(&rasterize(&local, g, Envelope::Highest), g, g.spacing);
    let mut out = shell.clone();
    let mut changed = false;
    for k in 0..env.len() {
        if env[k].is_nan() || out.bottom[k].is_nan() {
            continue;
        }
        if env[k] > out.bottom[k] {
            out.bottom[k] = env[k];
            changed = true;
        }
    }
    if changed {
        out.refresh_solid();
    }
    out
}

/// Connected set of columns that lost their printable wall.
#[derive(Clone, Debug, PartialEq)]
pub struct Aperture {
    pub cells: Vec<usize>,
    pub area: f64,
}

/// Turns every region thinner than two cells (after embossing and impression) into
/// an aperture; fails when apertures would consume too much of the shell.
pub fn resolve_conflicts(shell: &Shell, params: &SplintParams) -> Result<(Shell, Vec<Aperture>), BuildError> {
    let g = &shell.grid;
    let mut out = shell.clone();
    out.refresh_solid();
    let lost: Vec<bool> = (0..g.len()).map(|k| shell.base_solid[k] && !out.solid[k]).collect();
    let mut seen = vec![false; g.len()];
    let mut apertures = Vec::new();
    for start in 0..g.len() {
        if !lost[start] || seen[start] {
            continue;
        }
        let mut cells = vec![start];
        seen[start] = true;
        let mut head = 0;
        while head < cells.len() {
            let k = cells[head];
            head += 1;
            for q in g.neighbours4(k) {
                if lost[q] && !seen[q] {
                    seen[q] = true;
                    cells.push(q);
                }
            }
        }
        cells.sort_unstable();
        let area = cells.len() as f64 * g.cell_area();
        apertures.push(Aperture { cells, area });
    }
    let base_area = shell.base_solid.iter().filter(|&&b| b).count() as f64 * g.cell_area();
    let total: f64 = apertures.iter().map(|a| a.area).sum();
    if base_area > 0.0 && total > params.max_aperture_fraction * base_area {
        return stage_err(
            Stage::Apertures,
            format!(
                "aperture area {total:.2} mm² exceeds {:.0}% of the shell ({base_area:.2} mm²); the splint would be structurally meaningless",
                100.0 * params.max_aperture_fraction
            ),
        );
    }
    Ok((out, apertures))
}
