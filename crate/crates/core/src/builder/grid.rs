//! Column grids in the insertion frame and the height-field morphology used to
//! offset, impress and emboss surfaces along the insertion axis.

use nalgebra::{Matrix2, Matrix3, SymmetricEigen};
use rayon::prelude::*;

use crate::mesh::{Aabb, Plane, Point3, RigidTransform, TriangleMesh, Vector3};

/// Square columns of side `spacing` over a rectangle of the insertion frame.
/// Local `z` is the insertion axis, pointing from the splint toward the maxilla.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnGrid {
    pub to_world: RigidTransform,
    pub origin: [f64; 2],
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
}

impl ColumnGrid {
    /// Grid covering `local_bounds` (in the frame `to_world`) plus `margin` on each side.
    pub fn covering(to_world: RigidTransform, local_bounds: &Aabb, spacing: f64, margin: f64) -> ColumnGrid {
        let x0 = local_bounds.min.x - margin;
        let y0 = local_bounds.min.y - margin;
        let nx = (((local_bounds.max.x + margin) - x0) / spacing).ceil().max(1.0) as usize;
        let ny = (((local_bounds.max.y + margin) - y0) / spacing).ceil().max(1.0) as usize;
        ColumnGrid {
            to_world,
            origin: [x0, y0],
            spacing,
            nx,
            ny,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    /// Local xy of a column centre.
    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.spacing,
            self.origin[1] + (j as f64 + 0.5) * self.spacing,
        ]
    }

    /// Local xy of a column corner, `0 ≤ i ≤ nx`, `0 ≤ j ≤ ny`.
    pub fn corner(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.spacing,
            self.origin[1] + j as f64 * self.spacing,
        ]
    }

    pub fn to_local(&self, mesh: &TriangleMesh) -> TriangleMesh {
        mesh.transformed(&self.to_world.inverse())
    }

    pub fn local_point(&self, p: &Point3) -> Point3 {
        self.to_world.inverse().apply_point(p)
    }

    pub fn world_point(&self, x: f64, y: f64, z: f64) -> Point3 {
        self.to_world.apply_point(&Point3::new(x, y, z))
    }

    pub fn axis(&self) -> Vector3 {
        self.to_world.apply_vector(&Vector3::z())
    }

    /// 4-neighbours of a column.
    pub fn neighbours4(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.ij(k);
        let cand = [
            (i > 0).then(|| self.idx(i - 1, j)),
            (i + 1 < self.nx).then(|| self.idx(i + 1, j)),
            (j > 0).then(|| self.idx(i, j - 1)),
            (j + 1 < self.ny).then(|| self.idx(i, j + 1)),
        ];
        cand.into_iter().flatten()
    }
}

/// Frame whose `z` axis is the plane normal and whose in-plane axes follow the
/// principal directions of `reference` (area weighted). Moving the plane and the
/// reference rigidly moves the frame with them.
pub fn insertion_frame(plane: &Plane, reference: &TriangleMesh) -> RigidTransform {
    let n = *plane.normal();
    let mut area = 0.0;
    let mut c = Vector3::zeros();
    let mut samples = Vec::with_capacity(reference.triangle_count());
    for t in 0..reference.triangle_count() {
        let a = reference.triangle_area(t);
        let [p, q, r] = reference.triangle(t);
        let m = (p.coords + q.coords + r.coords) / 3.0;
        samples.push((m, a));
        area += a;
        c += m * a;
    }
    if area <= 0.0 {
        for p in reference.vertices() {
            samples.push((p.coords, 1.0));
            area += 1.0;
            c += p.coords;
        }
    }
    let c = if area > 0.0 { c / area } else { Vector3::zeros() };
    // any orthonormal in-plane basis, then principal axes within it
    let helper = if n.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = n.cross(&helper).normalize();
    let v = n.cross(&u);
    let mut cov = Matrix2::zeros();
    for (m, a) in &samples {
        let d = m - c;
        let q = nalgebra::Vector2::new(d.dot(&u), d.dot(&v));
        cov += q * q.transpose() * *a;
    }
    let eig = SymmetricEigen::new(cov);
    let (k1, k2) = if eig.eigenvalues[0] >= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
    let a1 = eig.eigenvectors.column(k1);
    let a2 = eig.eigenvectors.column(k2);
    let mut e1 = (u * a1[0] + v * a1[1]).normalize();
    let mut e2 = (u * a2[0] + v * a2[1]).normalize();
    // fix the sign ambiguity with the more skewed axis
    let skew = |e: &Vector3| samples.iter().map(|(m, a)| (m - c).dot(e).powi(3) * a).sum::<f64>();
    let (s1, s2) = (skew(&e1), skew(&e2));
    if s2.abs() > s1.abs() {
        if s2 < 0.0 {
            e2 = -e2;
        }
        e1 = e2.cross(&n);
    } else {
        if s1 < 0.0 {
            e1 = -e1;
        }
        e2 = n.cross(&e1);
    }
    let rot = Matrix3::from_columns(&[e1, e2, n]);
    let origin = plane.project(&Point3::from(c));
    RigidTransform::from_parts(rot, origin.coords)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Envelope {
    Lowest,
    Highest,
}

/// Height of `local` (already in grid coordinates) at every column centre, taking the
/// lowest or highest crossing. Columns without a crossing hold NaN.
pub fn rasterize(local: &TriangleMesh, grid: &ColumnGrid, envelope: Envelope) -> Vec<f64> {
    let mut z = vec![f64::NAN; grid.len()];
    let r = grid.spacing;
    for t in 0..local.triangle_count() {
        let [a, b, c] = local.triangle(t);
        let det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        if det.abs() < 1e-14 {
            continue;
        }
        let lo_x = a.x.min(b.x).min(c.x);
        let hi_x = a.x.max(b.x).max(c.x);
        let lo_y = a.y.min(b.y).min(c.y);
        let hi_y = a.y.max(b.y).max(c.y);
        let i0 = (((lo_x - grid.origin[0]) / r - 0.5).ceil().max(0.0)) as usize;
        let j0 = (((lo_y - grid.origin[1]) / r - 0.5).ceil().max(0.0)) as usize;
        let i1f = ((hi_x - grid.origin[0]) / r - 0.5).floor();
        let j1f = ((hi_y - grid.origin[1]) / r - 0.5).floor();
        if i1f < 0.0 || j1f < 0.0 {
            continue;
        }
        let i1 = (i1f as usize).min(grid.nx.saturating_sub(1));
        let j1 = (j1f as usize).min(grid.ny.saturating_sub(1));
        let eps = 1e-12;
        for j in j0..=j1 {
            for i in i0..=i1 {
                let [px, py] = grid.center(i, j);
                let l1 = ((px - a.x) * (c.y - a.y) - (c.x - a.x) * (py - a.y)) / det;
                let l2 = ((b.x - a.x) * (py - a.y) - (px - a.x) * (b.y - a.y)) / det;
                let l0 = 1.0 - l1 - l2;
                if l0 < -eps || l1 < -eps || l2 < -eps {
                    continue;
                }
                let h = l0 * a.z + l1 * b.z + l2 * c.z;
                let k = grid.idx(i, j);
                let cur = z[k];
                z[k] = match envelope {
                    _ if cur.is_nan() => h,
                    Envelope::Lowest => cur.min(h),
                    Envelope::Highest => cur.max(h),
                };
            }
        }
    }
    z
}

fn ball_offsets(spacing: f64, radius: f64) -> Vec<(isize, isize, f64)> {
    let n = (radius / spacing).floor() as isize;
    let mut out = Vec::new();
    for dj in -n..=n {
        for di in -n..=n {
            let d2 = ((di * di + dj * dj) as f64) * spacing * spacing;
            if d2 <= radius * radius + 1e-12 {
                out.push((di, dj, (radius * radius - d2).max(0.0).sqrt()));
            }
        }
    }
    out
}

fn ball_morphology(z: &[f64], grid: &ColumnGrid, radius: f64, down: bool) -> Vec<f64> {
    if radius <= 0.0 {
        return z.to_vec();
    }
    let offs = ball_offsets(grid.spacing, radius);
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let mut out = vec![f64::NAN; z.len()];
    out.par_chunks_mut(grid.nx).enumerate().for_each(|(j, row)| {
        let j = j as isize;
        for (i, slot) in row.iter_mut().enumerate() {
            let i = i as isize;
            let mut best = f64::NAN;
            for &(di, dj, h) in &offs {
                let (qi, qj) = (i + di, j + dj);
                if qi < 0 || qj < 0 || qi >= nx || qj >= ny {
                    continue;
                }
                let v = z[(qj * nx + qi) as usize];
                if v.is_nan() {
                    continue;
                }
                if down {
                    let c = v - h;
                    if best.is_nan() || c < best {
                        best = c;
                    }
                } else {
                    let c = v + h;
                    if best.is_nan() || c > best {
                        best = c;
                    }
                }
            }
            *slot = best;
        }
    });
    out
}

/// Lower envelope of balls of `radius` centred on the height field: the surface
/// offset by `radius` away from the maxilla (toward −z).
pub fn erode(z: &[f64], grid: &ColumnGrid, radius: f64) -> Vec<f64> {
    ball_morphology(z, grid, radius, true)
}

/// Upper envelope of balls of `radius`: the surface offset toward +z.
pub fn dilate(z: &[f64], grid: &ColumnGrid, radius: f64) -> Vec<f64> {
    ball_morphology(z, grid, radius, false)
}

/// A height field sampled at column centres (NaN = no surface).
#[derive(Clone, Debug, PartialEq)]
pub struct Heightfield {
    pub grid: ColumnGrid,
    pub z: Vec<f64>,
}

impl Heightfield {
    pub fn defined_cells(&self) -> usize {
        self.z.iter().filter(|v| !v.is_nan()).count()
    }

    /// World-space surface over the defined columns, corner heights averaged from
    /// adjacent columns; faces toward +z when `up`.
    pub fn to_mesh(&self, up: bool) -> TriangleMesh {
        let g = &self.grid;
        let defined: Vec<bool> = self.z.iter().map(|v| !v.is_nan()).collect();
        let heights = corner_average(&self.z, &defined, g);
        let mut ids = vec![u32::MAX; (g.nx + 1) * (g.ny + 1)];
        let mut verts = Vec::new();
        let mut tris = Vec::new();
        for j in 0..g.ny {
            for i in 0..g.nx {
                if !defined[g.idx(i, j)] {
                    continue;
                }
                let q = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)].map(|(ci, cj)| {
                    let k = cj * (g.nx + 1) + ci;
                    if ids[k] == u32::MAX {
                        ids[k] = verts.len() as u32;
                        let [x, y] = g.corner(ci, cj);
                        verts.push(g.world_point(x, y, heights[k]));
                    }
                    ids[k]
                });
                if up {
                    tris.push([q[0], q[1], q[2]]);
                    tris.push([q[0], q[2], q[3]]);
                } else {
                    tris.push([q[0], q[2], q[1]]);
                    tris.push([q[0], q[3], q[2]]);
                }
            }
        }
        if tris.is_empty() {
            return TriangleMesh::empty();
        }
        TriangleMesh::new(verts, tris).expect("grid indices")
    }
}

/// Mean of `z` over the selected columns around each grid corner (NaN if none).
pub(crate) fn corner_average(z: &[f64], select: &[bool], g: &ColumnGrid) -> Vec<f64> {
    let mut out = vec![f64::NAN; (g.nx + 1) * (g.ny + 1)];
    for cj in 0..=g.ny {
        for ci in 0..=g.nx {
            let mut sum = 0.0;
            let mut n = 0;
            for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                if ci < di || cj < dj {
                    continue;
                }
                let (i, j) = (ci - di, cj - dj);
                if i >= g.nx || j >= g.ny {
                    continue;
                }
                let k = g.idx(i, j);
                if select[k] {
                    sum += z[k];
                    n += 1;
                }
            }
            if n > 0 {
                out[cj * (g.nx + 1) + ci] = sum / n as f64;
            }
        }
    }
    out
}
