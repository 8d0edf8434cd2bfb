//! Parabolic dental arches with cusped teeth.
//!
//! Coordinates: x lateral, y anterior, z toward the maxilla. The arch centre line is
//! `y = depth·(1 − (2x/width)²)`; teeth sit in a band around it at z ≈ 0. The
//! maxilla is a closed slab whose lower face carries downward cusps and rises into
//! the vestibule and the palate; the mandible's upper face is the exact normal
//! offset of the maxillary band by the MI gap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::mesh::{Plane, Point3, TriangleMesh, Vector3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchSpec {
    /// Distance between the arch ends [mm].
    pub width: f64,
    /// Distance from the line through the arch ends to the incisors [mm].
    pub depth: f64,
    pub tooth_count: usize,
    pub cusp_height: f64,
    /// Base radius of one cusp [mm].
    pub cusp_radius: f64,
    /// Relative random variation of cusp heights.
    pub cusp_jitter: f64,
    /// Maxilla–mandible distance in maximum intercuspation [mm].
    pub gap: f64,
    /// Half width of the tooth band around the arch line [mm].
    pub band_half_width: f64,
    /// Vertex spacing of the generated surfaces [mm].
    pub grid_spacing: f64,
    pub seed: u64,
}

impl Default for ArchSpec {
    fn default() -> Self {
        Self {
            width: 50.0,
            depth: 45.0,
            tooth_count: 14,
            cusp_height: 0.9,
            cusp_radius: 2.2,
            cusp_jitter: 0.1,
            gap: 0.2,
            band_half_width: 4.5,
            grid_spacing: 0.4,
            seed: 1,
        }
    }
}

/// Height the vestibule and palate rise to above the occlusal plane [mm].
const RISE: f64 = 6.0;
/// Curvature of the rise at the band edge.
const RISE_RATE: f64 = 0.15;
/// Thickness of the slab behind each jaw surface [mm].
const SLAB: f64 = 3.0;
/// Margin around the band covered by the surfaces [mm].
const MARGIN: f64 = 4.0;
/// Height of the plane that bounds the crown region [mm].
pub const CUT_HEIGHT: f64 = 3.0;

impl ArchSpec {
    fn max_cusp(&self) -> f64 {
        self.cusp_height * (1.0 + self.cusp_jitter)
    }

    pub fn arch_length(&self) -> f64 {
        let c = ArchCurve::new(self.width, self.depth);
        c.arc(self.width / 2.0)
    }

    /// Smallest radius of curvature of the cusped surface.
    pub fn min_curvature_radius(&self) -> f64 {
        let cusp = 2.0 * self.cusp_radius * self.cusp_radius / (std::f64::consts::PI.powi(2) * self.max_cusp());
        cusp.min(1.0 / (2.0 * RISE_RATE))
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        let pos = [
            ("width", self.width),
            ("depth", self.depth),
            ("cusp_height", self.cusp_height),
            ("cusp_radius", self.cusp_radius),
            ("band_half_width", self.band_half_width),
            ("grid_spacing", self.grid_spacing),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.gap >= 0.0 && self.gap.is_finite()) {
            return bad(format!("gap must be non-negative, got {}", self.gap));
        }
        if !(0.0..1.0).contains(&self.cusp_jitter) {
            return bad(format!("cusp_jitter must lie in [0, 1), got {}", self.cusp_jitter));
        }
        if self.tooth_count < 4 {
            return bad(format!("tooth_count must be at least 4, got {}", self.tooth_count));
        }
        if self.gap >= self.min_curvature_radius() {
            return bad(format!(
                "cusp height {} with radius {} leaves no room for a {} mm gap (curvature radius {:.3} mm)",
                self.cusp_height,
                self.cusp_radius,
                self.gap,
                self.min_curvature_radius()
            ));
        }
        let slope = self.max_cusp() * std::f64::consts::PI / (2.0 * self.cusp_radius);
        if slope > 1.0 {
            return bad(format!("cusp flanks steeper than 45° (slope {slope:.3})"));
        }
        if self.band_half_width < 2.0 * self.cusp_radius {
            return bad("band_half_width must hold two cusp rows (≥ 2 × cusp_radius)".into());
        }
        let apex_radius = self.width * self.width / (8.0 * self.depth);
        if apex_radius <= self.band_half_width {
            return bad(format!("arch too pointed: apex curvature radius {apex_radius:.2} mm"));
        }
        if self.arch_length() / (self.tooth_count as f64) < 2.0 * self.cusp_radius {
            return bad(format!("{} teeth do not fit on the arch without overlapping", self.tooth_count));
        }
        if self.grid_spacing > self.cusp_radius / 2.0 {
            return bad(format!("grid_spacing {} does not resolve the cusps", self.grid_spacing));
        }
        Ok(())
    }
}

/// `y = depth − k x²` over `|x| ≤ width/2`.
#[derive(Clone, Copy, Debug)]
struct ArchCurve {
    half: f64,
    depth: f64,
    k: f64,
}

/// Position of a point relative to the arch line.
#[derive(Clone, Copy, Debug)]
struct ArchCoords {
    /// Arc length along the line, extended linearly past the ends.
    s: f64,
    /// Signed offset, positive toward the lips and cheeks.
    v: f64,
    /// Distance to the line (the ends are round).
    e: f64,
}

impl ArchCurve {
    fn new(width: f64, depth: f64) -> Self {
        let half = width / 2.0;
        Self {
            half,
            depth,
            k: depth / (half * half),
        }
    }

    fn point(&self, x: f64) -> [f64; 2] {
        [x, self.depth - self.k * x * x]
    }

    /// Unit tangent in the direction of increasing x.
    fn tangent(&self, x: f64) -> [f64; 2] {
        let dy = -2.0 * self.k * x;
        let n = (1.0 + dy * dy).sqrt();
        [1.0 / n, dy / n]
    }

    /// Arc length from the left end.
    fn arc(&self, x: f64) -> f64 {
        let f = |x: f64| {
            let a = 2.0 * self.k * x;
            0.5 * x * (1.0 + a * a).sqrt() + a.asinh() / (4.0 * self.k)
        };
        f(x) - f(-self.half)
    }

    fn coords(&self, px: f64, py: f64) -> ArchCoords {
        let d2 = |x: f64| {
            let [cx, cy] = self.point(x);
            (px - cx).powi(2) + (py - cy).powi(2)
        };
        // coarse scan, then Newton on the stationarity condition
        const SAMPLES: usize = 64;
        let mut best = -self.half;
        let mut best_d = f64::INFINITY;
        for i in 0..=SAMPLES {
            let x = -self.half + 2.0 * self.half * i as f64 / SAMPLES as f64;
            let d = d2(x);
            if d < best_d {
                best_d = d;
                best = x;
            }
        }
        let mut x = best;
        for _ in 0..30 {
            let [cx, cy] = self.point(x);
            let (dx, dy) = (1.0, -2.0 * self.k * x);
            let g = (cx - px) * dx + (cy - py) * dy;
            let h = dx * dx + dy * dy + (cy - py) * (-2.0 * self.k);
            if h <= 0.0 {
                break;
            }
            let nx = (x - g / h).clamp(-self.half, self.half);
            if (nx - x).abs() < 1e-14 {
                x = nx;
                break;
            }
            x = nx;
        }
        let [cx, cy] = self.point(x);
        let [tx, ty] = self.tangent(x);
        // outward normal: toward +y at the apex
        let (nx, ny) = (-ty, tx);
        let (rx, ry) = (px - cx, py - cy);
        ArchCoords {
            s: self.arc(x) + rx * tx + ry * ty,
            v: rx * nx + ry * ny,
            e: (rx * rx + ry * ry).sqrt(),
        }
    }
}

/// Cusp centres `(s, v, height)`.
fn cusps(spec: &ArchSpec) -> Vec<(f64, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let len = spec.arch_length();
    let pitch = len / spec.tooth_count as f64;
    let mut out = Vec::with_capacity(2 * spec.tooth_count);
    for k in 0..spec.tooth_count {
        let s = (k as f64 + 0.5) * pitch;
        for v in [-spec.cusp_radius, spec.cusp_radius] {
            let j: f64 = rng.gen_range(-1.0..=1.0);
            out.push((s, v, spec.cusp_height * (1.0 + spec.cusp_jitter * j)));
        }
    }
    out
}

struct Surface<'a> {
    spec: &'a ArchSpec,
    curve: ArchCurve,
    cusps: Vec<(f64, f64, f64)>,
}

impl Surface<'_> {
    fn cusp_sum(&self, c: &ArchCoords) -> f64 {
        let r = self.spec.cusp_radius;
        let k = std::f64::consts::PI / (2.0 * r);
        let mut z = 0.0;
        for &(s, v, h) in &self.cusps {
            let ds = c.s - s;
            if ds.abs() >= r {
                continue;
            }
            let rho = (ds * ds + (c.v - v).powi(2)).sqrt();
            if rho < r {
                z += h * (k * rho).cos().powi(2);
            }
        }
        z
    }

    fn rise(&self, c: &ArchCoords) -> f64 {
        let u = (c.e - self.spec.band_half_width).max(0.0);
        RISE * (1.0 - (-RISE_RATE * u * u / RISE).exp())
    }

    /// Lower face of the maxilla.
    fn upper(&self, x: f64, y: f64) -> f64 {
        let c = self.curve.coords(x, y);
        self.rise(&c) - self.cusp_sum(&c)
    }

    /// Mandibular base surface: follows the maxilla in the band, falls away outside.
    fn lower(&self, x: f64, y: f64) -> f64 {
        let c = self.curve.coords(x, y);
        -self.rise(&c) - self.cusp_sum(&c)
    }

    fn grad(&self, f: impl Fn(f64, f64) -> f64, x: f64, y: f64) -> (f64, f64) {
        const H: f64 = 1e-5;
        ((f(x + H, y) - f(x - H, y)) / (2.0 * H), (f(x, y + H) - f(x, y - H)) / (2.0 * H))
    }
}

fn smoothstep(a: f64, b: f64, x: f64) -> f64 {
    let t = ((x - a) / (b - a)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// A generated maxilla–mandible pair.
#[derive(Clone, Debug)]
pub struct ArchPair {
    pub maxilla: TriangleMesh,
    pub mandible: TriangleMesh,
    /// Tooth-band triangles of the maxilla.
    pub occlusal: TriangleMesh,
    /// Maxilla triangles on the sloped part of the palate.
    pub palate_mask: Vec<usize>,
    /// Crown-selection plane; its normal points toward the maxilla.
    pub cutting_plane: Plane,
}

struct Grid {
    nx: usize,
    ny: usize,
    x0: f64,
    y0: f64,
    dx: f64,
    dy: f64,
}

impl Grid {
    fn new(spec: &ArchSpec) -> Grid {
        let m = spec.band_half_width + MARGIN;
        let (x0, x1) = (-spec.width / 2.0 - m, spec.width / 2.0 + m);
        let (y0, y1) = (-m, spec.depth + m);
        let nx = ((x1 - x0) / spec.grid_spacing).ceil() as usize;
        let ny = ((y1 - y0) / spec.grid_spacing).ceil() as usize;
        Grid {
            nx,
            ny,
            x0,
            y0,
            dx: (x1 - x0) / nx as f64,
            dy: (y1 - y0) / ny as f64,
        }
    }

    fn xy(&self, i: usize, j: usize) -> (f64, f64) {
        (self.x0 + i as f64 * self.dx, self.y0 + j as f64 * self.dy)
    }

    fn id(&self, i: usize, j: usize) -> u32 {
        (j * (self.nx + 1) + i) as u32
    }

    /// Boundary vertex ids, counter-clockwise seen from +z.
    fn ring(&self) -> Vec<u32> {
        let mut r = Vec::new();
        for i in 0..self.nx {
            r.push(self.id(i, 0));
        }
        for j in 0..self.ny {
            r.push(self.id(self.nx, j));
        }
        for i in (1..=self.nx).rev() {
            r.push(self.id(i, self.ny));
        }
        for j in (1..=self.ny).rev() {
            r.push(self.id(0, j));
        }
        r
    }
}

/// Closes a height surface into a slab. `up` is true when the surface is the
/// upper face of the solid (mandible), false when it is the lower face (maxilla).
fn close_slab(g: &Grid, surface: Vec<Point3>, cap_z: f64, up: bool) -> TriangleMesh {
    let n = surface.len() as u32;
    let mut verts = surface;
    let mut tris = Vec::new();
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (a, b, c, d) = (g.id(i, j), g.id(i + 1, j), g.id(i + 1, j + 1), g.id(i, j + 1));
            if up {
                tris.push([a, b, c]);
                tris.push([a, c, d]);
            } else {
                tris.push([a, c, b]);
                tris.push([a, d, c]);
            }
        }
    }
    let ring = g.ring();
    // cap ring copies, then the cap centre
    let cap0 = verts.len() as u32;
    for &r in &ring {
        let p = verts[r as usize];
        verts.push(Point3::new(p.x, p.y, cap_z));
    }
    let (cx, cy) = g.xy(g.nx / 2, g.ny / 2);
    let centre = verts.len() as u32;
    verts.push(Point3::new(cx + 0.5 * g.dx, cy + 0.5 * g.dy, cap_z));
    let m = ring.len();
    for k in 0..m {
        let (p, q) = (ring[k], ring[(k + 1) % m]);
        let (pc, qc) = (cap0 + k as u32, cap0 + ((k + 1) % m) as u32);
        if up {
            // surface on top, cap below
            tris.push([pc, qc, q]);
            tris.push([pc, q, p]);
            tris.push([centre, qc, pc]);
        } else {
            tris.push([p, q, qc]);
            tris.push([p, qc, pc]);
            tris.push([centre, pc, qc]);
        }
    }
    debug_assert!(n > 0);
    TriangleMesh::new(verts, tris).expect("slab indices")
}

/// Builds the maxilla, the MI mandible and the occlusal patch.
pub fn make_arch_pair(spec: &ArchSpec) -> Result<ArchPair, SynthError> {
    spec.validate()?;
    let surf = Surface {
        spec,
        curve: ArchCurve::new(spec.width, spec.depth),
        cusps: cusps(spec),
    };
    let g = Grid::new(spec);
    let h = spec.band_half_width;
    let mut upper = Vec::with_capacity((g.nx + 1) * (g.ny + 1));
    let mut lower = Vec::with_capacity(upper.capacity());
    let mut coords = Vec::with_capacity(upper.capacity());
    for j in 0..=g.ny {
        for i in 0..=g.nx {
            let (x, y) = g.xy(i, j);
            let c = surf.curve.coords(x, y);
            upper.push(Point3::new(x, y, surf.upper(x, y)));
            let b = surf.lower(x, y);
            // exact normal offset near the band, vertical drop far from it
            let lam = 1.0 - smoothstep(h + 0.5, h + 2.0, c.e);
            let (bx, by) = surf.grad(|x, y| surf.lower(x, y), x, y);
            let n_down = Vector3::new(bx, by, -1.0).normalize();
            let dir = (n_down * lam + Vector3::new(0.0, 0.0, -1.0) * (1.0 - lam)).normalize();
            lower.push(Point3::new(x, y, b) + dir * spec.gap);
            coords.push(c);
        }
    }
    let maxilla = close_slab(&g, upper, RISE + SLAB, false);
    let mandible = close_slab(&g, lower, -(RISE + SLAB), true);

    let surface_tris = 2 * g.nx * g.ny;
    let in_band = |t: usize| {
        maxilla.triangles()[t]
            .iter()
            .all(|&v| (v as usize) < coords.len() && coords[v as usize].e <= h)
    };
    let occlusal = maxilla.select_triangles(|t| t < surface_tris && in_band(t));
    let palate_mask: Vec<usize> = (0..surface_tris)
        .filter(|&t| {
            maxilla.triangles()[t].iter().all(|&v| {
                let c = &coords[v as usize];
                let z = maxilla.vertices()[v as usize].z;
                c.v < 0.0 && c.e > h + 0.5 && z < RISE - 0.5
            })
        })
        .collect();
    Ok(ArchPair {
        maxilla,
        mandible,
        occlusal,
        palate_mask,
        cutting_plane: Plane::new(Vector3::z(), CUT_HEIGHT).expect("unit normal"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{is_watertight, min_distance_between, IndexedMesh};

    fn coarse() -> ArchSpec {
        ArchSpec {
            grid_spacing: 0.5,
            tooth_count: 10,
            ..ArchSpec::default()
        }
    }

    #[test]
    fn arc_length_matches_numeric_integral() {
        let c = ArchCurve::new(50.0, 45.0);
        let mut len = 0.0;
        let n = 200_000;
        for i in 0..n {
            let a = c.point(-25.0 + 50.0 * i as f64 / n as f64);
            let b = c.point(-25.0 + 50.0 * (i + 1) as f64 / n as f64);
            len += ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        }
        assert!((c.arc(25.0) - len).abs() < 1e-6);
    }

    #[test]
    fn arch_coordinates_of_points_on_and_off_the_line() {
        let c = ArchCurve::new(50.0, 45.0);
        let on = c.coords(10.0, 45.0 - c.k * 100.0);
        assert!(on.e < 1e-9 && on.v.abs() < 1e-9);
        let front = c.coords(0.0, 47.0);
        assert!((front.v - 2.0).abs() < 1e-9 && (front.e - 2.0).abs() < 1e-9);
        let inside = c.coords(0.0, 43.0);
        assert!((inside.v + 2.0).abs() < 1e-9);
    }

    #[test]
    fn slabs_are_closed_and_positive() {
        let p = make_arch_pair(&coarse()).unwrap();
        for m in [&p.maxilla, &p.mandible] {
            assert!(is_watertight(m));
            assert!(m.volume() > 0.0);
        }
        assert!(p.occlusal.triangle_count() > 0);
        assert!(!p.palate_mask.is_empty());
    }

    #[test]
    fn mi_gap_is_reproduced() {
        let spec = coarse();
        let p = make_arch_pair(&spec).unwrap();
        let (d, _, _) =
            min_distance_between(&IndexedMesh::new(p.maxilla.clone()), &IndexedMesh::new(p.mandible.clone())).unwrap();
        assert!((d - spec.gap).abs() < 0.1, "{d}");
    }

    #[test]
    fn deterministic_per_seed() {
        let a = make_arch_pair(&coarse()).unwrap();
        let b = make_arch_pair(&coarse()).unwrap();
        assert_eq!(a.maxilla, b.maxilla);
        assert_eq!(a.mandible, b.mandible);
        let c = make_arch_pair(&ArchSpec { seed: 9, ..coarse() }).unwrap();
        assert_ne!(a.maxilla, c.maxilla);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = [
            ArchSpec { tooth_count: 3, ..ArchSpec::default() },
            ArchSpec { gap: -0.1, ..ArchSpec::default() },
            ArchSpec { gap: 2.0, ..ArchSpec::default() },
            ArchSpec { cusp_height: 3.0, ..ArchSpec::default() },
            ArchSpec { tooth_count: 40, ..ArchSpec::default() },
        ];
        for s in bad {
            assert!(make_arch_pair(&s).is_err(), "{s:?}");
        }
    }
}
