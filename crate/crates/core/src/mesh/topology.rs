//! Edge connectivity: components, boundaries, watertightness, Euler characteristic.

use std::collections::BTreeMap;

use super::TriangleMesh;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EdgeStats {
    pub edges: usize,
    pub boundary: usize,
    pub non_manifold: usize,
    /// Interior edges traversed in the same direction by both triangles.
    pub inconsistent: usize,
}

fn directed_edges(mesh: &TriangleMesh) -> BTreeMap<(u32, u32), (usize, usize)> {
    // undirected key -> (uses a<b, uses b<a)
    let mut map: BTreeMap<(u32, u32), (usize, usize)> = BTreeMap::new();
    for tri in mesh.triangles() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let e = map.entry((a.min(b), a.max(b))).or_insert((0, 0));
            if a < b {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
    }
    map
}

pub fn edge_stats(mesh: &TriangleMesh) -> EdgeStats {
    let mut s = EdgeStats::default();
    for &(fwd, back) in directed_edges(mesh).values() {
        s.edges += 1;
        match fwd + back {
            1 => s.boundary += 1,
            2 => {
                if fwd != 1 {
                    s.inconsistent += 1;
                }
            }
            _ => s.non_manifold += 1,
        }
    }
    s
}

/// Every edge shared by exactly two triangles with opposite orientation.
pub fn is_watertight(mesh: &TriangleMesh) -> bool {
    let s = edge_stats(mesh);
    mesh.triangle_count() > 0 && s.boundary == 0 && s.non_manifold == 0 && s.inconsistent == 0
}

/// `V - E + F` over vertices referenced by at least one triangle.
pub fn euler_characteristic(mesh: &TriangleMesh) -> i64 {
    let mut used = vec![false; mesh.vertex_count()];
    for t in mesh.triangles() {
        for &i in t {
            used[i as usize] = true;
        }
    }
    let v = used.iter().filter(|&&u| u).count() as i64;
    let e = directed_edges(mesh).len() as i64;
    v - e + mesh.triangle_count() as i64
}

/// Edges used by exactly one triangle, oriented as in that triangle.
pub fn boundary_edges(mesh: &TriangleMesh) -> Vec<(u32, u32)> {
    let mut uses: BTreeMap<(u32, u32), Vec<(u32, u32)>> = BTreeMap::new();
    for tri in mesh.triangles() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            uses.entry((a.min(b), a.max(b))).or_default().push((a, b));
        }
    }
    uses.into_values()
        .filter(|v| v.len() == 1)
        .map(|v| v[0])
        .collect()
}

/// Boundary edges chained into closed vertex loops.
pub fn boundary_loops(mesh: &TriangleMesh) -> Vec<Vec<u32>> {
    let edges = boundary_edges(mesh);
    let mut next: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for &(a, b) in &edges {
        next.entry(a).or_default().push(b);
    }
    let mut loops = Vec::new();
    let mut visited: BTreeMap<(u32, u32), bool> = edges.iter().map(|&e| (e, false)).collect();
    for &(a, b) in &edges {
        if visited[&(a, b)] {
            continue;
        }
        let mut lp = vec![a];
        let mut cur = (a, b);
        loop {
            *visited.get_mut(&cur).unwrap() = true;
            let v = cur.1;
            if v == a {
                break;
            }
            lp.push(v);
            let Some(n) = next.get(&v).and_then(|c| c.iter().copied().find(|&w| !visited[&(v, w)])) else {
                break;
            };
            cur = (v, n);
        }
        loops.push(lp);
    }
    loops
}

/// Partition of triangles by shared edges, in order of each component's first triangle.
pub fn connected_components(mesh: &TriangleMesh) -> Vec<TriangleMesh> {
    component_labels(mesh)
        .1
        .into_iter()
        .map(|tris| {
            let set: std::collections::HashSet<usize> = tris.into_iter().collect();
            mesh.select_triangles(|t| set.contains(&t))
        })
        .collect()
}

/// Component id per triangle plus triangle lists per component.
pub(crate) fn component_labels(mesh: &TriangleMesh) -> (Vec<usize>, Vec<Vec<usize>>) {
    let n = mesh.triangle_count();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut first_use: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            match first_use.get(&key) {
                Some(&o) => {
                    let (ra, rb) = (find(&mut parent, t), find(&mut parent, o));
                    if ra != rb {
                        let (lo, hi) = (ra.min(rb), ra.max(rb));
                        parent[hi] = lo;
                    }
                }
                None => {
                    first_use.insert(key, t);
                }
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_to_group: BTreeMap<usize, usize> = BTreeMap::new();
    for t in 0..n {
        let r = find(&mut parent, t);
        let g = *root_to_group.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        label[t] = g;
        groups[g].push(t);
    }
    (label, groups)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{flat_plate, icosphere, unit_cube, Point3, RigidTransform, Vector3};

    #[test]
    fn closed_shapes_are_watertight_spheres() {
        for m in [unit_cube(), icosphere(&Point3::origin(), 1.0, 2)] {
            assert!(is_watertight(&m));
            assert_eq!(euler_characteristic(&m), 2);
            assert!(boundary_loops(&m).is_empty());
        }
    }

    #[test]
    fn plate_has_one_boundary_loop() {
        let p = flat_plate(1.0, 1.0, 3, 3, 0.0);
        assert!(!is_watertight(&p));
        let loops = boundary_loops(&p);
        assert_eq!(loops.len(), 1);
        assert_eq!(loops[0].len(), 12);
        assert_eq!(euler_characteristic(&p), 1);
    }

    #[test]
    fn flipped_face_breaks_winding() {
        let c = unit_cube();
        let mut tris = c.triangles().to_vec();
        tris[0] = [tris[0][0], tris[0][2], tris[0][1]];
        let bad = TriangleMesh::new(c.vertices().to_vec(), tris).unwrap();
        assert!(!is_watertight(&bad));
        assert_eq!(edge_stats(&bad).inconsistent, 3);
    }

    #[test]
    fn components_of_two_spheres_and_a_sliver() {
        let a = icosphere(&Point3::origin(), 1.0, 2);
        let b = a.transformed(&RigidTransform::from_translation(Vector3::new(5.0, 0.0, 0.0)));
        assert_eq!(connected_components(&a).len(), 1);
        assert_eq!(connected_components(&TriangleMesh::merge(&[&a, &b])).len(), 2);

        let sliver = TriangleMesh::new(
            vec![
                Point3::new(10.0, 0.0, 0.0),
                Point3::new(10.5, 0.0, 0.0),
                Point3::new(10.5, 0.2, 0.0),
                Point3::new(10.0, 0.2, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        let parts = connected_components(&TriangleMesh::merge(&[&a, &sliver]));
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].triangle_count() + parts[1].triangle_count(), a.triangle_count() + 2);
        assert!((parts[1].surface_area() - 0.1).abs() < 1e-12);
    }
}
