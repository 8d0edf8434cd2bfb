use super::{Point3, Vector3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn grow(&mut self, p: &Point3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&o.min),
            max: self.max.sup(&o.max),
        }
    }

    pub fn expanded(&self, d: f64) -> Aabb {
        let v = Vector3::repeat(d);
        Aabb {
            min: self.min - v,
            max: self.max + v,
        }
    }

    pub fn center(&self) -> Point3 {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn extent(&self) -> Vector3 {
        self.max - self.min
    }

    pub fn distance_squared_to_point(&self, p: &Point3) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let v = if p[k] < self.min[k] {
                self.min[k] - p[k]
            } else if p[k] > self.max[k] {
                p[k] - self.max[k]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }

    pub fn distance_squared_to_box(&self, o: &Aabb) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let v = if o.max[k] < self.min[k] {
                self.min[k] - o.max[k]
            } else if o.min[k] > self.max[k] {
                o.min[k] - self.max[k]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }

    /// Slab test; returns the entry parameter if the ray meets the box before `t_max`.
    pub fn ray_entry(&self, origin: &Point3, inv_dir: &Vector3, t_max: f64) -> Option<f64> {
        let mut t0: f64 = 0.0;
        let mut t1 = t_max;
        for k in 0..3 {
            let a = (self.min[k] - origin[k]) * inv_dir[k];
            let b = (self.max[k] - origin[k]) * inv_dir[k];
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            // NaN from 0 * inf means the ray lies in the slab plane; keep the interval.
            if !lo.is_nan() {
                t0 = t0.max(lo);
            }
            if !hi.is_nan() {
                t1 = t1.min(hi);
            }
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[derive(Clone, Debug)]
struct Node {
    bounds: Aabb,
    /// Leaf: `count > 0` and `start` indexes `order`. Inner: children at `start`, `start + 1`.
    start: u32,
    count: u32,
}

/// Bounding-volume hierarchy over an indexed set of primitives.
///
/// The tree stores only boxes and a permutation of primitive ids; callers supply
/// exact primitive tests through closures, so one tree type serves triangles,
/// points and segments alike.
#[derive(Clone, Debug)]
pub struct SpatialIndex {
    nodes: Vec<Node>,
    order: Vec<u32>,
}

const LEAF_SIZE: usize = 4;

impl SpatialIndex {
    pub fn build(boxes: &[Aabb]) -> SpatialIndex {
        let mut order: Vec<u32> = (0..boxes.len() as u32).collect();
        let centers: Vec<Point3> = boxes.iter().map(|b| b.center()).collect();
        let mut nodes = Vec::with_capacity(2 * boxes.len() / LEAF_SIZE + 1);
        if boxes.is_empty() {
            return SpatialIndex { nodes, order };
        }
        nodes.push(Node {
            bounds: Aabb::empty(),
            start: 0,
            count: 0,
        });
        // explicit stack of (node index, range)
        let mut stack = vec![(0usize, 0usize, boxes.len())];
        while let Some((node, lo, hi)) = stack.pop() {
            let mut bounds = Aabb::empty();
            let mut cbounds = Aabb::empty();
            for &i in &order[lo..hi] {
                bounds = bounds.union(&boxes[i as usize]);
                cbounds.grow(&centers[i as usize]);
            }
            nodes[node].bounds = bounds;
            let n = hi - lo;
            let ext = cbounds.extent();
            let axis = if ext.x >= ext.y && ext.x >= ext.z {
                0
            } else if ext.y >= ext.z {
                1
            } else {
                2
            };
            if n <= LEAF_SIZE || ext[axis] <= 0.0 {
                nodes[node].start = lo as u32;
                nodes[node].count = n as u32;
                continue;
            }
            let mid = lo + n / 2;
            order[lo..hi].select_nth_unstable_by(n / 2, |&a, &b| {
                centers[a as usize][axis]
                    .total_cmp(&centers[b as usize][axis])
                    .then(a.cmp(&b))
            });
            let left = nodes.len();
            nodes.push(Node {
                bounds: Aabb::empty(),
                start: 0,
                count: 0,
            });
            nodes.push(Node {
                bounds: Aabb::empty(),
                start: 0,
                count: 0,
            });
            nodes[node].start = left as u32;
            nodes[node].count = 0;
            stack.push((left + 1, mid, hi));
            stack.push((left, lo, mid));
        }
        SpatialIndex { nodes, order }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes.first().map(|n| n.bounds).unwrap_or_else(Aabb::empty)
    }

    /// Best-first nearest search. `eval(id)` returns the squared distance to primitive `id`.
    /// Ties resolve to the lowest primitive id so results never depend on traversal order.
    pub fn nearest<F>(&self, p: &Point3, mut eval: F) -> Option<(u32, f64)>
    where
        F: FnMut(u32) -> f64,
    {
        self.nearest_within(p, f64::INFINITY, &mut eval)
    }

    pub fn nearest_within<F>(&self, p: &Point3, max_d2: f64, eval: &mut F) -> Option<(u32, f64)>
    where
        F: FnMut(u32) -> f64,
    {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(u32, f64)> = None;
        let mut best_d2 = max_d2;
        let mut stack: Vec<(u32, f64)> = Vec::with_capacity(64);
        stack.push((0, self.nodes[0].bounds.distance_squared_to_point(p)));
        while let Some((ni, bd)) = stack.pop() {
            if bd > best_d2 {
                continue;
            }
            let node = &self.nodes[ni as usize];
            if node.count > 0 {
                let s = node.start as usize;
                for &id in &self.order[s..s + node.count as usize] {
                    let d2 = eval(id);
                    let better = match best {
                        None => d2 <= best_d2,
                        Some((bid, _)) => d2 < best_d2 || (d2 == best_d2 && id < bid),
                    };
                    if better {
                        best = Some((id, d2));
                        best_d2 = d2;
                    }
                }
            } else {
                let l = node.start;
                let r = node.start + 1;
                let dl = self.nodes[l as usize].bounds.distance_squared_to_point(p);
                let dr = self.nodes[r as usize].bounds.distance_squared_to_point(p);
                // push the farther child first so the nearer one is popped next
                if dl <= dr {
                    stack.push((r, dr));
                    stack.push((l, dl));
                } else {
                    stack.push((l, dl));
                    stack.push((r, dr));
                }
            }
        }
        best
    }

    /// Visits every primitive whose box meets the ray segment `[0, t_max]`.
    pub fn ray_candidates<F>(&self, origin: &Point3, dir: &Vector3, t_max: f64, mut visit: F)
    where
        F: FnMut(u32),
    {
        if self.nodes.is_empty() {
            return;
        }
        let inv = Vector3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack = vec![0u32];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if node.bounds.ray_entry(origin, &inv, t_max).is_none() {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for &id in &self.order[s..s + node.count as usize] {
                    visit(id);
                }
            } else {
                stack.push(node.start + 1);
                stack.push(node.start);
            }
        }
    }

    /// Visits every primitive whose box lies within `dist` of `query`.
    pub fn box_candidates<F>(&self, query: &Aabb, dist: f64, mut visit: F)
    where
        F: FnMut(u32),
    {
        if self.nodes.is_empty() {
            return;
        }
        let d2 = dist * dist;
        let mut stack = vec![0u32];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if node.bounds.distance_squared_to_box(query) > d2 {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for &id in &self.order[s..s + node.count as usize] {
                    visit(id);
                }
            } else {
                stack.push(node.start + 1);
                stack.push(node.start);
            }
        }
    }

    /// Dual traversal: visits every primitive pair whose boxes are within `dist`.
    /// `visit` returns `false` to stop early.
    pub fn pair_candidates<F>(&self, other: &SpatialIndex, dist: f64, mut visit: F)
    where
        F: FnMut(u32, u32) -> bool,
    {
        if self.nodes.is_empty() || other.nodes.is_empty() {
            return;
        }
        let d2 = dist * dist;
        let mut stack = vec![(0u32, 0u32)];
        while let Some((a, b)) = stack.pop() {
            let na = &self.nodes[a as usize];
            let nb = &other.nodes[b as usize];
            if na.bounds.distance_squared_to_box(&nb.bounds) > d2 {
                continue;
            }
            match (na.count > 0, nb.count > 0) {
                (true, true) => {
                    let sa = na.start as usize;
                    let sb = nb.start as usize;
                    for &ia in &self.order[sa..sa + na.count as usize] {
                        for &ib in &other.order[sb..sb + nb.count as usize] {
                            if !visit(ia, ib) {
                                return;
                            }
                        }
                    }
                }
                (true, false) => {
                    stack.push((a, nb.start + 1));
                    stack.push((a, nb.start));
                }
                (false, true) => {
                    stack.push((na.start + 1, b));
                    stack.push((na.start, b));
                }
                (false, false) => {
                    let ea = na.bounds.extent().norm_squared();
                    let eb = nb.bounds.extent().norm_squared();
                    if ea >= eb {
                        stack.push((na.start + 1, b));
                        stack.push((na.start, b));
                    } else {
                        stack.push((a, nb.start + 1));
                        stack.push((a, nb.start));
                    }
                }
            }
        }
    }
}

impl SpatialIndex {
    /// Branch-and-bound search for the closest primitive pair between two trees.
    /// `eval(a, b)` returns the squared distance between primitives; stops at zero.
    pub fn closest_pair<F>(&self, other: &SpatialIndex, mut eval: F) -> Option<(u32, u32, f64)>
    where
        F: FnMut(u32, u32) -> f64,
    {
        if self.nodes.is_empty() || other.nodes.is_empty() {
            return None;
        }
        let mut best: Option<(u32, u32, f64)> = None;
        let mut best_d2 = f64::INFINITY;
        let d0 = self.nodes[0].bounds.distance_squared_to_box(&other.nodes[0].bounds);
        let mut stack = vec![(0u32, 0u32, d0)];
        while let Some((a, b, bd)) = stack.pop() {
            if bd > best_d2 || best_d2 == 0.0 {
                continue;
            }
            let na = &self.nodes[a as usize];
            let nb = &other.nodes[b as usize];
            if na.count > 0 && nb.count > 0 {
                let sa = na.start as usize;
                let sb = nb.start as usize;
                for &ia in &self.order[sa..sa + na.count as usize] {
                    for &ib in &other.order[sb..sb + nb.count as usize] {
                        let d2 = eval(ia, ib);
                        let better = d2 < best_d2
                            || (d2 == best_d2 && best.map(|(x, y, _)| (ia, ib) < (x, y)).unwrap_or(true));
                        if better {
                            best_d2 = d2;
                            best = Some((ia, ib, d2));
                        }
                    }
                }
                continue;
            }
            let split_a = nb.count > 0
                || (na.count == 0 && na.bounds.extent().norm_squared() >= nb.bounds.extent().norm_squared());
            let mut children = if split_a {
                [(na.start, b), (na.start + 1, b)]
            } else {
                [(a, nb.start), (a, nb.start + 1)]
            }
            .map(|(x, y)| {
                let d = self.nodes[x as usize]
                    .bounds
                    .distance_squared_to_box(&other.nodes[y as usize].bounds);
                (x, y, d)
            });
            if children[0].2 < children[1].2 {
                children.swap(0, 1);
            }
            stack.extend(children);
        }
        best
    }
}
