//! Binned-SAH bounding volume hierarchy over mesh triangles.

use crate::geometry::ProxyMesh;
use crate::math::DVec3;

#[derive(Clone, Copy, Debug)]
pub struct Ray {
    pub origin: DVec3,
    pub dir: DVec3,
}

#[derive(Clone, Copy, Debug)]
pub struct TriHit {
    pub t: f64,
    pub tri: u32,
    /// Barycentric weights of vertices 1 and 2.
    pub u: f64,
    pub v: f64,
}

#[derive(Clone, Copy, Debug)]
struct Aabb {
    min: DVec3,
    max: DVec3,
}

impl Aabb {
    const EMPTY: Aabb = Aabb {
        min: DVec3::splat(f64::INFINITY),
        max: DVec3::splat(f64::NEG_INFINITY),
    };

    fn grow(&mut self, p: DVec3) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    fn merge(&mut self, b: &Aabb) {
        self.min = self.min.min(b.min);
        self.max = self.max.max(b.max);
    }

    fn area(&self) -> f64 {
        let d = self.max - self.min;
        if d.min_element() < 0.0 {
            return 0.0;
        }
        2.0 * (d.x * d.y + d.y * d.z + d.z * d.x)
    }

    #[inline]
    fn hit(&self, origin: DVec3, inv_dir: DVec3, tmax: f64) -> Option<f64> {
        let t0 = (self.min - origin) * inv_dir;
        let t1 = (self.max - origin) * inv_dir;
        let tnear = t0.min(t1).max_element().max(0.0);
        let tfar = t0.max(t1).min_element().min(tmax);
        (tnear <= tfar).then_some(tnear)
    }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    bounds: Aabb,
    /// Leaf: first primitive index; interior: right child index.
    offset: u32,
    /// Zero for interior nodes.
    count: u32,
}

pub struct Bvh {
    nodes: Vec<Node>,
    prims: Vec<u32>,
    // triangle vertices, packed for cache locality
    tris: Vec<[DVec3; 3]>,
}

const LEAF_SIZE: usize = 4;
const BINS: usize = 12;

impl Bvh {
    pub fn build(mesh: &ProxyMesh) -> Self {
        let tris: Vec<[DVec3; 3]> = mesh
            .triangles
            .iter()
            .map(|t| t.map(|i| mesh.positions[i as usize]))
            .collect();
        let centroids: Vec<DVec3> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let bounds: Vec<Aabb> = tris
            .iter()
            .map(|t| {
                let mut b = Aabb::EMPTY;
                t.iter().for_each(|p| b.grow(*p));
                b
            })
            .collect();
        let mut prims: Vec<u32> = (0..tris.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * tris.len());
        build_recursive(&mut nodes, &mut prims, 0, tris.len(), &centroids, &bounds);
        Bvh { nodes, prims, tris }
    }

    fn tri_hit(&self, prim: u32, ray: &Ray, tmax: f64) -> Option<TriHit> {
        // Möller-Trumbore
        let [p0, p1, p2] = self.tris[prim as usize];
        let e1 = p1 - p0;
        let e2 = p2 - p0;
        let pv = ray.dir.cross(e2);
        let det = e1.dot(pv);
        if det.abs() < 1e-300 {
            return None;
        }
        let inv = 1.0 / det;
        let tv = ray.origin - p0;
        let u = tv.dot(pv) * inv;
        if !(0.0..=1.0).contains(&u) {
            return None;
        }
        let qv = tv.cross(e1);
        let v = ray.dir.dot(qv) * inv;
        if v < 0.0 || u + v > 1.0 {
            return None;
        }
        let t = e2.dot(qv) * inv;
        (t > 0.0 && t < tmax).then_some(TriHit { t, tri: prim, u, v })
    }

    pub fn intersect(&self, ray: &Ray, tmax: f64) -> Option<TriHit> {
        let inv_dir = ray.dir.recip();
        let mut best: Option<TriHit> = None;
        let mut tmax = tmax;
        let mut stack = [0u32; 64];
        let mut sp = 1;
        stack[0] = 0;
        while sp > 0 {
            sp -= 1;
            let idx = stack[sp] as usize;
            let node = &self.nodes[idx];
            if node.bounds.hit(ray.origin, inv_dir, tmax).is_none() {
                continue;
            }
            if node.count > 0 {
                let start = node.offset as usize;
                for &p in &self.prims[start..start + node.count as usize] {
                    if let Some(h) = self.tri_hit(p, ray, tmax) {
                        tmax = h.t;
                        best = Some(h);
                    }
                }
            } else {
                let left = idx + 1;
                let right = node.offset as usize;
                let tl = self.nodes[left].bounds.hit(ray.origin, inv_dir, tmax);
                let tr = self.nodes[right].bounds.hit(ray.origin, inv_dir, tmax);
                // push the farther child first
                match (tl, tr) {
                    (Some(a), Some(b)) => {
                        let (near, far) = if a <= b { (left, right) } else { (right, left) };
                        stack[sp] = far as u32;
                        stack[sp + 1] = near as u32;
                        sp += 2;
                    }
                    (Some(_), None) => {
                        stack[sp] = left as u32;
                        sp += 1;
                    }
                    (None, Some(_)) => {
                        stack[sp] = right as u32;
                        sp += 1;
                    }
                    (None, None) => {}
                }
            }
        }
        best
    }

    pub fn occluded(&self, ray: &Ray, tmax: f64) -> bool {
        let inv_dir = ray.dir.recip();
        let mut stack = [0u32; 64];
        let mut sp = 1;
        stack[0] = 0;
        while sp > 0 {
            sp -= 1;
            let idx = stack[sp] as usize;
            let node = &self.nodes[idx];
            if node.bounds.hit(ray.origin, inv_dir, tmax).is_none() {
                continue;
            }
            if node.count > 0 {
                let start = node.offset as usize;
                if self.prims[start..start + node.count as usize]
                    .iter()
                    .any(|&p| self.tri_hit(p, ray, tmax).is_some())
                {
                    return true;
                }
            } else {
                stack[sp] = node.offset;
                stack[sp + 1] = idx as u32 + 1;
                sp += 2;
            }
        }
        false
    }
}

fn build_recursive(
    nodes: &mut Vec<Node>,
    prims: &mut [u32],
    start: usize,
    end: usize,
    centroids: &[DVec3],
    bounds: &[Aabb],
) -> usize {
    let mut b = Aabb::EMPTY;
    let mut cb = Aabb::EMPTY;
    for &p in &prims[start..end] {
        b.merge(&bounds[p as usize]);
        cb.grow(centroids[p as usize]);
    }
    let idx = nodes.len();
    nodes.push(Node {
        bounds: b,
        offset: start as u32,
        count: (end - start) as u32,
    });
    let n = end - start;
    if n <= LEAF_SIZE {
        return idx;
    }
    let extent = cb.max - cb.min;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    if extent[axis] <= 0.0 {
        return idx;
    }

    // binned SAH along the widest centroid axis
    let lo = cb.min[axis];
    let scale = BINS as f64 / extent[axis];
    let bin_of = |p: u32| (((centroids[p as usize][axis] - lo) * scale) as usize).min(BINS - 1);
    let mut bin_bounds = [Aabb::EMPTY; BINS];
    let mut bin_counts = [0usize; BINS];
    for &p in &prims[start..end] {
        let k = bin_of(p);
        bin_counts[k] += 1;
        bin_bounds[k].merge(&bounds[p as usize]);
    }
    let mut best_cost = f64::INFINITY;
    let mut best_split = 0;
    for split in 1..BINS {
        let (mut lb, mut rb) = (Aabb::EMPTY, Aabb::EMPTY);
        let (mut lc, mut rc) = (0, 0);
        for k in 0..split {
            lb.merge(&bin_bounds[k]);
            lc += bin_counts[k];
        }
        for k in split..BINS {
            rb.merge(&bin_bounds[k]);
            rc += bin_counts[k];
        }
        if lc == 0 || rc == 0 {
            continue;
        }
        let cost = lb.area() * lc as f64 + rb.area() * rc as f64;
        if cost < best_cost {
            best_cost = cost;
            best_split = split;
        }
    }

    let mid = if best_split == 0 {
        // all centroids in one bin: fall back to a median split
        let m = start + n / 2;
        prims[start..end].select_nth_unstable_by(n / 2, |a, b| {
            centroids[*a as usize][axis].total_cmp(&centroids[*b as usize][axis])
        });
        m
    } else {
        let slice = &mut prims[start..end];
        let mut i = 0;
        for j in 0..slice.len() {
            if bin_of(slice[j]) < best_split {
                slice.swap(i, j);
                i += 1;
            }
        }
        start + i
    };

    build_recursive(nodes, prims, start, mid, centroids, bounds);
    let right = build_recursive(nodes, prims, mid, end, centroids, bounds);
    nodes[idx].offset = right as u32;
    nodes[idx].count = 0;
    idx
}
