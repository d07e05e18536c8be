//! Bounding-volume hierarchy for first-hit ray queries.
//!
//! First-hit results are defined to match a linear scan over all triangles
//! exactly: the nearest intersection with distance > 1e-9 wins, and exact
//! distance ties resolve to the lower triangle id.

use nalgebra::{Point3, Vector3};

use super::TriangleMesh;

/// Minimum accepted hit distance; rejects self-hits for on-surface origins.
const T_MIN: f64 = 1e-9;

/// First-hit query result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub triangle: u32,
    pub point: Point3<f64>,
    pub distance: f64,
}

#[derive(Debug, Clone, Copy)]
struct Aabb {
    min: Point3<f64>,
    max: Point3<f64>,
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    fn grow_point(&mut self, p: &Point3<f64>) {
        for a in 0..3 {
            self.min[a] = self.min[a].min(p[a]);
            self.max[a] = self.max[a].max(p[a]);
        }
    }

    fn grow(&mut self, other: &Aabb) {
        for a in 0..3 {
            self.min[a] = self.min[a].min(other.min[a]);
            self.max[a] = self.max[a].max(other.max[a]);
        }
    }

    /// Slab test returning the entry distance, or None when the ray misses
    /// or the box lies entirely beyond `t_max`.
    #[inline]
    fn entry(&self, origin: &Point3<f64>, inv_dir: &Vector3<f64>, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for a in 0..3 {
            let lo = (self.min[a] - origin[a]) * inv_dir[a];
            let hi = (self.max[a] - origin[a]) * inv_dir[a];
            let (near, far) = if lo <= hi { (lo, hi) } else { (hi, lo) };
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

struct Node {
    aabb: Aabb,
    /// Leaf: index of the first triangle slot. Internal: index of the right
    /// child (the left child is always the next node in depth-first order).
    index: u32,
    /// Leaf: number of triangles; internal: 0.
    len: u32,
}

/// Spatial index over mesh triangles supporting first-hit queries.
pub struct RayAccelerator {
    nodes: Vec<Node>,
    /// Triangle ids ordered by tree construction.
    order: Vec<u32>,
    /// Per-triangle corner cache in `order`, flattened.
    corners: Vec<[Point3<f64>; 3]>,
}

const LEAF_SIZE: usize = 4;

impl RayAccelerator {
    pub fn build(mesh: &TriangleMesh) -> Self {
        let n = mesh.triangle_count();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let centroids: Vec<Point3<f64>> = (0..n)
            .map(|i| {
                let [a, b, c] = mesh.corners(i);
                Point3::from((a.coords + b.coords + c.coords) / 3.0)
            })
            .collect();
        let boxes: Vec<Aabb> = (0..n)
            .map(|i| {
                let mut bb = Aabb::empty();
                for p in mesh.corners(i) {
                    bb.grow_point(&p);
                }
                bb
            })
            .collect();

        let mut nodes = Vec::with_capacity(2 * n);
        build_node(&mut nodes, &mut order, 0, &centroids, &boxes);

        let corners = order.iter().map(|&t| mesh.corners(t as usize)).collect();
        RayAccelerator {
            nodes,
            order,
            corners,
        }
    }

    /// Nearest intersection along `direction` (unit) from `origin`, with
    /// distance strictly greater than 1e-9.
    pub fn first_hit(&self, origin: &Point3<f64>, direction: &Vector3<f64>) -> Option<RayHit> {
        let inv_dir = Vector3::new(1.0 / direction.x, 1.0 / direction.y, 1.0 / direction.z);
        let mut best_t = f64::INFINITY;
        let mut best: Option<(u32, f64)> = None;

        let mut stack = [0u32; 64];
        let mut sp = 0usize;
        stack[sp] = 0;
        sp += 1;

        while sp > 0 {
            sp -= 1;
            let ni = stack[sp] as usize;
            let node = &self.nodes[ni];
            // Re-test against the current best so stale stack entries prune;
            // boxes entered exactly at best_t stay searchable so the lowest
            // triangle id wins exact distance ties.
            if node.aabb.entry(origin, &inv_dir, best_t).is_none() {
                continue;
            }
            if node.len > 0 {
                for slot in node.index..node.index + node.len {
                    let tri = &self.corners[slot as usize];
                    if let Some(t) = ray_triangle(origin, direction, tri) {
                        let id = self.order[slot as usize];
                        let better = t < best_t
                            || (t == best_t && best.map(|(b, _)| id < b).unwrap_or(true));
                        if better {
                            best_t = t;
                            best = Some((id, t));
                        }
                    }
                }
            } else {
                // Near child pushed last so it pops first.
                let l = ni + 1;
                let r = node.index as usize;
                let el = self.nodes[l].aabb.entry(origin, &inv_dir, best_t);
                let er = self.nodes[r].aabb.entry(origin, &inv_dir, best_t);
                match (el, er) {
                    (Some(a), Some(b)) => {
                        let (near, far) = if a <= b { (l, r) } else { (r, l) };
                        stack[sp] = far as u32;
                        sp += 1;
                        stack[sp] = near as u32;
                        sp += 1;
                    }
                    (Some(_), None) => {
                        stack[sp] = l as u32;
                        sp += 1;
                    }
                    (None, Some(_)) => {
                        stack[sp] = r as u32;
                        sp += 1;
                    }
                    (None, None) => {}
                }
            }
        }
        best.map(|(id, t)| RayHit {
            triangle: id,
            point: origin + direction * t,
            distance: t,
        })
    }
}

fn build_node(
    nodes: &mut Vec<Node>,
    order: &mut [u32],
    offset: usize,
    centroids: &[Point3<f64>],
    boxes: &[Aabb],
) -> u32 {
    let count = order.len();
    let mut aabb = Aabb::empty();
    for &t in order.iter() {
        aabb.grow(&boxes[t as usize]);
    }

    let my_index = nodes.len();
    nodes.push(Node {
        aabb,
        index: 0,
        len: 0,
    });

    if count <= LEAF_SIZE {
        nodes[my_index].index = offset as u32;
        nodes[my_index].len = count as u32;
        return my_index as u32;
    }

    // Split along widest centroid axis at the median, ties by triangle id
    // for deterministic construction.
    let mut cmin = [f64::INFINITY; 3];
    let mut cmax = [f64::NEG_INFINITY; 3];
    for &t in order.iter() {
        let c = centroids[t as usize];
        for a in 0..3 {
            cmin[a] = cmin[a].min(c[a]);
            cmax[a] = cmax[a].max(c[a]);
        }
    }
    let axis = (0..3)
        .max_by(|&a, &b| (cmax[a] - cmin[a]).total_cmp(&(cmax[b] - cmin[b])))
        .unwrap();

    let mid = count / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis]
            .total_cmp(&centroids[b as usize][axis])
            .then(a.cmp(&b))
    });

    let (left, right) = order.split_at_mut(mid);
    build_node(nodes, left, offset, centroids, boxes);
    let right_index = build_node(nodes, right, offset + mid, centroids, boxes);
    nodes[my_index].index = right_index;
    my_index as u32
}

/// Möller–Trumbore intersection; returns the hit distance when it exceeds
/// the self-hit threshold.
#[inline]
pub fn ray_triangle(
    origin: &Point3<f64>,
    direction: &Vector3<f64>,
    tri: &[Point3<f64>; 3],
) -> Option<f64> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = direction.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-13 {
        return None;
    }
    let inv_det = 1.0 / det;
    let s = origin - tri[0];
    let u = s.dot(&p) * inv_det;
    if !(-1e-12..=1.0 + 1e-12).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = direction.dot(&q) * inv_det;
    if v < -1e-12 || u + v > 1.0 + 1e-12 {
        return None;
    }
    let t = e2.dot(&q) * inv_det;
    if t > T_MIN {
        Some(t)
    } else {
        None
    }
}

/// Reference first-hit: linear scan over every triangle with the same
/// intersection predicate and tie rule as the accelerator.
pub fn linear_first_hit(
    mesh: &TriangleMesh,
    origin: &Point3<f64>,
    direction: &Vector3<f64>,
) -> Option<RayHit> {
    let mut best: Option<RayHit> = None;
    for i in 0..mesh.triangle_count() {
        let tri = mesh.corners(i);
        if let Some(t) = ray_triangle(origin, direction, &tri) {
            let better = match &best {
                None => true,
                Some(b) => t < b.distance,
            };
            if better {
                best = Some(RayHit {
                    triangle: i as u32,
                    point: origin + direction * t,
                    distance: t,
                });
            }
        }
    }
    best
}
