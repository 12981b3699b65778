//! Bounding-volume hierarchy over triangles for nearest-point and first-hit
//! ray queries.

use crate::geom::{closest_point_on_triangle, ray_triangle, Aabb, Point, Vec3};
use crate::mesh::TriangleMesh;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Inner node: index of the left child (right is `left + 1`).
    /// Leaf: first triangle slot.
    start: u32,
    /// Zero for inner nodes.
    count: u32,
}

#[derive(Debug, Clone)]
pub struct TriangleBvh {
    nodes: Vec<Node>,
    /// Triangles in leaf order.
    tris: Vec<[Point; 3]>,
    /// Original triangle index for each slot in `tris`.
    ids: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub distance_squared: f64,
    pub triangle: usize,
    pub point: Point,
}

impl TriangleBvh {
    pub fn new(mesh: &TriangleMesh) -> Self {
        let tris: Vec<[Point; 3]> = (0..mesh.num_faces())
            .map(|f| {
                let [a, b, c] = mesh.triangle(f);
                [*a, *b, *c]
            })
            .collect();
        Self::from_triangles(tris)
    }

    pub fn from_triangles(tris: Vec<[Point; 3]>) -> Self {
        let n = tris.len();
        let centroids: Vec<Point> = tris
            .iter()
            .map(|t| Point::from((t[0].coords + t[1].coords + t[2].coords) / 3.0))
            .collect();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 1);
        nodes.push(Node {
            bounds: Aabb::empty(),
            start: 0,
            count: 0,
        });
        if n > 0 {
            build(&mut nodes, 0, &mut order, 0, &tris, &centroids);
        }
        let sorted = order.iter().map(|&i| tris[i as usize]).collect();
        Self {
            nodes,
            tris: sorted,
            ids: order,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tris.is_empty()
    }

    pub fn len(&self) -> usize {
        self.tris.len()
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    /// Nearest triangle to `p`.
    pub fn nearest(&self, p: &Point) -> Option<Nearest> {
        self.nearest_within(p, f64::INFINITY)
    }

    /// Nearest triangle among those within distance `bound` of `p`; `None`
    /// if no triangle is that close.
    pub fn nearest_within(&self, p: &Point, bound: f64) -> Option<Nearest> {
        if self.tris.is_empty() {
            return None;
        }
        let mut best_d2 = bound * bound;
        let mut best: Option<(usize, Point)> = None;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if node.bounds.distance_squared(p) > best_d2 {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for slot in s..s + node.count as usize {
                    let [a, b, c] = &self.tris[slot];
                    let q = closest_point_on_triangle(p, a, b, c);
                    let d2 = (p - q).norm_squared();
                    if d2 <= best_d2 {
                        best_d2 = d2;
                        best = Some((slot, q));
                    }
                }
            } else {
                let l = node.start;
                let dl = self.nodes[l as usize].bounds.distance_squared(p);
                let dr = self.nodes[l as usize + 1].bounds.distance_squared(p);
                // Visit the nearer child first.
                if dl <= dr {
                    stack.push(l + 1);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(l + 1);
                }
            }
        }
        best.map(|(slot, point)| Nearest {
            distance_squared: best_d2,
            triangle: self.ids[slot] as usize,
            point,
        })
    }

    /// First triangle hit by the ray `origin + t * dir` with `0 < t < t_max`.
    pub fn first_hit(&self, origin: &Point, dir: &Vec3, t_max: f64) -> Option<(f64, usize)> {
        if self.tris.is_empty() {
            return None;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best_t = t_max;
        let mut best: Option<usize> = None;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            match node.bounds.ray_entry(origin, &inv, best_t) {
                None => continue,
                Some(t) if t > best_t => continue,
                _ => {}
            }
            if node.count > 0 {
                let s = node.start as usize;
                for slot in s..s + node.count as usize {
                    let [a, b, c] = &self.tris[slot];
                    if let Some(t) = ray_triangle(origin, dir, a, b, c) {
                        // Equal-distance ties go to the smaller original index.
                        let better = t < best_t
                            || (t == best_t && best.is_some_and(|b| self.ids[slot] < self.ids[b]));
                        if better {
                            best_t = t;
                            best = Some(slot);
                        }
                    }
                }
            } else {
                stack.push(node.start);
                stack.push(node.start + 1);
            }
        }
        best.map(|slot| (best_t, self.ids[slot] as usize))
    }
}

fn build(
    nodes: &mut Vec<Node>,
    ni: usize,
    order: &mut [u32],
    offset: usize,
    tris: &[[Point; 3]],
    centroids: &[Point],
) {
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for &i in order.iter() {
        for p in &tris[i as usize] {
            bounds.grow(p);
        }
        cbounds.grow(&centroids[i as usize]);
    }
    nodes[ni].bounds = bounds;
    if order.len() <= LEAF_SIZE {
        nodes[ni].start = offset as u32;
        nodes[ni].count = order.len() as u32;
        return;
    }
    let ext = cbounds.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis]
            .total_cmp(&centroids[b as usize][axis])
            .then(a.cmp(&b))
    });
    let left = nodes.len();
    let blank = Node {
        bounds: Aabb::empty(),
        start: 0,
        count: 0,
    };
    nodes.push(blank.clone());
    nodes.push(blank);
    nodes[ni].start = left as u32;
    nodes[ni].count = 0;
    let (lo, hi) = order.split_at_mut(mid);
    build(nodes, left, lo, offset, tris, centroids);
    build(nodes, left + 1, hi, offset + mid, tris, centroids);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::point_triangle_distance_squared;
    use crate::mesh::primitives;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_soup(n: usize, seed: u64) -> TriangleMesh {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = TriangleMesh::default();
        for i in 0..n {
            let c = Point::new(
                rng.gen_range(-0.4..0.4),
                rng.gen_range(-0.4..0.4),
                rng.gen_range(-0.4..0.4),
            );
            for _ in 0..3 {
                m.vertices.push(
                    c + Vec3::new(
                        rng.gen_range(-0.05..0.05),
                        rng.gen_range(-0.05..0.05),
                        rng.gen_range(-0.05..0.05),
                    ),
                );
            }
            let b = 3 * i as u32;
            m.faces.push([b, b + 1, b + 2]);
        }
        m
    }

    #[test]
    fn leaves_partition_triangles_and_boxes_nest() {
        let bvh = TriangleBvh::new(&random_soup(301, 1));
        let mut seen = vec![0; 301];
        for (ni, n) in bvh.nodes.iter().enumerate() {
            if n.count > 0 {
                for s in n.start..n.start + n.count {
                    seen[bvh.ids[s as usize] as usize] += 1;
                    for p in &bvh.tris[s as usize] {
                        assert!(n.bounds.distance_squared(p) == 0.0);
                    }
                }
            } else {
                for c in [n.start, n.start + 1] {
                    assert!(
                        n.bounds.contains(&bvh.nodes[c as usize].bounds),
                        "node {ni}"
                    );
                }
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn nearest_matches_brute_force() {
        let mesh = random_soup(500, 2);
        let bvh = TriangleBvh::new(&mesh);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let p = Point::new(
                rng.gen_range(-0.6..0.6),
                rng.gen_range(-0.6..0.6),
                rng.gen_range(-0.6..0.6),
            );
            let brute = (0..mesh.num_faces())
                .map(|f| {
                    let [a, b, c] = mesh.triangle(f);
                    point_triangle_distance_squared(&p, a, b, c)
                })
                .fold(f64::INFINITY, f64::min);
            let got = bvh.nearest(&p).unwrap();
            assert_eq!(got.distance_squared, brute);
            let bounded = bvh.nearest_within(&p, brute.sqrt() * (1.0 + 1e-9)).unwrap();
            assert_eq!(bounded.distance_squared, brute);
            assert!(bvh.nearest_within(&p, brute.sqrt() * 0.99).is_none());
        }
    }

    #[test]
    fn first_hit_matches_brute_force() {
        let mesh = primitives::icosphere(0.3, 3);
        let bvh = TriangleBvh::new(&mesh);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let o = Point::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 1.0);
            let d = (Point::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2), 0.0) - o)
                .normalize();
            let brute = (0..mesh.num_faces())
                .filter_map(|f| {
                    let [a, b, c] = mesh.triangle(f);
                    ray_triangle(&o, &d, a, b, c)
                })
                .fold(f64::INFINITY, f64::min);
            match bvh.first_hit(&o, &d, f64::INFINITY) {
                Some((t, _)) => assert_eq!(t, brute),
                None => assert!(brute.is_infinite()),
            }
        }
    }
}
