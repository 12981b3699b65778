//! Small geometric kernels shared by every stage: triangle areas, exact
//! point-triangle distance, ray casting and axis-aligned boxes.

use nalgebra::{Point3, Vector3};

pub type Point = Point3<f64>;
pub type Vec3 = Vector3<f64>;

#[inline]
pub fn triangle_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Unnormalized normal `(b - a) x (c - a)`; its length is twice the area.
#[inline]
pub fn triangle_normal(a: &Point, b: &Point, c: &Point) -> Vec3 {
    (b - a).cross(&(c - a))
}

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision
/// Detection, 5.1.5). Handles degenerate triangles.
pub fn closest_point_on_triangle(p: &Point, a: &Point, b: &Point, c: &Point) -> Point {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let denom = d1 - d3;
        let v = if denom != 0.0 { d1 / denom } else { 0.0 };
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let denom = d2 - d6;
        let w = if denom != 0.0 { d2 / denom } else { 0.0 };
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let denom = (d4 - d3) + (d5 - d6);
        let w = if denom != 0.0 { (d4 - d3) / denom } else { 0.0 };
        return b + (c - b) * w;
    }
    let denom = va + vb + vc;
    if denom == 0.0 || !denom.is_finite() {
        // Degenerate triangle: fall back to the closest of its three edges.
        let cands = [
            closest_point_on_segment(p, a, b),
            closest_point_on_segment(p, b, c),
            closest_point_on_segment(p, c, a),
        ];
        return cands
            .into_iter()
            .min_by(|x, y| (p - x).norm_squared().total_cmp(&(p - y).norm_squared()))
            .unwrap();
    }
    let inv = 1.0 / denom;
    let v = vb * inv;
    let w = vc * inv;
    a + ab * v + ac * w
}

pub fn closest_point_on_segment(p: &Point, a: &Point, b: &Point) -> Point {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return *a;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    a + ab * t
}

#[inline]
pub fn point_triangle_distance_squared(p: &Point, a: &Point, b: &Point, c: &Point) -> f64 {
    (p - closest_point_on_triangle(p, a, b, c)).norm_squared()
}

/// Moller-Trumbore ray/triangle intersection. Returns the ray parameter of
/// the hit when it is strictly positive.
pub fn ray_triangle(origin: &Point, dir: &Vec3, a: &Point, b: &Point, c: &Point) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let tvec = origin - a;
    let u = tvec.dot(&pvec) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&qvec) * inv;
    (t > 0.0).then_some(t)
}

/// Segment `pq` against triangle `abc`; true on a proper crossing.
/// Coplanar overlaps are not reported.
pub fn segment_crosses_triangle(p: &Point, q: &Point, a: &Point, b: &Point, c: &Point) -> bool {
    let dir = q - p;
    match ray_triangle(p, &dir, a, b, c) {
        Some(t) => t < 1.0,
        None => false,
    }
}

/// Triangle/triangle intersection by edge-against-face tests in both
/// directions. Triangles that share a vertex index should be filtered by the
/// caller; coplanar contact is ignored.
pub fn triangles_intersect(t1: [&Point; 3], t2: [&Point; 3]) -> bool {
    for i in 0..3 {
        let (p, q) = (t1[i], t1[(i + 1) % 3]);
        if segment_crosses_triangle(p, q, t2[0], t2[1], t2[2]) {
            return true;
        }
        let (p, q) = (t2[i], t2[(i + 1) % 3]);
        if segment_crosses_triangle(p, q, t1[0], t1[1], t1[2]) {
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Point::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(pts: impl IntoIterator<Item = &'a Point>) -> Self {
        let mut b = Self::empty();
        for p in pts {
            b.grow(p);
        }
        b
    }

    #[inline]
    pub fn grow(&mut self, p: &Point) {
        for k in 0..3 {
            self.min[k] = self.min[k].min(p[k]);
            self.max[k] = self.max[k].max(p[k]);
        }
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        let mut b = *self;
        b.grow(&other.min);
        b.grow(&other.max);
        b
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|k| self.min[k] > self.max[k])
    }

    pub fn center(&self) -> Point {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= other.min[k] && other.max[k] <= self.max[k])
    }

    /// Squared distance from `p` to the box (zero inside).
    #[inline]
    pub fn distance_squared(&self, p: &Point) -> f64 {
        let mut d2 = 0.0;
        for k in 0..3 {
            let v = p[k];
            let d = if v < self.min[k] {
                self.min[k] - v
            } else if v > self.max[k] {
                v - self.max[k]
            } else {
                0.0
            };
            d2 += d * d;
        }
        d2
    }

    /// Slab test. Returns the entry parameter if the ray hits the box before `t_max`.
    #[inline]
    pub fn ray_entry(&self, origin: &Point, inv_dir: &Vec3, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for k in 0..3 {
            let a = (self.min[k] - origin[k]) * inv_dir[k];
            let b = (self.max[k] - origin[k]) * inv_dir[k];
            let (near, far) = if a <= b { (a, b) } else { (b, a) };
            // NaN from 0 * inf compares false and leaves the bounds untouched.
            if near > t0 {
                t0 = near;
            }
            if far < t1 {
                t1 = far;
            }
            if t0 > t1 {
                return None;
            }
        }
        Some(t0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_closest(p: &Point, a: &Point, b: &Point, c: &Point) -> f64 {
        // Dense barycentric sampling gives an upper bound; edges/vertices refine it.
        let mut best = f64::INFINITY;
        let n = 200;
        for i in 0..=n {
            for j in 0..=(n - i) {
                let u = i as f64 / n as f64;
                let v = j as f64 / n as f64;
                let q = a + (b - a) * u + (c - a) * v;
                best = best.min((p - q).norm());
            }
        }
        best
    }

    #[test]
    fn closest_point_matches_dense_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let mut r = || {
                Point::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                )
            };
            let (a, b, c, p) = (r(), r(), r(), r());
            let exact = point_triangle_distance_squared(&p, &a, &b, &c).sqrt();
            let approx = brute_closest(&p, &a, &b, &c);
            assert!(exact <= approx + 1e-12);
            assert!(approx - exact < 2e-2, "{exact} vs {approx}");
        }
    }

    #[test]
    fn degenerate_triangle_distance() {
        let a = Point::new(0.0, 0.0, 0.0);
        let b = Point::new(1.0, 0.0, 0.0);
        let c = Point::new(2.0, 0.0, 0.0);
        let p = Point::new(1.5, 1.0, 0.0);
        assert!((point_triangle_distance_squared(&p, &a, &b, &c) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ray_hits_unit_triangle() {
        let a = Point::new(0.0, 0.0, 0.0);
        let b = Point::new(1.0, 0.0, 0.0);
        let c = Point::new(0.0, 1.0, 0.0);
        let o = Point::new(0.2, 0.2, 1.0);
        let t = ray_triangle(&o, &Vec3::new(0.0, 0.0, -1.0), &a, &b, &c).unwrap();
        assert!((t - 1.0).abs() < 1e-15);
        assert!(ray_triangle(&o, &Vec3::new(0.0, 0.0, 1.0), &a, &b, &c).is_none());
    }

    #[test]
    fn crossing_triangles_detected() {
        let t1 = [
            Point::new(0.0, 0.0, 0.0),
            Point::new(1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
        ];
        let t2 = [
            Point::new(0.2, 0.2, -1.0),
            Point::new(0.2, 0.2, 1.0),
            Point::new(0.3, 0.5, 0.0),
        ];
        assert!(triangles_intersect(
            [&t1[0], &t1[1], &t1[2]],
            [&t2[0], &t2[1], &t2[2]]
        ));
        let t3 = [
            Point::new(5.0, 0.0, 0.0),
            Point::new(6.0, 0.0, 0.0),
            Point::new(5.0, 1.0, 1.0),
        ];
        assert!(!triangles_intersect(
            [&t1[0], &t1[1], &t1[2]],
            [&t3[0], &t3[1], &t3[2]]
        ));
    }
}
