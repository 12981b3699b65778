//! Exact orientation and in-sphere signs, with symbolic perturbation for
//! cospherical configurations.

use crate::geom::Point;
use robust::Coord3D;

#[inline]
fn c(p: &Point) -> Coord3D<f64> {
    Coord3D {
        x: p.x,
        y: p.y,
        z: p.z,
    }
}

/// Sign of `det[a - d; b - d; c - d]`: positive when the normal of `abc`
/// (right-hand rule) points away from `d`.
#[inline]
pub fn orient3d(a: &Point, b: &Point, cc: &Point, d: &Point) -> f64 {
    robust::orient3d(c(a), c(b), c(cc), c(d))
}

/// Positive when `e` is strictly inside the sphere through the positively
/// oriented tet `abcd`, negative outside, zero when cospherical.
#[inline]
pub fn insphere(a: &Point, b: &Point, cc: &Point, d: &Point, e: &Point) -> f64 {
    robust::insphere(c(a), c(b), c(cc), c(d), c(e))
}

/// In-sphere sign that is never zero. Ties are resolved as if each point
/// were lifted off the paraboloid by an infinitesimal amount that grows with
/// its index. The leading surviving term for row `j` of the lifted 5x5
/// determinant is `(-1)^(j+1)` times the orientation of the other four
/// rows. The row of `e` always survives because `abcd` is non-degenerate.
pub fn insphere_perturbed(pts: &[Point], tet: [u32; 4], e: u32) -> i8 {
    let [a, b, cc, d] = tet.map(|i| &pts[i as usize]);
    let pe = &pts[e as usize];
    let s = insphere(a, b, cc, d, pe);
    if s > 0.0 {
        return 1;
    }
    if s < 0.0 {
        return -1;
    }
    let rows = [tet[0], tet[1], tet[2], tet[3], e];
    let mut order = [0usize, 1, 2, 3, 4];
    order.sort_unstable_by(|&x, &y| rows[y].cmp(&rows[x]));
    for j in order {
        let others: Vec<&Point> = (0..5).filter(|&k| k != j).map(|k| &pts[rows[k] as usize]).collect();
        let o = orient3d(others[0], others[1], others[2], others[3]);
        if o != 0.0 {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            return if sign * o > 0.0 { 1 } else { -1 };
        }
    }
    unreachable!("degenerate tetrahedron in insphere_perturbed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_convention() {
        let a = Point::new(1.0, 0.0, 0.0);
        let b = Point::new(0.0, 1.0, 0.0);
        let cc = Point::new(0.0, 0.0, 1.0);
        let d = Point::origin();
        assert!(orient3d(&a, &b, &cc, &d) > 0.0);
        let n = (b - a).cross(&(cc - a));
        assert!(n.dot(&(d - a)) < 0.0);
        assert!(insphere(&a, &b, &cc, &d, &Point::new(0.5, 0.5, 0.5)) > 0.0);
        assert!(insphere(&a, &b, &cc, &d, &Point::new(2.0, 2.0, 2.0)) < 0.0);
    }

    #[test]
    fn perturbation_decides_cospherical_points() {
        // Cube corners are cospherical; every tie must get a definite and
        // antisymmetric answer.
        let pts: Vec<Point> = (0..8)
            .map(|i| Point::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
            .collect();
        let mut tet = [0u32, 1, 2, 4];
        if orient3d(&pts[0], &pts[1], &pts[2], &pts[4]) < 0.0 {
            tet.swap(0, 1);
        }
        assert_eq!(insphere(&pts[0], &pts[1], &pts[2], &pts[4], &pts[7]), 0.0);
        let s = insphere_perturbed(&pts, tet, 7);
        assert!(s == 1 || s == -1);
        // Swapping two vertices and restoring orientation keeps the answer.
        let tet2 = [tet[1], tet[0], tet[3], tet[2]];
        assert_eq!(insphere_perturbed(&pts, tet2, 7), s);
    }

    #[test]
    fn perturbation_matches_small_lift() {
        // The lifted perturbation on a non-degenerate configuration agrees
        // with the sign after an explicit tiny lift of the highest index.
        let pts = vec![
            Point::new(1.0, 0.0, 0.0),
            Point::new(-1.0, 0.0, 0.0),
            Point::new(0.0, 1.0, 0.0),
            Point::new(0.0, 0.0, 1.0),
            Point::new(0.0, -1.0, 0.0),
        ];
        let mut tet = [0u32, 1, 2, 3];
        if orient3d(&pts[0], &pts[1], &pts[2], &pts[3]) < 0.0 {
            tet.swap(0, 1);
        }
        // Point 4 (largest index, largest lift) moves outward: outside.
        assert_eq!(insphere_perturbed(&pts, tet, 4), -1);
        let shrunk = Point::new(0.0, -1.0 + 1e-9, 0.0);
        let mut moved = pts.clone();
        moved[4] = shrunk;
        assert_eq!(insphere_perturbed(&moved, tet, 4), 1);
    }
}
