//! Minimal enclosing sphere (Welzl, move-to-front iterative form).

use rand::seq::SliceRandom;
use rand::SeedableRng;

use crate::math::DVec3;
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingSphere {
    pub center: DVec3,
    pub radius: f64,
}

impl BoundingSphere {
    fn contains(&self, p: DVec3, eps: f64) -> bool {
        (p - self.center).length() <= self.radius + eps
    }
}

/// Smallest sphere enclosing all points. The points are shuffled with a fixed
/// seed so the result is deterministic.
pub fn min_bounding_sphere(points: &[DVec3]) -> BoundingSphere {
    assert!(!points.is_empty());
    let mut pts = points.to_vec();
    pts.shuffle(&mut Rng::seed_from_u64(0x5eed));
    let extent = pts
        .iter()
        .fold(0f64, |m, p| m.max((*p - pts[0]).abs().max_element()));
    let eps = 1e-12 * extent.max(1.0);

    let mut ball = BoundingSphere {
        center: pts[0],
        radius: 0.0,
    };
    for i in 1..pts.len() {
        if !ball.contains(pts[i], eps) {
            ball = with_one(&pts[..i], pts[i], eps);
        }
    }
    ball
}

fn with_one(pts: &[DVec3], q: DVec3, eps: f64) -> BoundingSphere {
    let mut ball = BoundingSphere {
        center: q,
        radius: 0.0,
    };
    for j in 0..pts.len() {
        if !ball.contains(pts[j], eps) {
            ball = with_two(&pts[..j], q, pts[j], eps);
        }
    }
    ball
}

fn with_two(pts: &[DVec3], q1: DVec3, q2: DVec3, eps: f64) -> BoundingSphere {
    let mut ball = diametral(q1, q2);
    for k in 0..pts.len() {
        if !ball.contains(pts[k], eps) {
            ball = with_three(&pts[..k], q1, q2, pts[k], eps);
        }
    }
    ball
}

fn with_three(pts: &[DVec3], q1: DVec3, q2: DVec3, q3: DVec3, eps: f64) -> BoundingSphere {
    let mut ball = circumball3(q1, q2, q3);
    for l in 0..pts.len() {
        if !ball.contains(pts[l], eps) {
            ball = circumball4(q1, q2, q3, pts[l]);
        }
    }
    ball
}

fn diametral(a: DVec3, b: DVec3) -> BoundingSphere {
    BoundingSphere {
        center: 0.5 * (a + b),
        radius: 0.5 * (a - b).length(),
    }
}

/// Smallest sphere with all three points on its boundary (their circumcircle).
fn circumball3(a: DVec3, b: DVec3, c: DVec3) -> BoundingSphere {
    let ab = b - a;
    let ac = c - a;
    let n = ab.cross(ac);
    let denom = 2.0 * n.length_squared();
    if denom < 1e-300 {
        // collinear: the widest pair spans the others
        return [diametral(a, b), diametral(a, c), diametral(b, c)]
            .into_iter()
            .max_by(|x, y| x.radius.total_cmp(&y.radius))
            .unwrap();
    }
    let offset = (ab.length_squared() * ac.cross(n) + ac.length_squared() * n.cross(ab)) / denom;
    BoundingSphere {
        center: a + offset,
        radius: offset.length(),
    }
}

fn circumball4(a: DVec3, b: DVec3, c: DVec3, d: DVec3) -> BoundingSphere {
    let u = b - a;
    let v = c - a;
    let w = d - a;
    let det = u.dot(v.cross(w));
    if det.abs() < 1e-300 {
        // coplanar support: pick the smallest circumball3 that holds all four
        let candidates = [
            circumball3(a, b, c),
            circumball3(a, b, d),
            circumball3(a, c, d),
            circumball3(b, c, d),
        ];
        return candidates
            .iter()
            .filter(|s| [a, b, c, d].iter().all(|p| s.contains(*p, 1e-9 * s.radius.max(1e-12))))
            .min_by(|x, y| x.radius.total_cmp(&y.radius))
            .copied()
            .unwrap_or(candidates[0]);
    }
    let offset = (u.length_squared() * v.cross(w)
        + v.length_squared() * w.cross(u)
        + w.length_squared() * u.cross(v))
        / (2.0 * det);
    BoundingSphere {
        center: a + offset,
        radius: offset.length(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn ball_of_regular_tetrahedron() {
        let pts = [
            DVec3::new(1.0, 1.0, 1.0),
            DVec3::new(1.0, -1.0, -1.0),
            DVec3::new(-1.0, 1.0, -1.0),
            DVec3::new(-1.0, -1.0, 1.0),
        ];
        let s = min_bounding_sphere(&pts);
        assert!(s.center.length() < 1e-12);
        assert!((s.radius - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn interior_points_do_not_change_the_ball() {
        let mut pts = vec![DVec3::new(-2.0, 0.0, 0.0), DVec3::new(2.0, 0.0, 0.0)];
        let mut rng = Rng::seed_from_u64(3);
        for _ in 0..200 {
            let p = DVec3::new(rng.random(), rng.random(), rng.random()) - 0.5;
            pts.push(p);
        }
        let s = min_bounding_sphere(&pts);
        assert!(s.center.length() < 1e-12);
        assert!((s.radius - 2.0).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_on_small_sets() {
        // brute force: among all balls defined by 2..=4 support points, the
        // smallest one enclosing every point
        let mut rng = Rng::seed_from_u64(11);
        for _ in 0..20 {
            let pts: Vec<DVec3> = (0..7)
                .map(|_| DVec3::new(rng.random(), rng.random(), rng.random()))
                .collect();
            let mut best = f64::INFINITY;
            let n = pts.len();
            let encloses = |s: &BoundingSphere| pts.iter().all(|p| s.contains(*p, 1e-9));
            for i in 0..n {
                for j in i + 1..n {
                    let s = diametral(pts[i], pts[j]);
                    if encloses(&s) {
                        best = best.min(s.radius);
                    }
                    for k in j + 1..n {
                        let s = circumball3(pts[i], pts[j], pts[k]);
                        if encloses(&s) {
                            best = best.min(s.radius);
                        }
                        for l in k + 1..n {
                            let s = circumball4(pts[i], pts[j], pts[k], pts[l]);
                            if encloses(&s) {
                                best = best.min(s.radius);
                            }
                        }
                    }
                }
            }
            let s = min_bounding_sphere(&pts);
            assert!(encloses(&s));
            assert!((s.radius - best).abs() < 1e-9, "{} vs {}", s.radius, best);
        }
    }
}
