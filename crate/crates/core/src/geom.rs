//! Small planar geometry kit: vectors, rotations, segment predicates and
//! segment/circle intersection.

pub type Point = [f64; 2];

/// Absolute tolerance for all coordinate matching.
pub const TOL: f64 = 1e-9;

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

pub fn rotate(a: Point, angle: f64) -> Point {
    let (s, c) = angle.sin_cos();
    [c * a[0] - s * a[1], s * a[0] + c * a[1]]
}

pub fn rotate_about(a: Point, center: Point, angle: f64) -> Point {
    add(center, rotate(sub(a, center), angle))
}

/// Angle of `a` in `[0, 2π)`.
pub fn angle(a: Point) -> f64 {
    let t = a[1].atan2(a[0]);
    if t < 0.0 {
        t + std::f64::consts::TAU
    } else {
        t
    }
}

/// Distance from `p` to the closed segment `ab`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0);
    dist(p, add(a, scale(ab, t)))
}

/// True when the open segments `ab` and `cd` cross at a single interior
/// point of both. Touching at endpoints and collinear overlap do not count
/// as a crossing; [`segments_overlap`] reports the latter.
pub fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = cross(sub(b, a), sub(c, a));
    let d2 = cross(sub(b, a), sub(d, a));
    let d3 = cross(sub(d, c), sub(a, c));
    let d4 = cross(sub(d, c), sub(b, c));
    let eps = TOL * (norm(sub(b, a)) + norm(sub(d, c)) + 1.0);
    ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) && ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps))
}

/// True when two segments are collinear and share more than a point, or
/// when an endpoint of one lies in the interior of the other.
pub fn segments_overlap(a: Point, b: Point, c: Point, d: Point) -> bool {
    let interior =
        |p: Point, s: Point, e: Point| point_segment_distance(p, s, e) < TOL && dist(p, s) > TOL && dist(p, e) > TOL;
    interior(c, a, b) || interior(d, a, b) || interior(a, c, d) || interior(b, c, d)
}

/// Parameters `t ∈ (0, 1)` where segment `a + t(b - a)` meets the circle of
/// radius `r` about the origin, with the sign of `d|x|²/dt` at each root
/// (positive means the segment is heading outward).
///
/// Returns `None` when the configuration is degenerate: an endpoint on the
/// circle or the segment tangent to it.
pub fn segment_circle_roots(a: Point, b: Point, r: f64) -> Option<Vec<(f64, bool)>> {
    if (norm(a) - r).abs() < TOL || (norm(b) - r).abs() < TOL {
        return None;
    }
    let d = sub(b, a);
    let qa = dot(d, d);
    let qb = 2.0 * dot(a, d);
    let qc = dot(a, a) - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    // Tangency: closest approach of the supporting line within tolerance of r.
    let t_closest = (-qb / (2.0 * qa)).clamp(0.0, 1.0);
    let closest = norm(add(a, scale(d, t_closest)));
    if (closest - r).abs() < TOL && t_closest > 0.0 && t_closest < 1.0 {
        return None;
    }
    if disc <= 0.0 {
        return Some(Vec::new());
    }
    let sq = disc.sqrt();
    let mut roots = Vec::with_capacity(2);
    for (t, outward) in [((-qb - sq) / (2.0 * qa), false), ((-qb + sq) / (2.0 * qa), true)] {
        if t > 0.0 && t < 1.0 {
            roots.push((t, outward));
        }
    }
    Some(roots)
}

/// 2×2 determinant of column vectors.
pub fn det(a: Point, b: Point) -> f64 {
    cross(a, b)
}
