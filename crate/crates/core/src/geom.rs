//! Small geometric helpers shared by the flow and technique modules.

use nalgebra::Vector3;

/// World-space point or vector.
pub type Vec3 = Vector3<f64>;

/// Distance from `p` to the closed segment `a`-`b`.
pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Distance from `p` to a polyline. A single vertex is treated as a point.
pub fn point_polyline_distance(p: &Vec3, line: &[Vec3]) -> f64 {
    match line {
        [] => f64::INFINITY,
        [only] => (p - only).norm(),
        _ => line
            .windows(2)
            .map(|w| point_segment_distance(p, &w[0], &w[1]))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Axis-aligned bounds of a polyline, each side grown by `pad`.
pub fn padded_bounds(points: &[Vec3], pad: f64) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo.add_scalar(-pad), hi.add_scalar(pad))
}
