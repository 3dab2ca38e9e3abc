//! Small helpers for points and vectors in the plane.

pub type Vec2 = [f64; 2];

#[inline]
pub fn add(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn scale(s: f64, a: Vec2) -> Vec2 {
    [s * a[0], s * a[1]]
}

#[inline]
pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm(a: Vec2) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: Vec2, b: Vec2) -> f64 {
    norm(sub(a, b))
}

/// Rotate by -90 degrees: maps a counterclockwise edge direction to the
/// outward normal of the region on its left.
#[inline]
pub fn rot_cw(a: Vec2) -> Vec2 {
    [a[1], -a[0]]
}

/// Rotate by +90 degrees.
#[inline]
pub fn rot_ccw(a: Vec2) -> Vec2 {
    [-a[1], a[0]]
}

/// Twice the signed area of the triangle (a, b, c); positive when
/// counterclockwise.
#[inline]
pub fn cross2(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}
