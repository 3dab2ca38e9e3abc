//! Quadrature rules on triangles and edges.
//!
//! Two triangle rules are enough for this discretization: the degree-2
//! three-point edge-midpoint rule (exact for quadratics, used for the
//! second-moment identities) and the degree-4 six-point Dunavant rule
//! (used for projecting smooth data).

use crate::mesh::TriGeometry;
use crate::vec2::{add, scale, sub, Vec2};

/// Barycentric points and weights of the 6-point Dunavant rule, exact for
/// polynomials of total degree 4. Weights are normalized to sum to 1.
const DUNAVANT6: [(f64, [f64; 3]); 6] = {
    const W1: f64 = 0.223381589678011;
    const A1: f64 = 0.108103018168070;
    const B1: f64 = 0.445948490915965;
    const W2: f64 = 0.109951743655322;
    const A2: f64 = 0.816847572980459;
    const B2: f64 = 0.091576213509771;
    [
        (W1, [A1, B1, B1]),
        (W1, [B1, A1, B1]),
        (W1, [B1, B1, A1]),
        (W2, [A2, B2, B2]),
        (W2, [B2, A2, B2]),
        (W2, [B2, B2, A2]),
    ]
};

/// Edge-midpoint rule, exact for polynomials of total degree 2.
const MIDPOINT3: [(f64, [f64; 3]); 3] = {
    const W: f64 = 1.0 / 3.0;
    const H: f64 = 0.5;
    [
        (W, [H, H, 0.0]),
        (W, [0.0, H, H]),
        (W, [H, 0.0, H]),
    ]
};

fn bary_point(v: &[Vec2; 3], l: [f64; 3]) -> Vec2 {
    [
        l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
        l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
    ]
}

/// Integrate `f` over the triangle with a rule exact for the requested
/// polynomial degree (2 or 4).
pub fn triangle_quadrature(g: &TriGeometry, degree: usize, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
    let rule: &[(f64, [f64; 3])] = match degree {
        0..=2 => &MIDPOINT3,
        3 | 4 => &DUNAVANT6,
        d => panic!("no triangle rule of degree {d}"),
    };
    let mut acc = 0.0;
    for &(w, l) in rule {
        let p = bary_point(&g.vertices, l);
        acc += w * f(p[0], p[1]);
    }
    g.area * acc
}

/// Average of `f` over the segment from `a` to `b`, two-point Gauss rule
/// (exact for cubics along the edge).
pub fn edge_average(a: Vec2, b: Vec2, mut f: impl FnMut(f64, f64) -> f64) -> f64 {
    let mid = scale(0.5, add(a, b));
    let half = scale(0.5 / 3.0_f64.sqrt(), sub(b, a));
    let p0 = sub(mid, half);
    let p1 = add(mid, half);
    0.5 * (f(p0[0], p0[1]) + f(p1[0], p1[1]))
}
