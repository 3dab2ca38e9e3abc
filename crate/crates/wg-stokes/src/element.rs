//! Element-level kernels: discrete weak gradients and divergences of the
//! lowest-order weak basis functions, and the closed-form local matrices
//! they induce.
//!
//! On a triangle `T` the scalar weak space has four basis functions: the
//! cell indicator and one indicator per edge. Their weak gradients live in
//! the local Raviart-Thomas space `RT0(T) = span{(1,0), (0,1), x - x_T}`
//! and have fully explicit coefficients, so no local solves or quadrature
//! are needed to assemble the stiffness matrix.

use crate::mesh::TriGeometry;
use crate::vec2::{add, scale, sub, Vec2};

/// A field of the form `radial * (x - x_T) + constant`, which is exactly
/// the shape of every lowest-order weak gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearVectorField {
    pub radial: f64,
    pub constant: Vec2,
}

impl LinearVectorField {
    pub const ZERO: LinearVectorField = LinearVectorField {
        radial: 0.0,
        constant: [0.0, 0.0],
    };

    pub fn eval(&self, centroid: Vec2, x: Vec2) -> Vec2 {
        add(scale(self.radial, sub(x, centroid)), self.constant)
    }

    /// `self + s * other`; the space is closed under linear combinations.
    pub fn axpy(&self, s: f64, other: &LinearVectorField) -> LinearVectorField {
        LinearVectorField {
            radial: self.radial + s * other.radial,
            constant: add(self.constant, scale(s, other.constant)),
        }
    }
}

/// Weak gradient of the cell basis function (1 on the cell interior, 0 on
/// all edges): `-C_T (x - x_T)`.
pub fn weak_gradient_cell(g: &TriGeometry) -> LinearVectorField {
    LinearVectorField {
        radial: -g.c_t,
        constant: [0.0, 0.0],
    }
}

/// Weak gradient of the edge basis function of local edge `e` (1 on that
/// edge, 0 elsewhere): `(C_T / 3)(x - x_T) + (|e| / |T|) n_e`, with the
/// outward normal.
pub fn weak_gradient_edge(g: &TriGeometry, e: usize) -> LinearVectorField {
    LinearVectorField {
        radial: g.c_t / 3.0,
        constant: scale(g.lengths[e] / g.area, g.normals[e]),
    }
}

/// Weak divergence of the vector basis function that is `e_k` (the `k`-th
/// unit vector) on local edge `e` and zero elsewhere: `|e| n_{e,k} / |T|`
/// with the outward normal. Cell basis functions have zero weak divergence.
pub fn weak_divergence_edge(g: &TriGeometry, e: usize, k: usize) -> f64 {
    g.lengths[e] * g.normals[e][k] / g.area
}

/// Closed-form local matrices of one triangle.
///
/// Scalar dof ordering is `[cell, edge 0, edge 1, edge 2]`. `stiffness`
/// contains `(grad_w phi_j, grad_w phi_i)_T`; `div` contains the local
/// divergence coefficients `d[k][e] = |e| n_{e,k} / |T|` (outward normal),
/// so `(div_w v, 1)_T = |T| * sum_{e,k} d[k][e] v_{b,e,k}`.
#[derive(Debug, Clone)]
pub struct LocalMatrices {
    pub stiffness: [[f64; 4]; 4],
    pub div: [[f64; 3]; 2],
    pub area: f64,
}

/// Assemble the local matrices from the closed forms. With the cross
/// moments `int_T (x - x_T) dx = 0` and the second-moment identity behind
/// `C_T`, the Gram matrix of the weak gradients reduces to:
///
/// * cell/cell: `2 |T| C_T`
/// * cell/edge: `-(2/3) |T| C_T`
/// * edge/edge: `(2/9) |T| C_T + |e||e'| (n_e . n_e') / |T|`
pub fn local_matrices(g: &TriGeometry) -> LocalMatrices {
    let mut s = [[0.0; 4]; 4];
    let a_ct = g.area * g.c_t;
    s[0][0] = 2.0 * a_ct;
    for e in 0..3 {
        s[0][e + 1] = -(2.0 / 3.0) * a_ct;
        s[e + 1][0] = s[0][e + 1];
        for f in 0..3 {
            let dot = g.normals[e][0] * g.normals[f][0] + g.normals[e][1] * g.normals[f][1];
            s[e + 1][f + 1] = (2.0 / 9.0) * a_ct + g.lengths[e] * g.lengths[f] * dot / g.area;
        }
    }
    let mut div = [[0.0; 3]; 2];
    for e in 0..3 {
        for k in 0..2 {
            div[k][e] = weak_divergence_edge(g, e, k);
        }
    }
    LocalMatrices {
        stiffness: s,
        div,
        area: g.area,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::TriGeometry;
    use crate::quadrature::triangle_quadrature;
    use crate::vec2::cross2;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn reference() -> TriGeometry {
        TriGeometry::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    }

    /// Integrate the dot product of two linear vector fields over T by
    /// quadrature; degree 2 is exact here.
    fn gram_entry(g: &TriGeometry, u: &LinearVectorField, v: &LinearVectorField) -> f64 {
        triangle_quadrature(g, 2, |x, y| {
            let a = u.eval(g.centroid, [x, y]);
            let b = v.eval(g.centroid, [x, y]);
            a[0] * b[0] + a[1] * b[1]
        })
    }

    /// Residual of the defining equation of the weak gradient,
    /// `(grad_w v, tau)_T + (v0, div tau)_T - <v_b, tau . n>_dT`,
    /// for `tau` ranging over a basis of RT0(T). `v0` is the cell value and
    /// `vb` the three edge values of a scalar weak function.
    fn defining_equation_residual(g: &TriGeometry, grad: &LinearVectorField, v0: f64, vb: [f64; 3]) -> f64 {
        let taus = [
            (LinearVectorField { radial: 0.0, constant: [1.0, 0.0] }, 0.0),
            (LinearVectorField { radial: 0.0, constant: [0.0, 1.0] }, 0.0),
            (LinearVectorField { radial: 1.0, constant: [0.0, 0.0] }, 2.0),
        ];
        let mut worst = 0.0f64;
        for (tau, div_tau) in taus {
            let lhs = gram_entry(g, grad, &tau);
            let vol = v0 * div_tau * g.area;
            let mut bdry = 0.0;
            for e in 0..3 {
                // tau . n is linear along each edge, so two-point Gauss is
                // exact for the boundary term.
                let p = g.vertices[(e + 1) % 3];
                let q = g.vertices[(e + 2) % 3];
                let n = g.normals[e];
                let flux = crate::quadrature::edge_average(p, q, |x, y| {
                    let t = tau.eval(g.centroid, [x, y]);
                    t[0] * n[0] + t[1] * n[1]
                });
                bdry += vb[e] * flux * g.lengths[e];
            }
            worst = worst.max((lhs + vol - bdry).abs());
        }
        worst
    }

    #[test]
    fn cell_gradient_on_reference_triangle() {
        let g = reference();
        let grad = weak_gradient_cell(&g);
        assert_relative_eq!(grad.radial, -18.0);
        assert_eq!(grad.constant, [0.0, 0.0]);
    }

    #[test]
    fn edge_gradient_on_reference_triangle() {
        let g = reference();
        // Hypotenuse (local edge 0): radial C_T/3 = 6,
        // constant (|e|/|T|) n = (sqrt(2)/0.5)(1,1)/sqrt(2) = (2,2).
        let grad = weak_gradient_edge(&g, 0);
        assert_relative_eq!(grad.radial, 6.0);
        assert_relative_eq!(grad.constant[0], 2.0);
        assert_relative_eq!(grad.constant[1], 2.0);
    }

    #[test]
    fn weak_divergence_on_reference_triangle() {
        let g = reference();
        // Hypotenuse, y-component: |e| n_y / |T| = sqrt(2) (1/sqrt(2)) / 0.5 = 2.
        assert_relative_eq!(weak_divergence_edge(&g, 0, 1), 2.0);
        // Vertical leg (local edge 1), outward normal (-1, 0).
        assert_relative_eq!(weak_divergence_edge(&g, 1, 0), -2.0);
        assert_relative_eq!(weak_divergence_edge(&g, 1, 1), 0.0);
    }

    #[test]
    fn local_stiffness_on_reference_triangle() {
        let g = reference();
        let m = local_matrices(&g);
        assert_relative_eq!(m.stiffness[0][0], 18.0);
        assert_relative_eq!(m.stiffness[0][1], -6.0);
        // Hypotenuse diagonal entry: (2/9)(0.5)(18) + 2 * 1 / 0.5 = 2 + 4 = 6.
        assert_relative_eq!(m.stiffness[1][1], 6.0);
    }

    #[test]
    fn local_stiffness_matches_quadrature_gram_matrix() {
        let g = TriGeometry::new([[0.3, -0.2], [1.9, 0.1], [0.6, 1.4]]);
        let m = local_matrices(&g);
        let basis = [
            weak_gradient_cell(&g),
            weak_gradient_edge(&g, 0),
            weak_gradient_edge(&g, 1),
            weak_gradient_edge(&g, 2),
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(
                    m.stiffness[i][j],
                    gram_entry(&g, &basis[i], &basis[j]),
                    max_relative = 1e-12,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn stiffness_kernel_is_constants() {
        // Rows sum to zero: the constant weak function (v0 = vb = 1) has
        // zero weak gradient.
        let g = TriGeometry::new([[-1.0, 0.5], [2.0, 0.0], [0.5, 3.0]]);
        let m = local_matrices(&g);
        for i in 0..4 {
            let row_sum: f64 = m.stiffness[i].iter().sum();
            assert!(row_sum.abs() < 1e-12, "row {i} sums to {row_sum}");
        }
        let grad = weak_gradient_cell(&g)
            .axpy(1.0, &weak_gradient_edge(&g, 0))
            .axpy(1.0, &weak_gradient_edge(&g, 1))
            .axpy(1.0, &weak_gradient_edge(&g, 2));
        assert!(grad.radial.abs() < 1e-12);
        assert!(grad.constant[0].abs() < 1e-12);
        assert!(grad.constant[1].abs() < 1e-12);
    }

    proptest! {
        /// The explicit weak gradients satisfy their defining equation on
        /// random triangles, for each of the four basis functions.
        #[test]
        fn defining_equation_holds(
            ax in -2.0..2.0f64, ay in -2.0..2.0f64,
            bx in -2.0..2.0f64, by in -2.0..2.0f64,
            cx in -2.0..2.0f64, cy in -2.0..2.0f64,
        ) {
            let two_area = cross2([ax, ay], [bx, by], [cx, cy]);
            prop_assume!(two_area.abs() > 5e-2);
            let verts = if two_area > 0.0 {
                [[ax, ay], [bx, by], [cx, cy]]
            } else {
                [[ax, ay], [cx, cy], [bx, by]]
            };
            let g = TriGeometry::new(verts);
            let scale = g.c_t.max(1.0 / g.area);

            let r = defining_equation_residual(&g, &weak_gradient_cell(&g), 1.0, [0.0; 3]);
            prop_assert!(r <= 1e-10 * scale, "cell basis residual {r}");
            for e in 0..3 {
                let mut vb = [0.0; 3];
                vb[e] = 1.0;
                let r = defining_equation_residual(&g, &weak_gradient_edge(&g, e), 0.0, vb);
                prop_assert!(r <= 1e-10 * scale, "edge {e} basis residual {r}");
            }
        }

        /// Weak divergence reproduces the divergence of linear fields: with
        /// edge values set to the edge averages of `u(x) = x`, the weak
        /// divergence is exactly `div u = 2`; a constant field gives 0.
        #[test]
        fn weak_divergence_exact_on_linear_fields(
            ax in -2.0..2.0f64, ay in -2.0..2.0f64,
            bx in -2.0..2.0f64, by in -2.0..2.0f64,
            cx in -2.0..2.0f64, cy in -2.0..2.0f64,
        ) {
            let two_area = cross2([ax, ay], [bx, by], [cx, cy]);
            prop_assume!(two_area.abs() > 5e-2);
            let verts = if two_area > 0.0 {
                [[ax, ay], [bx, by], [cx, cy]]
            } else {
                [[ax, ay], [cx, cy], [bx, by]]
            };
            let g = TriGeometry::new(verts);
            let mut div_identity = 0.0;
            let mut div_constant = 0.0;
            for e in 0..3 {
                let p = g.vertices[(e + 1) % 3];
                let q = g.vertices[(e + 2) % 3];
                let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
                for k in 0..2 {
                    div_identity += weak_divergence_edge(&g, e, k) * mid[k];
                    div_constant += weak_divergence_edge(&g, e, k) * [0.7, -1.3][k];
                }
            }
            prop_assert!((div_identity - 2.0).abs() < 1e-10);
            prop_assert!(div_constant.abs() < 1e-10 / g.area.min(1.0));
        }
    }
}
