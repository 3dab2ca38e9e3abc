//! Algorithm 2: an explicit basis of the discretely divergence-free
//! velocity subspace and the reduced SPD solve on it.
//!
//! The basis has three column families:
//!   1. per triangle, the two cell-indicator fields (cell value `e_k`,
//!      zero edge values) — divergence-free because the weak divergence
//!      ignores cell values;
//!   2. per interior edge, the tangential edge field (edge value = unit
//!      tangent) — the normal flux vanishes;
//!   3. per interior vertex `P`, the hull field: on each edge incident to
//!      `P` the value `(1/|e|) R90(d_e)`, where `d_e` is the unit direction
//!      of the edge pointing away from `P` and `R90` rotates by +90
//!      degrees; the two incident-edge fluxes of every hull triangle
//!      cancel.
//!
//! For a simply connected triangulation the column count
//! `2 N_T + N_E^int + N_V^int` equals `dim D_h = N_T + 2 N_E^int + 1` by
//! the Euler identity, and the columns are independent.

use crate::assembly::{assemble, DofMap, WeakField};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::problems::StokesProblem;
use crate::solver::{cg_solve, pipeline_max_iterations, SolveReport};
use crate::sparse::CsrMatrix;
use crate::vec2::{rot_ccw, scale, sub};

/// Which family a basis column belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// Cell indicator of triangle `tri`, component `component`.
    Cell { tri: usize, component: usize },
    /// Tangential field of the interior edge `edge`.
    EdgeTangent { edge: usize },
    /// Hull field of the interior vertex `vertex`.
    VertexHull { vertex: usize },
}

/// Sparse basis of the divergence-free subspace: columns are coefficient
/// vectors over the free velocity dofs.
#[derive(Debug)]
pub struct DivFreeBasis {
    pub matrix: CsrMatrix,
    pub kinds: Vec<BasisKind>,
}

/// Build the Type 1-3 basis. Refuses multiply-connected meshes, where the
/// dimension argument (and the hull construction at the holes) breaks down.
pub fn build_basis(mesh: &Mesh) -> Result<DivFreeBasis> {
    if mesh.euler_defect() != 0 {
        return Err(Error::Unsupported(format!(
            "divergence-free basis requires a simply connected mesh (Euler defect {})",
            mesh.euler_defect()
        )));
    }
    let dofs = DofMap::new(mesh);
    let mut trip: Vec<(usize, usize, f64)> = Vec::new();
    let mut kinds = Vec::new();

    // Type 1: cell indicators.
    for t in 0..mesh.n_triangles() {
        for k in 0..2 {
            trip.push((dofs.free(k, dofs.cell_scalar(t)), kinds.len(), 1.0));
            kinds.push(BasisKind::Cell { tri: t, component: k });
        }
    }

    // Type 2: tangential interior-edge fields.
    for e in 0..mesh.n_edges() {
        let edge = mesh.edge(e);
        let Some(s) = dofs.edge_scalar_free(edge) else {
            continue;
        };
        let tangent = mesh.edge_tangent(e);
        for k in 0..2 {
            trip.push((dofs.free(k, s), kinds.len(), tangent[k]));
        }
        kinds.push(BasisKind::EdgeTangent { edge: e });
    }

    // Type 3: hull fields around interior vertices.
    let mut vertex_edges: Vec<Vec<usize>> = vec![Vec::new(); mesh.n_vertices()];
    for e in 0..mesh.n_edges() {
        let [a, b] = mesh.edge(e).vertices;
        vertex_edges[a].push(e);
        vertex_edges[b].push(e);
    }
    for v in 0..mesh.n_vertices() {
        if mesh.is_boundary_vertex(v) {
            continue;
        }
        let col = kinds.len();
        for &e in &vertex_edges[v] {
            let edge = mesh.edge(e);
            // Every edge at an interior vertex is interior.
            let s = dofs
                .edge_scalar_free(edge)
                .expect("edges at an interior vertex are interior");
            let other = if edge.vertices[0] == v { edge.vertices[1] } else { edge.vertices[0] };
            let away = sub(mesh.vertex(other), mesh.vertex(v));
            let len = mesh.edge_length(e);
            let value = scale(1.0 / (len * len), rot_ccw(away));
            for k in 0..2 {
                trip.push((dofs.free(k, s), col, value[k]));
            }
        }
        kinds.push(BasisKind::VertexHull { vertex: v });
    }

    let matrix = CsrMatrix::from_triplets(dofs.n_free(), kinds.len(), &trip);
    Ok(DivFreeBasis { matrix, kinds })
}

/// Per-triangle weak divergence of a weak field (boundary edge values
/// included): `(1/|T|) sum_e |e| v_b,e . n_e^out`.
pub fn weak_divergence(mesh: &Mesh, u: &WeakField) -> Vec<f64> {
    let mut div = vec![0.0; mesh.n_triangles()];
    for t in 0..mesh.n_triangles() {
        let g = mesh.tri_geometry(t);
        let mut acc = 0.0;
        for (i, te) in mesh.tri_edges(t).iter().enumerate() {
            let v = u.edge[te.edge];
            acc += g.lengths[i] * (g.normals[i][0] * v[0] + g.normals[i][1] * v[1]);
        }
        div[t] = acc / g.area;
    }
    div
}

/// Largest per-triangle weak divergence over all basis columns; the kernel
/// property says this is numerically zero.
pub fn max_basis_divergence(mesh: &Mesh, basis: &DivFreeBasis) -> f64 {
    let dofs = DofMap::new(mesh);
    let zeros = vec![[0.0; 2]; dofs.n_boundary_edges];
    let ct = basis.matrix.transpose();
    let mut worst = 0.0f64;
    for c in 0..ct.nrows() {
        let (rows, vals) = ct.row(c);
        let mut free = vec![0.0; dofs.n_free()];
        for (&r, &v) in rows.iter().zip(vals) {
            free[r] = v;
        }
        let field = WeakField::from_free(mesh, &dofs, &free, &zeros);
        for d in weak_divergence(mesh, &field) {
            worst = worst.max(d.abs());
        }
    }
    worst
}

/// Algorithm 2: Galerkin-project the viscous block onto the
/// divergence-free basis and solve the SPD system `C^T A C z = C^T F1`
/// with Jacobi-preconditioned CG. Only homogeneous Dirichlet problems are
/// supported (the basis spans fields that vanish on the boundary).
pub fn solve_divfree(mesh: &Mesh, problem: &StokesProblem, tol: f64) -> Result<(WeakField, SolveReport)> {
    if !problem.is_homogeneous() {
        return Err(Error::Unsupported(
            "Algorithm 2 handles homogeneous Dirichlet data only".into(),
        ));
    }
    let basis = build_basis(mesh)?;
    let sys = assemble(mesh, problem)?;
    let reduced = CsrMatrix::triple_product(&sys.a, &basis.matrix);
    let rhs = basis.matrix.transpose().matvec_alloc(&sys.f1);
    let max_it = pipeline_max_iterations(reduced.nrows());
    let (z, report) = cg_solve(&reduced, &rhs, None, tol, max_it)?;
    let free = basis.matrix.matvec_alloc(&z);
    let velocity = WeakField::from_free(mesh, &sys.dofs, &free, &sys.boundary_values);
    Ok((velocity, report))
}

/// Recover the pressure from a divergence-free velocity by solving the
/// momentum-residual least-squares problem `B^T B p = B^T (A u - F1)` with
/// one pressure dof pinned, then shifting to zero mean. Also returns the
/// relative momentum residual, which is small exactly when `u` solves the
/// constrained problem.
pub fn recover_pressure(
    mesh: &Mesh,
    problem: &StokesProblem,
    velocity: &WeakField,
    tol: f64,
) -> Result<(Vec<f64>, f64)> {
    let sys = assemble(mesh, problem)?;
    let dofs = sys.dofs;
    // Free part of the velocity.
    let mut free = vec![0.0; dofs.n_free()];
    for k in 0..2 {
        for t in 0..dofs.n_tri {
            free[dofs.free(k, dofs.cell_scalar(t))] = velocity.cell[t][k];
        }
    }
    for e in 0..mesh.n_edges() {
        if let Some(s) = dofs.edge_scalar_free(mesh.edge(e)) {
            for k in 0..2 {
                free[dofs.free(k, s)] = velocity.edge[e][k];
            }
        }
    }
    // Momentum residual r = F1 - A u; then B q = r with q = -p.
    let mut r = sys.a.matvec_alloc(&free);
    for (ri, f) in r.iter_mut().zip(&sys.f1) {
        *ri = f - *ri;
    }

    // Drop pressure dof 0 to remove the constant kernel of B.
    let np = dofs.n_tri;
    let mut trip = Vec::new();
    for row in 0..sys.b.nrows() {
        let (cols, vals) = sys.b.row(row);
        for (&c, &v) in cols.iter().zip(vals) {
            if c > 0 {
                trip.push((row, c - 1, v));
            }
        }
    }
    let b_red = CsrMatrix::from_triplets(sys.b.nrows(), np - 1, &trip);
    let bt = b_red.transpose();
    let normal = bt.matmul(&b_red);
    let rhs = bt.matvec_alloc(&r);
    let max_it = pipeline_max_iterations(normal.nrows());
    let (q_red, _report) = cg_solve(&normal, &rhs, None, tol, max_it)?;

    let mut pressure = vec![0.0; np];
    for (t, q) in q_red.iter().enumerate() {
        pressure[t + 1] = -q;
    }
    crate::assembly::normalize_pressure(mesh, &mut pressure);

    // Relative momentum residual of the recovered pair.
    let mut q_full = vec![0.0; np];
    for (t, q) in q_red.iter().enumerate() {
        q_full[t + 1] = *q;
    }
    let bq = sys.b.matvec_alloc(&q_full);
    let f1_norm: f64 = sys.f1.iter().map(|v| v * v).sum::<f64>().sqrt();
    let res: f64 = r
        .iter()
        .zip(&bq)
        .map(|(ri, bi)| (ri - bi) * (ri - bi))
        .sum::<f64>()
        .sqrt();
    Ok((pressure, res / f1_norm.max(1e-300)))
}
