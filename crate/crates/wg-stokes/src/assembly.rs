//! Global assembly of the saddle-point system and the Algorithm 1 driver:
//! MINRES on the symmetric indefinite velocity/pressure block system with
//! Dirichlet data eliminated through an edge-projection lift.

use crate::element::local_matrices;
use crate::error::{Error, Result};
use crate::mesh::{Edge, Mesh};
use crate::problems::StokesProblem;
use crate::quadrature::{edge_average, triangle_quadrature};
use crate::solver::{minres_solve, SolveReport};
use crate::sparse::CsrMatrix;

/// Index layout of the scalar (per-component) velocity dofs.
///
/// Free layout: `[cells | interior edges]`; full layout appends the
/// boundary edges: `[cells | interior edges | boundary edges]`. Vector
/// dofs are component-major: all x-component scalars, then all
/// y-component scalars.
#[derive(Debug, Clone, Copy)]
pub struct DofMap {
    pub n_tri: usize,
    pub n_interior_edges: usize,
    pub n_boundary_edges: usize,
}

impl DofMap {
    pub fn new(mesh: &Mesh) -> DofMap {
        DofMap {
            n_tri: mesh.n_triangles(),
            n_interior_edges: mesh.n_interior_edges(),
            n_boundary_edges: mesh.n_boundary_edges(),
        }
    }

    /// Scalar free dofs per component.
    pub fn n_free_scalar(&self) -> usize {
        self.n_tri + self.n_interior_edges
    }

    /// Total free velocity dofs (both components).
    pub fn n_free(&self) -> usize {
        2 * self.n_free_scalar()
    }

    pub fn n_full_scalar(&self) -> usize {
        self.n_tri + self.n_interior_edges + self.n_boundary_edges
    }

    pub fn n_full(&self) -> usize {
        2 * self.n_full_scalar()
    }

    pub fn cell_scalar(&self, t: usize) -> usize {
        t
    }

    /// Scalar index of an edge in the free layout (`None` for boundary edges).
    pub fn edge_scalar_free(&self, edge: &Edge) -> Option<usize> {
        if edge.is_boundary() {
            None
        } else {
            Some(self.n_tri + edge.compact)
        }
    }

    /// Scalar index of an edge in the full layout.
    pub fn edge_scalar_full(&self, edge: &Edge) -> usize {
        if edge.is_boundary() {
            self.n_tri + self.n_interior_edges + edge.compact
        } else {
            self.n_tri + edge.compact
        }
    }

    /// Vector dof from a component and a scalar index (free layout).
    pub fn free(&self, component: usize, scalar: usize) -> usize {
        component * self.n_free_scalar() + scalar
    }

    /// Vector dof from a component and a scalar index (full layout).
    pub fn full(&self, component: usize, scalar: usize) -> usize {
        component * self.n_full_scalar() + scalar
    }
}

/// A discrete weak velocity field: one vector per cell and one per edge
/// (edges indexed by global edge id, boundary edges included).
#[derive(Debug, Clone, PartialEq)]
pub struct WeakField {
    pub cell: Vec<[f64; 2]>,
    pub edge: Vec<[f64; 2]>,
}

impl WeakField {
    pub fn zeros(mesh: &Mesh) -> WeakField {
        WeakField {
            cell: vec![[0.0; 2]; mesh.n_triangles()],
            edge: vec![[0.0; 2]; mesh.n_edges()],
        }
    }

    /// Flatten into the full component-major dof vector.
    pub fn flatten_full(&self, mesh: &Mesh, dofs: &DofMap) -> Vec<f64> {
        let mut out = vec![0.0; dofs.n_full()];
        for k in 0..2 {
            for (t, c) in self.cell.iter().enumerate() {
                out[dofs.full(k, dofs.cell_scalar(t))] = c[k];
            }
            for (e, v) in self.edge.iter().enumerate() {
                out[dofs.full(k, dofs.edge_scalar_full(mesh.edge(e)))] = v[k];
            }
        }
        out
    }

    /// Rebuild from a free dof vector plus boundary edge values (indexed by
    /// boundary-compact id).
    pub fn from_free(mesh: &Mesh, dofs: &DofMap, free: &[f64], boundary: &[[f64; 2]]) -> WeakField {
        assert_eq!(free.len(), dofs.n_free());
        assert_eq!(boundary.len(), dofs.n_boundary_edges);
        let mut field = WeakField::zeros(mesh);
        for k in 0..2 {
            for t in 0..dofs.n_tri {
                field.cell[t][k] = free[dofs.free(k, dofs.cell_scalar(t))];
            }
        }
        for (e, v) in field.edge.iter_mut().enumerate() {
            let edge = mesh.edge(e);
            match dofs.edge_scalar_free(edge) {
                Some(s) => {
                    for k in 0..2 {
                        v[k] = free[dofs.free(k, s)];
                    }
                }
                None => *v = boundary[edge.compact],
            }
        }
        field
    }
}

/// Scalar weak-gradient stiffness split into free-free and free-boundary
/// blocks (free layout rows; boundary columns indexed by boundary-compact id).
fn scalar_stiffness_split(mesh: &Mesh, dofs: &DofMap) -> (CsrMatrix, CsrMatrix) {
    let mut ff = Vec::new();
    let mut fb = Vec::new();
    for t in 0..mesh.n_triangles() {
        let g = mesh.tri_geometry(t);
        let local = local_matrices(&g);
        // Local scalar dofs: cell then the three edges.
        let mut idx = [(0usize, false); 4];
        idx[0] = (dofs.cell_scalar(t), false);
        for (i, te) in mesh.tri_edges(t).iter().enumerate() {
            let edge = mesh.edge(te.edge);
            idx[i + 1] = match dofs.edge_scalar_free(edge) {
                Some(s) => (s, false),
                None => (edge.compact, true),
            };
        }
        for i in 0..4 {
            let (row, row_bdry) = idx[i];
            if row_bdry {
                continue;
            }
            for j in 0..4 {
                let (col, col_bdry) = idx[j];
                let v = local.stiffness[i][j];
                if col_bdry {
                    fb.push((row, col, v));
                } else {
                    ff.push((row, col, v));
                }
            }
        }
    }
    let nf = dofs.n_free_scalar();
    (
        CsrMatrix::from_triplets(nf, nf, &ff),
        CsrMatrix::from_triplets(nf, dofs.n_boundary_edges, &fb),
    )
}

/// Scalar weak-gradient stiffness over the full layout (all dofs, no
/// boundary elimination).
pub fn scalar_stiffness_full(mesh: &Mesh) -> CsrMatrix {
    let dofs = DofMap::new(mesh);
    let mut trip = Vec::new();
    for t in 0..mesh.n_triangles() {
        let g = mesh.tri_geometry(t);
        let local = local_matrices(&g);
        let mut idx = [0usize; 4];
        idx[0] = dofs.cell_scalar(t);
        for (i, te) in mesh.tri_edges(t).iter().enumerate() {
            idx[i + 1] = dofs.edge_scalar_full(mesh.edge(te.edge));
        }
        for i in 0..4 {
            for j in 0..4 {
                trip.push((idx[i], idx[j], local.stiffness[i][j]));
            }
        }
    }
    let n = dofs.n_full_scalar();
    CsrMatrix::from_triplets(n, n, &trip)
}

/// The energy-norm Gram matrix: block-diagonal full stiffness with
/// `nu = 1`, so `|||v|||^2 = v^T M v` over all dofs.
pub fn triple_norm_matrix(mesh: &Mesh) -> CsrMatrix {
    let s = scalar_stiffness_full(mesh);
    CsrMatrix::block_diag(&[&s, &s])
}

/// The assembled saddle-point problem
/// `[[A, B], [B^T, 0]] (U, -P) = (F1, F2)` over free velocity dofs and all
/// pressure dofs, prior to pressure pinning.
#[derive(Debug)]
pub struct SaddleSystem {
    /// Viscous block `nu * blockdiag(S, S)`, free layout.
    pub a: CsrMatrix,
    /// Divergence coupling, `n_free x n_tri`; entry `((k,e), T)` is
    /// `|e| n_{e,k}^out(T)`.
    pub b: CsrMatrix,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    /// `Q_b`-projected Dirichlet data per boundary edge (compact index).
    pub boundary_values: Vec<[f64; 2]>,
    pub dofs: DofMap,
    pub nu: f64,
}

/// Assemble the discrete system for a problem on a mesh. Projects the
/// Dirichlet data onto edge constants, checks its compatibility
/// (`sum of boundary fluxes = 0`), and eliminates it into the right-hand
/// side.
pub fn assemble(mesh: &Mesh, problem: &StokesProblem) -> Result<SaddleSystem> {
    let dofs = DofMap::new(mesh);
    let nu = problem.nu;

    // Q_b projection of g on boundary edges, and the compatibility check.
    let mut boundary_values = vec![[0.0; 2]; dofs.n_boundary_edges];
    let mut net_flux = 0.0;
    let mut perimeter = 0.0;
    let mut g_scale = 0.0f64;
    for e in 0..mesh.n_edges() {
        let edge = mesh.edge(e);
        if !edge.is_boundary() {
            continue;
        }
        let [a, b] = edge.vertices;
        let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
        let gx = edge_average(pa, pb, |x, y| problem.boundary_value(x, y)[0]);
        let gy = edge_average(pa, pb, |x, y| problem.boundary_value(x, y)[1]);
        boundary_values[edge.compact] = [gx, gy];
        // Outward normal: the single adjacent triangle's outward side.
        let t = edge.tri[0];
        let sign = mesh
            .tri_edges(t)
            .iter()
            .find(|te| te.edge == e)
            .expect("edge belongs to its triangle")
            .sign;
        let n = mesh.edge_normal(e);
        let len = mesh.edge_length(e);
        net_flux += len * sign * (gx * n[0] + gy * n[1]);
        perimeter += len;
        g_scale = g_scale.max(gx.abs()).max(gy.abs());
    }
    let flux_tol = 1e-10 * perimeter * g_scale.max(1.0);
    if net_flux.abs() > flux_tol {
        return Err(Error::IncompatibleBoundaryData {
            flux: net_flux,
            tol: flux_tol,
        });
    }

    // Viscous block and boundary lift.
    let (s_ff, s_fb) = scalar_stiffness_split(mesh, &dofs);
    let a = CsrMatrix::block_diag(&[&s_ff, &s_ff]).scaled(nu);

    let mut f1 = vec![0.0; dofs.n_free()];
    for k in 0..2 {
        // Load (f, v0): cell dofs only.
        for t in 0..mesh.n_triangles() {
            let g = mesh.tri_geometry(t);
            let load = triangle_quadrature(&g, 4, |x, y| problem.body_force(x, y)[k]);
            f1[dofs.free(k, dofs.cell_scalar(t))] += load;
        }
        // Lift: F1 -= nu * S_fb * u_b per component.
        let ub_k: Vec<f64> = boundary_values.iter().map(|v| v[k]).collect();
        let lift = s_fb.matvec_alloc(&ub_k);
        for (s, l) in lift.iter().enumerate() {
            f1[dofs.free(k, s)] -= nu * l;
        }
    }

    // Divergence coupling and its boundary contribution.
    let mut b_trip = Vec::new();
    let mut f2 = vec![0.0; mesh.n_triangles()];
    for t in 0..mesh.n_triangles() {
        let g = mesh.tri_geometry(t);
        for (i, te) in mesh.tri_edges(t).iter().enumerate() {
            let edge = mesh.edge(te.edge);
            let len = g.lengths[i];
            let n_out = g.normals[i];
            match dofs.edge_scalar_free(edge) {
                Some(s) => {
                    for k in 0..2 {
                        b_trip.push((dofs.free(k, s), t, len * n_out[k]));
                    }
                }
                None => {
                    let ub = boundary_values[edge.compact];
                    f2[t] -= len * (n_out[0] * ub[0] + n_out[1] * ub[1]);
                }
            }
        }
    }
    let b = CsrMatrix::from_triplets(dofs.n_free(), mesh.n_triangles(), &b_trip);

    Ok(SaddleSystem {
        a,
        b,
        f1,
        f2,
        boundary_values,
        dofs,
        nu,
    })
}

/// Assemble the pinned symmetric indefinite matrix
/// `K = [[A, B], [B^T, 0]]` with pressure dof 0 pinned to zero (its row
/// and column replaced by the identity), the right-hand side, and the
/// positive block-diagonal preconditioner `diag(A) + |T|/nu`.
pub fn saddle_matrix(mesh: &Mesh, sys: &SaddleSystem) -> (CsrMatrix, Vec<f64>, Vec<f64>) {
    let nf = sys.dofs.n_free();
    let np = sys.dofs.n_tri;
    let n = nf + np;
    let pin = nf; // pressure dof of triangle 0

    let mut trip: Vec<(usize, usize, f64)> = Vec::with_capacity(sys.a.nnz() + 2 * sys.b.nnz() + 1);
    for r in 0..nf {
        let (cols, vals) = sys.a.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            trip.push((r, c, v));
        }
        let (bcols, bvals) = sys.b.row(r);
        for (&c, &v) in bcols.iter().zip(bvals) {
            if nf + c == pin {
                continue;
            }
            trip.push((r, nf + c, v));
            trip.push((nf + c, r, v));
        }
    }
    trip.push((pin, pin, 1.0));
    let k = CsrMatrix::from_triplets(n, n, &trip);

    let mut rhs = vec![0.0; n];
    rhs[..nf].copy_from_slice(&sys.f1);
    rhs[nf..].copy_from_slice(&sys.f2);
    rhs[pin] = 0.0;

    let mut precond = k.diagonal();
    for t in 0..np {
        if nf + t == pin {
            precond[nf + t] = 1.0;
        } else {
            precond[nf + t] = mesh.tri_geometry(t).area / sys.nu;
        }
    }
    (k, rhs, precond)
}

/// Shift a piecewise-constant pressure to zero area-weighted mean.
pub fn normalize_pressure(mesh: &Mesh, pressure: &mut [f64]) {
    let mut integral = 0.0;
    let mut area = 0.0;
    for (t, p) in pressure.iter().enumerate() {
        let a = mesh.tri_geometry(t).area;
        integral += a * p;
        area += a;
    }
    let mean = integral / area;
    for p in pressure.iter_mut() {
        *p -= mean;
    }
}

/// A discrete Stokes solution: velocity with boundary values re-attached,
/// zero-mean pressure, and the solver report.
#[derive(Debug)]
pub struct StokesSolution {
    pub velocity: WeakField,
    pub pressure: Vec<f64>,
    pub report: SolveReport,
}

/// Algorithm 1: solve the pinned saddle-point system with preconditioned
/// MINRES.
pub fn solve_saddle(mesh: &Mesh, problem: &StokesProblem, tol: f64) -> Result<StokesSolution> {
    let sys = assemble(mesh, problem)?;
    let (k, rhs, precond) = saddle_matrix(mesh, &sys);
    let max_it = crate::solver::pipeline_max_iterations(k.nrows());
    let (x, report) = minres_solve(&k, &rhs, &precond, tol, max_it)?;

    let nf = sys.dofs.n_free();
    let velocity = WeakField::from_free(mesh, &sys.dofs, &x[..nf], &sys.boundary_values);
    // The pressure block solved for -P.
    let mut pressure: Vec<f64> = x[nf..].iter().map(|q| -q).collect();
    normalize_pressure(mesh, &mut pressure);
    Ok(StokesSolution {
        velocity,
        pressure,
        report,
    })
}
