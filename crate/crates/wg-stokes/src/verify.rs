//! Runtime self-check suites behind the `verify` command: mesh identities,
//! the closed-form kernel against quadrature, the divergence-free basis
//! kernel and dimension, and manufactured-solution consistency.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::divfree::{build_basis, max_basis_divergence};
use crate::element::{local_matrices, weak_divergence_edge, weak_gradient_cell, weak_gradient_edge};
use crate::mesh::{Diagonal, Mesh, TriGeometry};
use crate::problems::{verify_consistency, StokesProblem};
use crate::quadrature::{edge_average, triangle_quadrature};
use crate::vec2::{dot, sub, Vec2};

/// Outcome of one suite.
#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl SuiteResult {
    fn pass(name: &'static str, detail: String) -> SuiteResult {
        SuiteResult { name, passed: true, detail }
    }
    fn fail(name: &'static str, detail: String) -> SuiteResult {
        SuiteResult { name, passed: false, detail }
    }
}

/// Options for `run_suites`; `Default` mirrors the `verify` command's
/// defaults.
#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Structured mesh sizes exercised by the mesh and basis suites.
    pub sizes: Vec<usize>,
    /// Number of random triangles for the kernel oracle.
    pub triangles: usize,
    pub seed: u64,
    /// Problems whose manufactured data is consistency-checked.
    pub problems: Vec<String>,
    /// Reynolds number used when a problem needs one.
    pub reynolds: f64,
    /// Deliberately corrupt a Type 2 basis sign to prove the divergence
    /// suite can fail (test hook).
    pub inject_divfree_fault: bool,
}

impl Default for VerifyOptions {
    fn default() -> VerifyOptions {
        VerifyOptions {
            sizes: vec![2, 4, 8],
            triangles: 100,
            seed: 7,
            problems: vec!["ex1".into(), "ex2".into(), "ex3".into()],
            reynolds: 1.0,
            inject_divfree_fault: false,
        }
    }
}

/// Run every suite; the command exits zero iff all pass.
pub fn run_suites(opts: &VerifyOptions) -> Vec<SuiteResult> {
    vec![
        mesh_suite(&opts.sizes),
        kernel_suite(opts.triangles, opts.seed),
        divfree_suite(&opts.sizes, opts.inject_divfree_fault),
        consistency_suite(&opts.problems, opts.reynolds),
    ]
}

/// Euler identity, refinement bookkeeping, and bundled-mesh topology.
pub fn mesh_suite(sizes: &[usize]) -> SuiteResult {
    const NAME: &str = "mesh";
    for &n in sizes {
        for diagonal in [Diagonal::NorthEast, Diagonal::NorthWest] {
            let mesh = match Mesh::unit_square(n, diagonal) {
                Ok(m) => m,
                Err(e) => return SuiteResult::fail(NAME, format!("unit_square({n}): {e}")),
            };
            if mesh.euler_defect() != 0 {
                return SuiteResult::fail(
                    NAME,
                    format!("Euler defect {} on unit_square({n})", mesh.euler_defect()),
                );
            }
            let fine = mesh.refine_uniform();
            if fine.n_triangles() != 4 * mesh.n_triangles()
                || fine.n_vertices() != mesh.n_vertices() + mesh.n_edges()
                || fine.euler_defect() != 0
            {
                return SuiteResult::fail(NAME, format!("refinement counts broken at n={n}"));
            }
            let ratio = mesh.h_max() / fine.h_max();
            if (ratio - 2.0).abs() > 1e-12 {
                return SuiteResult::fail(
                    NAME,
                    format!("refinement h ratio {ratio} != 2 at n={n}"),
                );
            }
        }
    }
    // Bundled meshes: defect equals the number of holes.
    for (name, holes) in [("ex2", 3i64), ("ex4", 1i64)] {
        let problem = StokesProblem::by_name(name, 1.0).expect("known problem");
        let mesh = problem.bundled_mesh().expect("bundled mesh");
        if mesh.euler_defect() != holes {
            return SuiteResult::fail(
                NAME,
                format!(
                    "bundled {name} mesh: Euler defect {} (expected {holes})",
                    mesh.euler_defect()
                ),
            );
        }
    }
    SuiteResult::pass(
        NAME,
        format!("Euler identity and refinement exact on {} sizes x 2 diagonals", sizes.len()),
    )
}

fn random_triangle(rng: &mut ChaCha8Rng) -> TriGeometry {
    loop {
        let v: Vec<Vec2> = (0..3)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        if let Ok(mesh) = Mesh::from_raw(v, vec![[0, 1, 2]]) {
            let g = mesh.tri_geometry(0);
            // keep shapes sane so "relative" tolerances mean something
            if g.area > 0.05 {
                return g;
            }
        }
    }
}

/// Closed-form local matrices against degree-2 quadrature of the weak
/// gradient fields, plus the defining equations of the weak gradient and
/// weak divergence, on random triangles.
pub fn kernel_suite(triangles: usize, seed: u64) -> SuiteResult {
    const NAME: &str = "kernel";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_s = 0.0f64;
    let mut worst_d = 0.0f64;
    let mut worst_eq = 0.0f64;
    for _ in 0..triangles {
        let g = random_triangle(&mut rng);
        let local = local_matrices(&g);
        let fields: [crate::element::LinearVectorField; 4] = [
            weak_gradient_cell(&g),
            weak_gradient_edge(&g, 0),
            weak_gradient_edge(&g, 1),
            weak_gradient_edge(&g, 2),
        ];
        // Stiffness: S_ij = (grad_w b_i, grad_w b_j)_T by quadrature.
        let mut dev_s = 0.0f64;
        let mut scale_s = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let q = triangle_quadrature(&g, 2, |x, y| {
                    dot(fields[i].eval(g.centroid, [x, y]), fields[j].eval(g.centroid, [x, y]))
                });
                scale_s = scale_s.max(local.stiffness[i][j].abs());
                dev_s = dev_s.max((q - local.stiffness[i][j]).abs());
            }
        }
        worst_s = worst_s.max(dev_s / scale_s.max(1e-300));
        // Divergence: D entries against the defining boundary flux
        // (grad_w . psi_e, 1)_T = <e_k . n, 1>_e computed by quadrature.
        for e in 0..3 {
            for k in 0..2 {
                let [a, b] = g.vertices_of_edge(e);
                let flux = edge_average(a, b, |_, _| g.normals[e][k]) * g.lengths[e];
                let closed = local.div[k][e] * g.area;
                worst_d = worst_d.max((flux - closed).abs() / flux.abs().max(1.0));
                let direct = weak_divergence_edge(&g, e, k) * g.area;
                worst_d = worst_d.max((flux - direct).abs() / flux.abs().max(1.0));
            }
        }
        // Defining equation of the weak gradient, tested against the RT0
        // basis tau in {(1,0), (0,1), (x - x_T)}:
        //   (grad_w b, tau)_T = -(b_0, div tau)_T + <b_b, tau . n>_bdry.
        for (which, field) in fields.iter().enumerate() {
            for tau in 0..3 {
                let tau_eval = |x: f64, y: f64| -> Vec2 {
                    match tau {
                        0 => [1.0, 0.0],
                        1 => [0.0, 1.0],
                        _ => sub([x, y], g.centroid),
                    }
                };
                let lhs = triangle_quadrature(&g, 2, |x, y| {
                    dot(field.eval(g.centroid, [x, y]), tau_eval(x, y))
                });
                // cell part: b_0 = 1 only for the cell basis; div tau = 2
                // only for the radial test field.
                let mut rhs = if which == 0 && tau == 2 { -2.0 * g.area } else { 0.0 };
                // boundary part: b_b = 1 on edge (which - 1) only.
                if which > 0 {
                    let e = which - 1;
                    let [a, b] = g.vertices_of_edge(e);
                    rhs += g.lengths[e]
                        * edge_average(a, b, |x, y| dot(tau_eval(x, y), g.normals[e]));
                }
                worst_eq = worst_eq.max((lhs - rhs).abs() / g.area.max(1.0));
            }
        }
    }
    let detail = format!(
        "max relative deviation over {triangles} random triangles: stiffness {worst_s:.2e}, divergence {worst_d:.2e}, defining equations {worst_eq:.2e}"
    );
    if worst_s <= 1e-12 && worst_d <= 1e-12 && worst_eq <= 1e-12 {
        SuiteResult::pass(NAME, detail)
    } else {
        SuiteResult::fail(NAME, detail)
    }
}

/// Basis kernel (per-triangle weak divergence of every column) and the
/// dimension identity on structured meshes of both diagonals.
pub fn divfree_suite(sizes: &[usize], inject_fault: bool) -> SuiteResult {
    const NAME: &str = "divfree";
    let mut worst = 0.0f64;
    let mut columns = 0usize;
    for &n in sizes {
        for diagonal in [Diagonal::NorthEast, Diagonal::NorthWest] {
            let mesh = match Mesh::unit_square(n, diagonal) {
                Ok(m) => m,
                Err(e) => return SuiteResult::fail(NAME, format!("unit_square({n}): {e}")),
            };
            let mut basis = match build_basis(&mesh) {
                Ok(b) => b,
                Err(e) => return SuiteResult::fail(NAME, format!("basis at n={n}: {e}")),
            };
            let nt = mesh.n_triangles();
            let ne = mesh.n_interior_edges();
            let nv = mesh.n_interior_vertices();
            if basis.matrix.ncols() != 2 * nt + ne + nv
                || 2 * nt + ne + nv != 2 * (nt + ne) - nt + 1
            {
                return SuiteResult::fail(
                    NAME,
                    format!(
                        "dimension identity broken at n={n}: cols {} vs 2NT+NE+NV {}",
                        basis.matrix.ncols(),
                        2 * nt + ne + nv
                    ),
                );
            }
            if inject_fault {
                // Swap the first edge-tangent column's direction for the
                // edge normal: its weak divergence becomes |e|/|T| and the
                // kernel check below must notice.
                let dofs = crate::assembly::DofMap::new(&mesh);
                let col = basis
                    .kinds
                    .iter()
                    .position(|k| matches!(k, crate::divfree::BasisKind::EdgeTangent { .. }))
                    .expect("structured meshes have interior edges");
                let crate::divfree::BasisKind::EdgeTangent { edge } = basis.kinds[col] else {
                    unreachable!()
                };
                let normal = mesh.edge_normal(edge);
                let s = dofs
                    .edge_scalar_free(mesh.edge(edge))
                    .expect("tangent columns sit on interior edges");
                let mut trip = Vec::new();
                for r in 0..basis.matrix.nrows() {
                    let (cols, vals) = basis.matrix.row(r);
                    for (&c, &v) in cols.iter().zip(vals) {
                        if c != col {
                            trip.push((r, c, v));
                        }
                    }
                }
                for k in 0..2 {
                    trip.push((dofs.free(k, s), col, normal[k]));
                }
                basis.matrix = crate::sparse::CsrMatrix::from_triplets(
                    basis.matrix.nrows(),
                    basis.matrix.ncols(),
                    &trip,
                );
            }
            worst = worst.max(max_basis_divergence(&mesh, &basis));
            columns += basis.matrix.ncols();
        }
    }
    let detail = format!(
        "max per-triangle weak divergence {worst:.2e} over {columns} basis columns; dimension identity exact"
    );
    if worst <= 1e-13 {
        SuiteResult::pass(NAME, detail)
    } else {
        SuiteResult::fail(NAME, detail)
    }
}

/// Finite-difference consistency of the manufactured problems.
pub fn consistency_suite(problems: &[String], reynolds: f64) -> SuiteResult {
    const NAME: &str = "consistency";
    let mut parts = Vec::new();
    for name in problems {
        let problem = match StokesProblem::by_name(name, reynolds) {
            Ok(p) => p,
            Err(e) => return SuiteResult::fail(NAME, format!("{name}: {e}")),
        };
        if !problem.has_exact() {
            return SuiteResult::fail(
                NAME,
                format!("{name} has no exact solution to check against"),
            );
        }
        match verify_consistency(&problem, 40, 2024) {
            Ok(c) => parts.push(format!(
                "{name}: residual {:.2e} at step {:.0e}, order {:.2}",
                c.residual, c.step, c.order
            )),
            Err(e) => return SuiteResult::fail(NAME, format!("{name}: {e}")),
        }
    }
    SuiteResult::pass(NAME, parts.join("; "))
}
