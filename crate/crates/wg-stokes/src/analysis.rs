//! Projections of exact solutions, the three error measures reported in
//! the convergence tables, and rate computation / CSV serialization.
//!
//! Errors are measured against the L2 projection of the exact solution
//! into the discrete spaces, not against the exact solution itself:
//! `|||Q_h u - u_h|||`, `||Q_0 u - u_0||`, and `||Q_0 p - p_h||`.

use std::fmt;
use std::str::FromStr;

use crate::assembly::{normalize_pressure, solve_saddle, triple_norm_matrix, DofMap, WeakField};
use crate::divfree;
use crate::error::{Error, Result};
use crate::mesh::{Diagonal, Mesh};
use crate::problems::StokesProblem;
use crate::quadrature::{edge_average, triangle_quadrature};

/// Which discrete formulation produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Algorithm 1: the full saddle-point system, solved with MINRES.
    Saddle,
    /// Algorithm 2: the reduced SPD system on the divergence-free basis,
    /// solved with CG.
    DivFree,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Saddle => "saddle",
            Algorithm::DivFree => "divfree",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Algorithm> {
        match s {
            "saddle" => Ok(Algorithm::Saddle),
            "divfree" => Ok(Algorithm::DivFree),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm '{other}' (expected saddle or divfree)"
            ))),
        }
    }
}

/// L2-project the exact solution into the discrete spaces: cell averages
/// (degree-4 quadrature) and edge averages (2-point Gauss) for the
/// velocity, zero-mean cell averages for the pressure.
pub fn project_exact(mesh: &Mesh, problem: &StokesProblem) -> Result<(WeakField, Vec<f64>)> {
    let (Some(u), Some(p)) = (&problem.exact_velocity, &problem.exact_pressure) else {
        return Err(Error::InvalidArgument(format!(
            "problem {} has no exact solution to project",
            problem.name()
        )));
    };
    let mut field = WeakField::zeros(mesh);
    for t in 0..mesh.n_triangles() {
        let g = mesh.tri_geometry(t);
        for k in 0..2 {
            field.cell[t][k] = triangle_quadrature(&g, 4, |x, y| u(x, y)[k]) / g.area;
        }
    }
    for e in 0..mesh.n_edges() {
        let [a, b] = mesh.edge(e).vertices;
        let (va, vb) = (mesh.vertex(a), mesh.vertex(b));
        for k in 0..2 {
            field.edge[e][k] = edge_average(va, vb, |x, y| u(x, y)[k]);
        }
    }
    let mut pressure: Vec<f64> = (0..mesh.n_triangles())
        .map(|t| {
            let g = mesh.tri_geometry(t);
            triangle_quadrature(&g, 4, |x, y| p(x, y)) / g.area
        })
        .collect();
    normalize_pressure(mesh, &mut pressure);
    Ok((field, pressure))
}

/// The three error measures of the tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    /// `|||Q_h u - u_h|||`: the discrete H1 norm, via the full (unpinned,
    /// viscosity-free) stiffness matrix over all dofs.
    pub triple: f64,
    /// `||Q_0 u - u_0||`: cell-wise L2 distance of the cell velocities.
    pub l2_u0: f64,
    /// `||Q_0 p - p_h||` with both sides shifted to zero mean; `None` when
    /// the solution carries no pressure.
    pub l2_p: Option<f64>,
}

/// Compare a discrete solution against the projected exact solution.
pub fn error_norms(
    mesh: &Mesh,
    u_h: &WeakField,
    p_h: Option<&[f64]>,
    problem: &StokesProblem,
) -> Result<ErrorNorms> {
    let nt = mesh.n_triangles();
    if u_h.cell.len() != nt || u_h.edge.len() != mesh.n_edges() {
        return Err(Error::InvalidArgument(format!(
            "velocity field sized {}x{} does not match mesh with {} cells and {} edges",
            u_h.cell.len(),
            u_h.edge.len(),
            nt,
            mesh.n_edges()
        )));
    }
    if let Some(p) = p_h {
        if p.len() != nt {
            return Err(Error::InvalidArgument(format!(
                "pressure field has {} entries for {} cells",
                p.len(),
                nt
            )));
        }
    }
    let (proj_u, proj_p) = project_exact(mesh, problem)?;
    let dofs = DofMap::new(mesh);
    let mut e = proj_u.flatten_full(mesh, &dofs);
    for (ei, vi) in e.iter_mut().zip(u_h.flatten_full(mesh, &dofs)) {
        *ei -= vi;
    }
    let m = triple_norm_matrix(mesh);
    let me = m.matvec_alloc(&e);
    let quad: f64 = e.iter().zip(&me).map(|(a, b)| a * b).sum();
    let triple = quad.max(0.0).sqrt();

    let mut l2u2 = 0.0;
    for t in 0..nt {
        let area = mesh.tri_geometry(t).area;
        let dx = proj_u.cell[t][0] - u_h.cell[t][0];
        let dy = proj_u.cell[t][1] - u_h.cell[t][1];
        l2u2 += area * (dx * dx + dy * dy);
    }

    let l2_p = p_h.map(|p| {
        let mut p = p.to_vec();
        normalize_pressure(mesh, &mut p);
        let mut q = proj_p.clone();
        normalize_pressure(mesh, &mut q);
        let mut acc = 0.0;
        for t in 0..nt {
            let d = q[t] - p[t];
            acc += mesh.tri_geometry(t).area * d * d;
        }
        acc.sqrt()
    });

    Ok(ErrorNorms { triple, l2_u0: l2u2.sqrt(), l2_p })
}

/// Pairwise rates are clamped to this magnitude when an error sits at
/// rounding level (the true rate is numerically infinite).
pub const RATE_CLAMP: f64 = 99.0;

/// One level of a convergence study.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub h: f64,
    pub err_triple: f64,
    pub rate_triple: Option<f64>,
    pub err_l2_u0: f64,
    pub rate_l2_u0: Option<f64>,
    pub err_l2_p: Option<f64>,
    pub rate_l2_p: Option<f64>,
    pub iterations: usize,
}

/// A full convergence study: per-level errors, pairwise rates, and the
/// least-squares slope of `log err` against `log h` per error column.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub problem: String,
    pub algorithm: Algorithm,
    pub rows: Vec<ConvergenceRow>,
    pub fitted_triple: Option<f64>,
    pub fitted_l2_u0: Option<f64>,
    pub fitted_l2_p: Option<f64>,
    /// Set when any rate was clamped or a fit had too few levels above
    /// rounding noise to be meaningful.
    pub degenerate: bool,
    /// Set when a level failed to solve; `rows` then holds the levels
    /// completed before the failure.
    pub failure: Option<String>,
}

impl ConvergenceReport {
    pub fn has_pressure(&self) -> bool {
        self.rows.first().is_some_and(|r| r.err_l2_p.is_some())
    }

    /// CSV serialization: 6 significant digits, scientific notation, one
    /// row per level plus a trailing `fit` row with the fitted slopes.
    /// Pressure columns appear only when the study carried a pressure.
    pub fn to_csv(&self) -> String {
        let has_p = self.has_pressure();
        let mut out = String::from(if has_p {
            "h,err_triple,rate,err_l2u,rate,err_l2p,rate\n"
        } else {
            "h,err_triple,rate,err_l2u,rate\n"
        });
        for r in &self.rows {
            out.push_str(&format!(
                "{:.5e},{:.5e},{},{:.5e},{}",
                r.h,
                r.err_triple,
                fmt_opt(r.rate_triple),
                r.err_l2_u0,
                fmt_opt(r.rate_l2_u0),
            ));
            if has_p {
                out.push_str(&format!(
                    ",{:.5e},{}",
                    r.err_l2_p.expect("uniform pressure columns"),
                    fmt_opt(r.rate_l2_p)
                ));
            }
            out.push('\n');
        }
        out.push_str(&format!(
            "fit,,{},,{}",
            fmt_opt(self.fitted_triple),
            fmt_opt(self.fitted_l2_u0)
        ));
        if has_p {
            out.push_str(&format!(",,{}", fmt_opt(self.fitted_l2_p)));
        }
        out.push('\n');
        out
    }

    /// Human-readable console table.
    pub fn render_table(&self) -> String {
        let has_p = self.has_pressure();
        let mut out = format!("problem {}  algorithm {}\n", self.problem, self.algorithm);
        out.push_str(&format!(
            "{:>12} {:>13} {:>8} {:>13} {:>8}",
            "h", "|||e|||", "rate", "||e0||", "rate"
        ));
        if has_p {
            out.push_str(&format!(" {:>13} {:>8}", "||ep||", "rate"));
        }
        out.push_str(&format!(" {:>7}\n", "iters"));
        for r in &self.rows {
            out.push_str(&format!(
                "{:>12.5e} {:>13.5e} {:>8} {:>13.5e} {:>8}",
                r.h,
                r.err_triple,
                fmt_rate(r.rate_triple),
                r.err_l2_u0,
                fmt_rate(r.rate_l2_u0),
            ));
            if has_p {
                out.push_str(&format!(
                    " {:>13.5e} {:>8}",
                    r.err_l2_p.expect("uniform pressure columns"),
                    fmt_rate(r.rate_l2_p)
                ));
            }
            out.push_str(&format!(" {:>7}\n", r.iterations));
        }
        out.push_str(&format!(
            "{:>12} {:>13} {:>8} {:>13} {:>8}",
            "fit",
            "",
            fmt_rate(self.fitted_triple),
            "",
            fmt_rate(self.fitted_l2_u0)
        ));
        if has_p {
            out.push_str(&format!(" {:>13} {:>8}", "", fmt_rate(self.fitted_l2_p)));
        }
        out.push('\n');
        if self.degenerate {
            out.push_str("note: some errors sit at rounding level; rates clamped to 99\n");
        }
        if let Some(msg) = &self.failure {
            out.push_str(&format!("aborted after {} level(s): {msg}\n", self.rows.len()));
        }
        out
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.5e}")).unwrap_or_default()
}

fn fmt_rate(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into())
}

/// Run one solve per level (coarse to fine) and tabulate errors and rates.
/// Solver failure at a level aborts the study; the report then carries the
/// completed rows and the failure message.
pub fn convergence_study(
    problem: &StokesProblem,
    levels: &[(f64, Mesh)],
    algorithm: Algorithm,
    tol: f64,
    recover_pressure: bool,
) -> Result<ConvergenceReport> {
    let mut solver = |mesh: &Mesh| -> Result<(WeakField, Option<Vec<f64>>, usize)> {
        match algorithm {
            Algorithm::Saddle => {
                let s = solve_saddle(mesh, problem, tol)?;
                Ok((s.velocity, Some(s.pressure), s.report.iterations))
            }
            Algorithm::DivFree => {
                let (u, report) = divfree::solve_divfree(mesh, problem, tol)?;
                let p = if recover_pressure {
                    Some(divfree::recover_pressure(mesh, problem, &u, tol)?.0)
                } else {
                    None
                };
                Ok((u, p, report.iterations))
            }
        }
    };
    study_with(problem, levels, algorithm, &mut solver)
}

/// Core of `convergence_study` with the per-level solve injectable, so the
/// degenerate-input path (errors at rounding level) is testable.
fn study_with(
    problem: &StokesProblem,
    levels: &[(f64, Mesh)],
    algorithm: Algorithm,
    solver: &mut dyn FnMut(&Mesh) -> Result<(WeakField, Option<Vec<f64>>, usize)>,
) -> Result<ConvergenceReport> {
    if levels.len() < 2 {
        return Err(Error::InvalidArgument(
            "a convergence study needs at least two levels".into(),
        ));
    }
    if !problem.has_exact() {
        return Err(Error::InvalidArgument(format!(
            "problem {} has no exact solution; errors cannot be measured",
            problem.name()
        )));
    }
    for w in levels.windows(2) {
        if w[1].0 >= w[0].0 {
            return Err(Error::InvalidArgument(
                "levels must be ordered by strictly decreasing h".into(),
            ));
        }
    }

    let mut rows: Vec<ConvergenceRow> = Vec::new();
    // Per-level norms of the projected exact solution, used as the scale
    // against which "error at rounding level" is judged.
    let mut scales: Vec<ErrorNorms> = Vec::new();
    let mut failure = None;
    for (h, mesh) in levels {
        match solver(mesh) {
            Ok((u, p, iterations)) => {
                let norms = error_norms(mesh, &u, p.as_deref(), problem)?;
                let zero_p = p.as_ref().map(|_| vec![0.0; mesh.n_triangles()]);
                scales.push(error_norms(
                    mesh,
                    &WeakField::zeros(mesh),
                    zero_p.as_deref(),
                    problem,
                )?);
                rows.push(ConvergenceRow {
                    h: *h,
                    err_triple: norms.triple,
                    rate_triple: None,
                    err_l2_u0: norms.l2_u0,
                    rate_l2_u0: None,
                    err_l2_p: norms.l2_p,
                    rate_l2_p: None,
                    iterations,
                });
            }
            Err(e) => {
                failure = Some(e.to_string());
                break;
            }
        }
    }

    let mut report = ConvergenceReport {
        problem: problem.name().to_string(),
        algorithm,
        rows,
        fitted_triple: None,
        fitted_l2_u0: None,
        fitted_l2_p: None,
        degenerate: false,
        failure,
    };
    compute_rates(&mut report, &scales);
    Ok(report)
}

fn compute_rates(report: &mut ConvergenceReport, scales: &[ErrorNorms]) {
    let n = report.rows.len();
    let floors: Vec<[f64; 3]> = scales
        .iter()
        .map(|s| {
            [
                1e-12 * s.triple,
                1e-12 * s.l2_u0,
                1e-12 * s.l2_p.unwrap_or(0.0),
            ]
        })
        .collect();
    let mut degenerate = false;

    let columns: [(fn(&ConvergenceRow) -> Option<f64>, usize); 3] = [
        (|r| Some(r.err_triple), 0),
        (|r| Some(r.err_l2_u0), 1),
        (|r| r.err_l2_p, 2),
    ];
    let mut fitted = [None; 3];
    let mut pairwise: Vec<[Option<f64>; 3]> = vec![[None; 3]; n];
    for (get, c) in columns {
        if n > 0 && get(&report.rows[0]).is_none() {
            continue;
        }
        // Pairwise rates log(e_prev/e_cur) / log(h_prev/h_cur).
        for i in 1..n {
            let (e0, e1) = (get(&report.rows[i - 1]).unwrap(), get(&report.rows[i]).unwrap());
            let (h0, h1) = (report.rows[i - 1].h, report.rows[i].h);
            let rate = if e0 <= floors[i - 1][c] || e1 <= floors[i][c] {
                degenerate = true;
                RATE_CLAMP
            } else {
                let r = (e0 / e1).ln() / (h0 / h1).ln();
                if !r.is_finite() || r.abs() > RATE_CLAMP {
                    degenerate = true;
                    RATE_CLAMP.copysign(if r.is_nan() { 1.0 } else { r })
                } else {
                    r
                }
            };
            pairwise[i][c] = Some(rate);
        }
        // Least-squares slope over the levels above rounding noise.
        let pts: Vec<(f64, f64)> = (0..n)
            .filter(|&i| get(&report.rows[i]).unwrap() > floors[i][c])
            .map(|i| (report.rows[i].h.ln(), get(&report.rows[i]).unwrap().ln()))
            .collect();
        if pts.len() < 2 {
            degenerate = true;
            continue;
        }
        let m = pts.len() as f64;
        let (mx, my) = (
            pts.iter().map(|p| p.0).sum::<f64>() / m,
            pts.iter().map(|p| p.1).sum::<f64>() / m,
        );
        let var: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        let cov: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        fitted[c] = Some(cov / var);
    }

    for (i, row) in report.rows.iter_mut().enumerate() {
        row.rate_triple = pairwise[i][0];
        row.rate_l2_u0 = pairwise[i][1];
        row.rate_l2_p = pairwise[i][2];
    }
    report.fitted_triple = fitted[0];
    report.fitted_l2_u0 = fitted[1];
    report.fitted_l2_p = fitted[2];
    report.degenerate = degenerate;
}

/// The structured refinement sequence h = 1/coarse, 1/(2 coarse), ...,
/// 1/fine for problems on rectangle-type domains. `fine` must be `coarse`
/// times a power of two.
pub fn structured_levels(
    problem: &StokesProblem,
    coarse: usize,
    fine: usize,
    diagonal: Diagonal,
) -> Result<Vec<(f64, Mesh)>> {
    if coarse == 0 || fine < coarse || fine % coarse != 0 || !(fine / coarse).is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "level range {coarse}:{fine} must double from coarse to fine"
        )));
    }
    let mut levels = Vec::new();
    let mut n = coarse;
    loop {
        levels.push((1.0 / n as f64, problem.structured_mesh(n, diagonal)?));
        if n == fine {
            break;
        }
        n *= 2;
    }
    Ok(levels)
}

/// `count` levels obtained by uniform (red) refinement of a base mesh,
/// labelled by the measured h_max of each level.
pub fn refined_levels(base: Mesh, count: usize) -> Vec<(f64, Mesh)> {
    let count = count.max(1);
    let mut levels = Vec::with_capacity(count);
    let mut mesh = base;
    for _ in 0..count - 1 {
        let next = mesh.refine_uniform();
        levels.push((mesh.h_max(), mesh));
        mesh = next;
    }
    levels.push((mesh.h_max(), mesh));
    levels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Domain;

    /// A global Stokes solution with linear velocity and constant
    /// pressure: u = (x + 2y, 3x - y), div u = 0, f = 0.
    fn linear_problem() -> StokesProblem {
        StokesProblem {
            name: "linear",
            nu: 1.0,
            domain: Domain::UnitSquare,
            homogeneous: false,
            body_force: Box::new(|_, _| [0.0, 0.0]),
            boundary_value: Box::new(|x, y| [x + 2.0 * y, 3.0 * x - y]),
            exact_velocity: Some(Box::new(|x, y| [x + 2.0 * y, 3.0 * x - y])),
            exact_pressure: Some(Box::new(|_, _| 0.0)),
        }
    }

    fn constant_problem() -> StokesProblem {
        StokesProblem {
            name: "constant",
            nu: 1.0,
            domain: Domain::UnitSquare,
            homogeneous: false,
            body_force: Box::new(|_, _| [0.0, 0.0]),
            boundary_value: Box::new(|_, _| [0.7, -0.3]),
            exact_velocity: Some(Box::new(|_, _| [0.7, -0.3])),
            exact_pressure: Some(Box::new(|_, _| 2.5)),
        }
    }

    #[test]
    fn projection_reproduces_constants() {
        let mesh = Mesh::unit_square(3, Diagonal::NorthEast).unwrap();
        let (u, p) = project_exact(&mesh, &constant_problem()).unwrap();
        for c in &u.cell {
            assert!((c[0] - 0.7).abs() <= 1e-14 && (c[1] + 0.3).abs() <= 1e-14);
        }
        for e in &u.edge {
            assert!((e[0] - 0.7).abs() <= 1e-14 && (e[1] + 0.3).abs() <= 1e-14);
        }
        // Constant pressure disappears under the zero-mean shift.
        for v in &p {
            assert!(v.abs() <= 1e-14);
        }
    }

    #[test]
    fn linear_cell_dof_is_centroid_value() {
        let mesh = Mesh::from_raw(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let problem = StokesProblem {
            name: "xy",
            nu: 1.0,
            domain: Domain::UnitSquare,
            homogeneous: false,
            body_force: Box::new(|_, _| [0.0, 0.0]),
            boundary_value: Box::new(|x, y| [x, -y]),
            exact_velocity: Some(Box::new(|x, y| [x, -y])),
            exact_pressure: Some(Box::new(|_, _| 0.0)),
        };
        let (u, _) = project_exact(&mesh, &problem).unwrap();
        assert!((u.cell[0][0] - 1.0 / 3.0).abs() <= 1e-14);
        assert!((u.cell[0][1] + 1.0 / 3.0).abs() <= 1e-14);
    }

    #[test]
    fn example1_projection_is_bounded() {
        let mesh = Mesh::unit_square(4, Diagonal::NorthEast).unwrap();
        let (u, _) = project_exact(&mesh, &StokesProblem::example1()).unwrap();
        let pi = std::f64::consts::PI;
        for v in u.cell.iter().chain(u.edge.iter()) {
            assert!(v[0].is_finite() && v[1].is_finite());
            assert!(v[0].abs() <= 2.0 * pi && v[1].abs() <= 2.0 * pi);
        }
    }

    #[test]
    fn triple_norm_of_projected_linear_field_is_gradient_norm() {
        // For linear u the weak gradient of the projection is the exact
        // (constant) gradient, so |||Q_h u|||^2 = integral of |grad u|^2
        // = 15 for u = (x + 2y, 3x - y) on the unit square.
        let problem = linear_problem();
        for diagonal in [Diagonal::NorthEast, Diagonal::NorthWest] {
            let mesh = Mesh::unit_square(3, diagonal).unwrap();
            let zeros_p = vec![0.0; mesh.n_triangles()];
            let norms =
                error_norms(&mesh, &WeakField::zeros(&mesh), Some(&zeros_p), &problem).unwrap();
            let sq = norms.triple * norms.triple;
            assert!((sq - 15.0).abs() <= 1e-12 * 15.0, "got {sq}");
        }
    }

    #[test]
    fn exact_projection_gives_exact_zeros() {
        let mesh = Mesh::unit_square(4, Diagonal::NorthWest).unwrap();
        let problem = StokesProblem::example1();
        let (u, p) = project_exact(&mesh, &problem).unwrap();
        let norms = error_norms(&mesh, &u, Some(&p), &problem).unwrap();
        assert_eq!(norms.triple, 0.0);
        assert_eq!(norms.l2_u0, 0.0);
        assert_eq!(norms.l2_p, Some(0.0));
    }

    #[test]
    fn pressure_error_invariant_under_constant_shift() {
        let mesh = Mesh::unit_square(4, Diagonal::NorthEast).unwrap();
        let problem = StokesProblem::example1();
        let (u, p) = project_exact(&mesh, &problem).unwrap();
        let perturbed: Vec<f64> = p.iter().enumerate().map(|(i, v)| v + 1e-2 * (i as f64).sin()).collect();
        let shifted: Vec<f64> = perturbed.iter().map(|v| v + 5.0).collect();
        let a = error_norms(&mesh, &u, Some(&perturbed), &problem).unwrap();
        let b = error_norms(&mesh, &u, Some(&shifted), &problem).unwrap();
        let (ea, eb) = (a.l2_p.unwrap(), b.l2_p.unwrap());
        assert!((ea - eb).abs() <= 1e-12 * ea.max(1.0), "{ea} vs {eb}");
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mesh = Mesh::unit_square(2, Diagonal::NorthEast).unwrap();
        let other = Mesh::unit_square(3, Diagonal::NorthEast).unwrap();
        let problem = StokesProblem::example1();
        let (u, p) = project_exact(&other, &problem).unwrap();
        assert!(matches!(
            error_norms(&mesh, &u, Some(&p), &problem),
            Err(Error::InvalidArgument(_))
        ));
        let (u2, _) = project_exact(&mesh, &problem).unwrap();
        assert!(matches!(
            error_norms(&mesh, &u2, Some(&p), &problem),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn study_on_example1_shows_the_expected_orders() {
        let problem = StokesProblem::example1();
        let levels = structured_levels(&problem, 4, 16, Diagonal::NorthEast).unwrap();
        let report =
            convergence_study(&problem, &levels, Algorithm::Saddle, 1e-10, false).unwrap();
        assert!(report.failure.is_none());
        assert!(!report.degenerate);
        assert_eq!(report.rows.len(), 3);
        assert!(report.rows[0].rate_triple.is_none());
        assert!(report.rows[1].rate_triple.is_some());
        let ft = report.fitted_triple.unwrap();
        let fu = report.fitted_l2_u0.unwrap();
        let fp = report.fitted_l2_p.unwrap();
        assert!((0.85..=1.35).contains(&ft), "triple rate {ft}");
        assert!((1.7..=2.2).contains(&fu), "l2 velocity rate {fu}");
        assert!((0.8..=1.6).contains(&fp), "pressure rate {fp}");
    }

    #[test]
    fn degenerate_study_clamps_and_flags() {
        let problem = StokesProblem::example1();
        let levels = structured_levels(&problem, 2, 4, Diagonal::NorthEast).unwrap();
        let mut solver = |mesh: &Mesh| {
            let (u, p) = project_exact(mesh, &problem)?;
            Ok((u, Some(p), 1))
        };
        let report = study_with(&problem, &levels, Algorithm::Saddle, &mut solver).unwrap();
        assert!(report.degenerate);
        assert_eq!(report.rows[1].rate_triple, Some(RATE_CLAMP));
        assert_eq!(report.rows[1].rate_l2_u0, Some(RATE_CLAMP));
        assert_eq!(report.fitted_triple, None);
        let csv = report.to_csv();
        assert!(csv.lines().last().unwrap().starts_with("fit,"));
    }

    #[test]
    fn failed_level_yields_partial_report() {
        let problem = StokesProblem::example1();
        let levels = structured_levels(&problem, 2, 8, Diagonal::NorthEast).unwrap();
        let mut calls = 0;
        let mut solver = |mesh: &Mesh| {
            calls += 1;
            if calls == 3 {
                return Err(Error::SolverStalled {
                    solver: "test",
                    iterations: 1,
                    residual: 1.0,
                });
            }
            let s = solve_saddle(mesh, &problem, 1e-10)?;
            Ok((s.velocity, Some(s.pressure), s.report.iterations))
        };
        let report = study_with(&problem, &levels, Algorithm::Saddle, &mut solver).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert!(report.failure.is_some());
        assert!(report.render_table().contains("aborted after 2 level(s)"));
    }

    #[test]
    fn csv_layout_matches_contract() {
        let problem = StokesProblem::example1();
        let levels = structured_levels(&problem, 2, 4, Diagonal::NorthEast).unwrap();
        let saddle =
            convergence_study(&problem, &levels, Algorithm::Saddle, 1e-8, false).unwrap();
        let csv = saddle.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "h,err_triple,rate,err_l2u,rate,err_l2p,rate");
        assert_eq!(lines.len(), 4); // 2 levels + fit row
        assert_eq!(lines[1].split(',').count(), 7);
        assert!(lines[1].starts_with("5.00000e-1,"));
        assert!(lines[3].starts_with("fit,,"));

        let divfree =
            convergence_study(&problem, &levels, Algorithm::DivFree, 1e-8, false).unwrap();
        let csv = divfree.to_csv();
        assert_eq!(csv.lines().next().unwrap(), "h,err_triple,rate,err_l2u,rate");
        assert_eq!(csv.lines().nth(1).unwrap().split(',').count(), 5);

        let with_p =
            convergence_study(&problem, &levels, Algorithm::DivFree, 1e-8, true).unwrap();
        assert!(with_p.has_pressure());
    }

    #[test]
    fn csv_is_deterministic_across_runs() {
        let problem = StokesProblem::example1();
        let levels = structured_levels(&problem, 2, 4, Diagonal::NorthEast).unwrap();
        let a = convergence_study(&problem, &levels, Algorithm::Saddle, 1e-10, false)
            .unwrap()
            .to_csv();
        let b = convergence_study(&problem, &levels, Algorithm::Saddle, 1e-10, false)
            .unwrap()
            .to_csv();
        assert_eq!(a, b);
    }

    #[test]
    fn level_builders_validate_and_halve() {
        let problem = StokesProblem::example1();
        assert!(structured_levels(&problem, 4, 12, Diagonal::NorthEast).is_err());
        assert!(structured_levels(&problem, 0, 4, Diagonal::NorthEast).is_err());
        let levels = structured_levels(&problem, 4, 16, Diagonal::NorthEast).unwrap();
        assert_eq!(levels.len(), 3);
        assert_eq!(levels[0].0, 0.25);
        assert_eq!(levels[2].0, 1.0 / 16.0);

        let base = Mesh::unit_square(2, Diagonal::NorthEast).unwrap();
        let refined = refined_levels(base, 3);
        assert_eq!(refined.len(), 3);
        assert_eq!(refined[0].1.n_triangles(), 8);
        assert_eq!(refined[2].1.n_triangles(), 128);
        assert!((refined[0].0 / refined[1].0 - 2.0).abs() <= 1e-12);
        assert!((refined[1].0 / refined[2].0 - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn study_rejects_bad_inputs() {
        let problem = StokesProblem::example1();
        let one = structured_levels(&problem, 4, 4, Diagonal::NorthEast).unwrap();
        assert!(convergence_study(&problem, &one, Algorithm::Saddle, 1e-8, false).is_err());
        let no_exact = StokesProblem::example5();
        let levels = structured_levels(&no_exact, 2, 4, Diagonal::NorthEast).unwrap();
        assert!(
            convergence_study(&no_exact, &levels, Algorithm::Saddle, 1e-8, false).is_err()
        );
    }
}
