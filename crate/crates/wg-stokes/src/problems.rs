//! The catalogue of experiments: three manufactured Stokes problems with
//! known exact solutions and three classical benchmark flows.
//!
//! Body forces are hardcoded closed forms (derived by hand from
//! `f = -nu Laplace(u) + grad(p)`), never produced by runtime
//! differentiation; [`verify_consistency`] guards them with a
//! finite-difference oracle.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::{Diagonal, Mesh};
use crate::quadrature::triangle_quadrature;
use crate::vec2::Vec2;

pub type VectorFn = Box<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>;
pub type ScalarFn = Box<dyn Fn(f64, f64) -> f64 + Send + Sync>;

const EX2_NODE: &str = include_str!("../assets/ex2_holed_square.node");
const EX2_ELE: &str = include_str!("../assets/ex2_holed_square.ele");
const EX4_NODE: &str = include_str!("../assets/ex4_channel_hole.node");
const EX4_ELE: &str = include_str!("../assets/ex4_channel_hole.ele");

/// Hole centers and radii of the bundled meshes (see scripts/make_holed_meshes.py).
const EX2_HOLES: [([f64; 2], f64); 3] = [([0.5, 0.5], 0.1), ([0.2, 0.8], 0.1), ([0.8, 0.8], 0.1)];
const EX4_HOLES: [([f64; 2], f64); 1] = [([0.5, 0.5], 0.1)];

/// Geometric descriptor of a problem domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    UnitSquare,
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// Unit square with three circular holes (bundled mesh).
    HoledSquare,
    /// Unit-height channel with a circular obstacle (bundled mesh).
    ChannelHole,
    /// (-2,8) x (-1,1) minus the step block [-2,0] x [-1,0].
    StepChannel,
}

impl Domain {
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            Domain::UnitSquare | Domain::HoledSquare | Domain::ChannelHole => ([0.0, 0.0], [1.0, 1.0]),
            Domain::Rectangle { x0, x1, y0, y1 } => ([*x0, *y0], [*x1, *y1]),
            Domain::StepChannel => ([-2.0, -1.0], [8.0, 1.0]),
        }
    }

    fn holes(&self) -> &'static [([f64; 2], f64)] {
        match self {
            Domain::HoledSquare => &EX2_HOLES,
            Domain::ChannelHole => &EX4_HOLES,
            _ => &[],
        }
    }

    /// Is `p` inside the domain with distance at least `margin` from every
    /// boundary piece (outer rectangle, holes, step walls)?
    pub fn contains_interior(&self, p: Vec2, margin: f64) -> bool {
        let ([lx, ly], [hx, hy]) = self.bounding_box();
        let [x, y] = p;
        if x < lx + margin || x > hx - margin || y < ly + margin || y > hy - margin {
            return false;
        }
        for ([cx, cy], r) in self.holes() {
            if (x - cx).hypot(y - cy) < r + margin {
                return false;
            }
        }
        if let Domain::StepChannel = self {
            // The removed block occupies x < 0, y < 0.
            if x < margin && y < margin {
                return false;
            }
        }
        true
    }

    /// Does this domain come with a structured mesh family (cells of size
    /// `1/n`), as opposed to a bundled imported mesh?
    pub fn has_structured_family(&self) -> bool {
        !matches!(self, Domain::HoledSquare | Domain::ChannelHole)
    }

    /// Structured mesh with square cells of size `1/n` split along
    /// `diagonal`. Errors for imported-mesh domains.
    pub fn structured_mesh(&self, n: usize, diagonal: Diagonal) -> Result<Mesh> {
        if n == 0 {
            return Err(Error::InvalidArgument("mesh resolution must be positive".into()));
        }
        match self {
            Domain::UnitSquare => Mesh::unit_square(n, diagonal),
            Domain::Rectangle { x0, x1, y0, y1 } => {
                let nx = ((x1 - x0) * n as f64).round() as usize;
                let ny = ((y1 - y0) * n as f64).round() as usize;
                Mesh::rectangle(*x0, *x1, *y0, *y1, nx, ny, diagonal)
            }
            Domain::StepChannel => Mesh::rectangle_masked(
                -2.0,
                8.0,
                -1.0,
                1.0,
                10 * n,
                2 * n,
                diagonal,
                |c| !(c[0] < 0.0 && c[1] < 0.0),
            ),
            Domain::HoledSquare | Domain::ChannelHole => Err(Error::Unsupported(
                "this domain has no structured mesh family; use the bundled mesh and uniform refinement".into(),
            )),
        }
    }

    /// The bundled base mesh for imported-mesh domains.
    pub fn bundled_mesh(&self) -> Option<Mesh> {
        let (node, ele) = match self {
            Domain::HoledSquare => (EX2_NODE, EX2_ELE),
            Domain::ChannelHole => (EX4_NODE, EX4_ELE),
            _ => return None,
        };
        Some(Mesh::import_triangle(node, ele).expect("bundled mesh is valid"))
    }
}

/// One Stokes problem: viscosity, domain, data closures, and (for
/// manufactured cases) the exact solution.
pub struct StokesProblem {
    pub(crate) name: &'static str,
    pub nu: f64,
    pub(crate) domain: Domain,
    pub(crate) homogeneous: bool,
    pub(crate) body_force: VectorFn,
    pub(crate) boundary_value: VectorFn,
    pub(crate) exact_velocity: Option<VectorFn>,
    pub(crate) exact_pressure: Option<ScalarFn>,
}

impl StokesProblem {
    /// Trigonometric manufactured solution on the unit square with
    /// homogeneous no-slip data:
    /// `u = (pi sin^2(pi x) sin(2 pi y), -pi sin(2 pi x) sin^2(pi y))`,
    /// `p = cos(pi x) cos(pi y)`, `nu = 1`.
    pub fn example1() -> StokesProblem {
        let u = |x: f64, y: f64| {
            let sx = (PI * x).sin();
            let sy = (PI * y).sin();
            [
                PI * sx * sx * (2.0 * PI * y).sin(),
                -PI * (2.0 * PI * x).sin() * sy * sy,
            ]
        };
        let p = |x: f64, y: f64| (PI * x).cos() * (PI * y).cos();
        let f = |x: f64, y: f64| {
            let pi3 = PI.powi(3);
            let sx = (PI * x).sin();
            let sy = (PI * y).sin();
            [
                2.0 * pi3 * (2.0 * PI * y).sin() * (4.0 * sx * sx - 1.0) - PI * sx * (PI * y).cos(),
                2.0 * pi3 * (2.0 * PI * x).sin() * (1.0 - 4.0 * sy * sy) - PI * (PI * x).cos() * sy,
            ]
        };
        StokesProblem {
            name: "ex1",
            nu: 1.0,
            domain: Domain::UnitSquare,
            homogeneous: true,
            body_force: Box::new(f),
            boundary_value: Box::new(|_, _| [0.0, 0.0]),
            exact_velocity: Some(Box::new(u)),
            exact_pressure: Some(Box::new(p)),
        }
    }

    /// Polynomial manufactured solution on the three-hole square with
    /// non-homogeneous data:
    /// `u = (x + x^2 - 2xy + x^3 - 3xy^2 + x^2 y, -y - 2xy + y^2 - 3x^2 y + y^3 - xy^2)`,
    /// `p = xy + x + y + x^3 y^2 - 4/3`, shifted to zero mean over the
    /// holed domain; `nu = 1`.
    pub fn example2() -> StokesProblem {
        let u = |x: f64, y: f64| {
            [
                x + x * x - 2.0 * x * y + x.powi(3) - 3.0 * x * y * y + x * x * y,
                -y - 2.0 * x * y + y * y - 3.0 * x * x * y + y.powi(3) - x * y * y,
            ]
        };
        let p_raw = |x: f64, y: f64| x * y + x + y + x.powi(3) * y * y - 4.0 / 3.0;
        let f = |x: f64, y: f64| {
            [
                -1.0 - y + 3.0 * x * x * y * y,
                -1.0 + 3.0 * x + 2.0 * x.powi(3) * y,
            ]
        };
        // The -4/3 constant zeroes the mean over the full unit square; the
        // holes shift it slightly, so renormalize over the bundled mesh.
        let mesh = Domain::HoledSquare.bundled_mesh().unwrap();
        let mut integral = 0.0;
        let mut area = 0.0;
        for t in 0..mesh.n_triangles() {
            let g = mesh.tri_geometry(t);
            integral += triangle_quadrature(&g, 4, p_raw);
            area += g.area;
        }
        let shift = integral / area;
        StokesProblem {
            name: "ex2",
            nu: 1.0,
            domain: Domain::HoledSquare,
            homogeneous: false,
            body_force: Box::new(f),
            boundary_value: Box::new(u),
            exact_velocity: Some(Box::new(u)),
            exact_pressure: Some(Box::new(move |x, y| p_raw(x, y) - shift)),
        }
    }

    /// Kovasznay-type manufactured solution on (-1/2, 3/2) x (0, 2) with
    /// `nu = 1/Re` and `lambda = Re/2 - sqrt(Re^2/4 + 4 pi^2)`:
    /// `u = (1 - e^{lambda x} cos(2 pi y), (lambda / 2 pi) e^{lambda x} sin(2 pi y))`,
    /// `p = e^{2 lambda x} / 2 + C` with `C` fixing zero mean.
    pub fn example3(re: f64) -> Result<StokesProblem> {
        if !(re > 0.0) {
            return Err(Error::InvalidArgument(format!("Re must be positive, got {re}")));
        }
        let nu = 1.0 / re;
        let lambda = 0.5 * re - (0.25 * re * re + 4.0 * PI * PI).sqrt();
        // Mean of e^{2 lambda x}/2 over the domain (area 4, height 2):
        // (e^{3 lambda} - e^{-lambda}) / (8 lambda).
        let c = -((3.0 * lambda).exp() - (-lambda).exp()) / (8.0 * lambda);
        let u = move |x: f64, y: f64| {
            let ex = (lambda * x).exp();
            [
                1.0 - ex * (2.0 * PI * y).cos(),
                lambda / (2.0 * PI) * ex * (2.0 * PI * y).sin(),
            ]
        };
        let p = move |x: f64, _y: f64| 0.5 * (2.0 * lambda * x).exp() + c;
        let f = move |x: f64, y: f64| {
            let ex = (lambda * x).exp();
            [
                -nu * (4.0 * PI * PI - lambda * lambda) * ex * (2.0 * PI * y).cos()
                    + lambda * (2.0 * lambda * x).exp(),
                -nu * (lambda.powi(3) / (2.0 * PI) - 2.0 * PI * lambda) * ex * (2.0 * PI * y).sin(),
            ]
        };
        Ok(StokesProblem {
            name: "ex3",
            nu,
            domain: Domain::Rectangle {
                x0: -0.5,
                x1: 1.5,
                y0: 0.0,
                y1: 2.0,
            },
            homogeneous: false,
            body_force: Box::new(f),
            boundary_value: Box::new(u),
            exact_velocity: Some(Box::new(u)),
            exact_pressure: Some(Box::new(p)),
        })
    }

    /// Channel flow around a circular obstacle: plug inflow/outflow
    /// `g = (1, 0)` at `x = 0` and `x = 1`, no-slip elsewhere, `f = 0`.
    pub fn example4() -> StokesProblem {
        let g = |x: f64, _y: f64| {
            if x.abs() < 1e-9 || (x - 1.0).abs() < 1e-9 {
                [1.0, 0.0]
            } else {
                [0.0, 0.0]
            }
        };
        StokesProblem {
            name: "ex4",
            nu: 1.0,
            domain: Domain::ChannelHole,
            homogeneous: false,
            body_force: Box::new(|_, _| [0.0, 0.0]),
            boundary_value: Box::new(g),
            exact_velocity: None,
            exact_pressure: None,
        }
    }

    /// Backward-facing step: parabolic inflow on the upper-left segment,
    /// parabolic outflow over the full right side, no-slip walls, `f = 0`.
    /// Both fluxes equal 1/60.
    pub fn example5() -> StokesProblem {
        let g = |x: f64, y: f64| {
            if (x + 2.0).abs() < 1e-9 {
                [-y * (y - 1.0) / 10.0, 0.0]
            } else if (x - 8.0).abs() < 1e-9 {
                [-(y + 1.0) * (y - 1.0) / 80.0, 0.0]
            } else {
                [0.0, 0.0]
            }
        };
        StokesProblem {
            name: "ex5",
            nu: 1.0,
            domain: Domain::StepChannel,
            homogeneous: false,
            body_force: Box::new(|_, _| [0.0, 0.0]),
            boundary_value: Box::new(g),
            exact_velocity: None,
            exact_pressure: None,
        }
    }

    /// Lid-driven cavity: `g = (1, 0)` on the lid `y = 1`, no-slip
    /// elsewhere, `f = 0`.
    pub fn example6() -> StokesProblem {
        let g = |_x: f64, y: f64| {
            if (y - 1.0).abs() < 1e-9 {
                [1.0, 0.0]
            } else {
                [0.0, 0.0]
            }
        };
        StokesProblem {
            name: "ex6",
            nu: 1.0,
            domain: Domain::UnitSquare,
            homogeneous: false,
            body_force: Box::new(|_, _| [0.0, 0.0]),
            boundary_value: Box::new(g),
            exact_velocity: None,
            exact_pressure: None,
        }
    }

    /// Select a problem by its CLI name (`ex1` ... `ex6`). `re` only
    /// matters for `ex3`.
    pub fn by_name(name: &str, re: f64) -> Result<StokesProblem> {
        match name {
            "ex1" => Ok(StokesProblem::example1()),
            "ex2" => Ok(StokesProblem::example2()),
            "ex3" => StokesProblem::example3(re),
            "ex4" => Ok(StokesProblem::example4()),
            "ex5" => Ok(StokesProblem::example5()),
            "ex6" => Ok(StokesProblem::example6()),
            other => Err(Error::InvalidArgument(format!(
                "unknown problem {other:?} (expected ex1..ex6)"
            ))),
        }
    }

    pub fn names() -> [&'static str; 6] {
        ["ex1", "ex2", "ex3", "ex4", "ex5", "ex6"]
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// True when the Dirichlet data is identically zero.
    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    pub fn has_exact(&self) -> bool {
        self.exact_velocity.is_some()
    }

    pub fn body_force(&self, x: f64, y: f64) -> [f64; 2] {
        (self.body_force)(x, y)
    }

    pub fn boundary_value(&self, x: f64, y: f64) -> [f64; 2] {
        (self.boundary_value)(x, y)
    }

    pub fn exact_velocity(&self, x: f64, y: f64) -> Option<[f64; 2]> {
        self.exact_velocity.as_ref().map(|u| u(x, y))
    }

    pub fn exact_pressure(&self, x: f64, y: f64) -> Option<f64> {
        self.exact_pressure.as_ref().map(|p| p(x, y))
    }

    /// Structured mesh with cells of size `1/n` (see [`Domain::structured_mesh`]).
    pub fn structured_mesh(&self, n: usize, diagonal: Diagonal) -> Result<Mesh> {
        self.domain.structured_mesh(n, diagonal)
    }

    pub fn bundled_mesh(&self) -> Option<Mesh> {
        self.domain.bundled_mesh()
    }
}

/// Outcome of the finite-difference consistency oracle.
#[derive(Debug, Clone)]
pub struct Consistency {
    /// Max-norm residual of `-nu Laplace_fd(u) + grad_fd(p) - f` at the
    /// reporting step.
    pub residual: f64,
    /// The reporting finite-difference step.
    pub step: f64,
    /// Observed convergence order of the residual under step halving.
    pub order: f64,
}

/// Check the hardcoded body force against the exact solution by central
/// finite differences at `samples` random interior points. Fails when the
/// residual is not `O(h^2)` in the step, which is the signature of a wrong
/// hand-derived `f`.
pub fn verify_consistency(problem: &StokesProblem, samples: usize, seed: u64) -> Result<Consistency> {
    const STEP_REPORT: f64 = 1e-4;
    const STEP_ORDER: f64 = 2e-3;
    if !problem.has_exact() {
        return Err(Error::InvalidArgument(format!(
            "problem {} has no exact solution to check against",
            problem.name()
        )));
    }
    let margin = (4.0 * STEP_ORDER).max(0.01);
    let points = sample_interior(problem.domain(), samples, margin, seed)?;

    let worst = |h: f64| -> f64 {
        let mut worst = 0.0f64;
        for &[x, y] in &points {
            let r = fd_residual(problem, x, y, h);
            worst = worst.max(r[0].abs()).max(r[1].abs());
        }
        worst
    };

    let coarse = worst(STEP_ORDER);
    let fine = worst(0.5 * STEP_ORDER);
    let residual = worst(STEP_REPORT);

    let scale = points
        .iter()
        .map(|&[x, y]| {
            let f = problem.body_force(x, y);
            f[0].abs().max(f[1].abs())
        })
        .fold(1.0f64, f64::max);
    let floor = 1e-9 * scale;
    let order = if coarse <= floor && fine <= floor {
        // Exact to rounding (polynomial data); no meaningful order.
        f64::INFINITY
    } else {
        (coarse / fine).log2()
    };
    if order < 1.9 {
        return Err(Error::ConsistencyFailed {
            residual,
            step: STEP_REPORT,
            order,
        });
    }
    Ok(Consistency {
        residual,
        step: STEP_REPORT,
        order,
    })
}

/// Residual of the momentum equation at one point by central differences.
fn fd_residual(problem: &StokesProblem, x: f64, y: f64, h: f64) -> [f64; 2] {
    let u = |x: f64, y: f64| problem.exact_velocity(x, y).unwrap();
    let p = |x: f64, y: f64| problem.exact_pressure(x, y).unwrap();
    let center = u(x, y);
    let (xp, xm) = (u(x + h, y), u(x - h, y));
    let (yp, ym) = (u(x, y + h), u(x, y - h));
    let f = problem.body_force(x, y);
    let mut r = [0.0; 2];
    for k in 0..2 {
        let lap = (xp[k] + xm[k] + yp[k] + ym[k] - 4.0 * center[k]) / (h * h);
        let grad_p = match k {
            0 => (p(x + h, y) - p(x - h, y)) / (2.0 * h),
            _ => (p(x, y + h) - p(x, y - h)) / (2.0 * h),
        };
        r[k] = -problem.nu * lap + grad_p - f[k];
    }
    r
}

/// Rejectionsample `count` interior points with the given boundary margin.
fn sample_interior(domain: &Domain, count: usize, margin: f64, seed: u64) -> Result<Vec<Vec2>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ([lx, ly], [hx, hy]) = domain.bounding_box();
    let mut points = Vec::with_capacity(count);
    for _ in 0..count.saturating_mul(10_000) {
        if points.len() == count {
            break;
        }
        let p = [rng.gen_range(lx..hx), rng.gen_range(ly..hy)];
        if domain.contains_interior(p, margin) {
            points.push(p);
        }
    }
    if points.len() < count {
        return Err(Error::InvalidArgument(
            "could not sample enough interior points; margin too large?".into(),
        ));
    }
    Ok(points)
}
