//! Command-line driver: convergence tables (CSV), single solves with VTK
//! export, and the self-check suites.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wg_stokes::analysis::{
    convergence_study, refined_levels, structured_levels, Algorithm, ConvergenceReport,
};
use wg_stokes::assembly::solve_saddle;
use wg_stokes::divfree::{recover_pressure, solve_divfree};
use wg_stokes::mesh::{Diagonal, Mesh};
use wg_stokes::problems::StokesProblem;
use wg_stokes::verify::{run_suites, VerifyOptions};
use wg_stokes::vtk::write_vtk;
use wg_stokes::{Error, Result};

#[derive(Parser)]
#[command(
    name = "wg-stokes",
    version,
    about = "Lowest-order weak Galerkin solver for the Stokes equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a refinement study and write the error table as CSV.
    Convergence(ConvergenceArgs),
    /// Solve one problem on one mesh and export the fields as legacy VTK.
    Solve(SolveArgs),
    /// Run the built-in verification suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    /// Algorithm 1: MINRES on the full saddle-point system.
    Saddle,
    /// Algorithm 2: CG on the divergence-free subspace.
    Divfree,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Algorithm {
        match a {
            AlgorithmArg::Saddle => Algorithm::Saddle,
            AlgorithmArg::Divfree => Algorithm::DivFree,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DiagonalArg {
    /// Split squares along the south-west to north-east diagonal.
    Ne,
    /// Split squares along the south-east to north-west diagonal.
    Nw,
}

impl From<DiagonalArg> for Diagonal {
    fn from(d: DiagonalArg) -> Diagonal {
        match d {
            DiagonalArg::Ne => Diagonal::NorthEast,
            DiagonalArg::Nw => Diagonal::NorthWest,
        }
    }
}

#[derive(Args)]
struct ProblemArgs {
    /// Problem id: ex1 | ex2 | ex3 | ex4 | ex5 | ex6.
    #[arg(long)]
    problem: String,
    /// Reynolds number (used by ex3; must be positive).
    #[arg(long = "Re", default_value_t = 1.0)]
    re: f64,
    /// Relative solver tolerance (default 1e-10; the WG_STOKES_TOL
    /// environment variable overrides the default, the flag beats both).
    #[arg(long)]
    tol: Option<f64>,
}

impl ProblemArgs {
    fn problem(&self) -> Result<StokesProblem> {
        StokesProblem::by_name(&self.problem, self.re)
    }

    fn tol(&self) -> Result<f64> {
        if let Some(t) = self.tol {
            return check_tol(t, "--tol");
        }
        match std::env::var("WG_STOKES_TOL") {
            Ok(s) => {
                let t: f64 = s
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("WG_STOKES_TOL='{s}' is not a number")))?;
                check_tol(t, "WG_STOKES_TOL")
            }
            Err(_) => Ok(1e-10),
        }
    }
}

fn check_tol(t: f64, what: &str) -> Result<f64> {
    if t > 0.0 && t < 1.0 {
        Ok(t)
    } else {
        Err(Error::InvalidArgument(format!("{what} must lie in (0, 1), got {t}")))
    }
}

#[derive(Args)]
struct MeshArgs {
    /// Base path of a Triangle-format mesh (reads PATH.node and PATH.ele;
    /// a trailing .node or .ele is accepted and stripped).
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Uniform refinements applied to an imported or bundled base mesh.
    #[arg(long, default_value_t = 0)]
    refine: usize,
    /// Structured grid parameter: cells of size 1/n (structured domains).
    #[arg(long, default_value_t = 32)]
    n: usize,
    /// Diagonal direction for structured meshes.
    #[arg(long, value_enum, default_value_t = DiagonalArg::Ne)]
    diagonal: DiagonalArg,
}

impl MeshArgs {
    fn import(&self) -> Result<Option<Mesh>> {
        let Some(path) = &self.mesh else {
            return Ok(None);
        };
        let base = match path.extension().and_then(|e| e.to_str()) {
            Some("node") | Some("ele") => path.with_extension(""),
            _ => path.clone(),
        };
        let read = |ext: &str| -> Result<String> {
            let p = base.with_extension(ext);
            fs::read_to_string(&p)
                .map_err(|e| Error::MeshImport(format!("{}: {e}", p.display())))
        };
        Ok(Some(Mesh::import_triangle(&read("node")?, &read("ele")?)?))
    }

    /// The single mesh for `solve`: imported > bundled > structured.
    fn single(&self, problem: &StokesProblem) -> Result<Mesh> {
        let mut mesh = match self.import()? {
            Some(m) => m,
            None => match problem.bundled_mesh() {
                Some(m) => m,
                None => problem.structured_mesh(self.n, self.diagonal.into())?,
            },
        };
        for _ in 0..self.refine {
            mesh = mesh.refine_uniform();
        }
        Ok(mesh)
    }
}

#[derive(Args)]
struct ConvergenceArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Algorithm to run per level.
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Saddle)]
    algorithm: AlgorithmArg,
    /// Structured level range `a:b`: h = 1/a, 1/(2a), ..., 1/b.
    #[arg(long)]
    levels: Option<String>,
    #[command(flatten)]
    mesh: MeshArgs,
    /// Recover a pressure per level when running the divfree algorithm.
    #[arg(long)]
    recover_pressure: bool,
    /// CSV output path.
    #[arg(long, default_value = "convergence.csv")]
    output: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Saddle)]
    algorithm: AlgorithmArg,
    #[command(flatten)]
    mesh: MeshArgs,
    /// Recover the pressure after a divfree solve (the saddle algorithm
    /// always produces one).
    #[arg(long)]
    recover_pressure: bool,
    /// VTK output path.
    #[arg(long, default_value = "solution.vtk")]
    output: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// Restrict the consistency suite to one problem (default: ex1..ex3).
    #[arg(long)]
    problem: Option<String>,
    #[arg(long = "Re", default_value_t = 1.0)]
    re: f64,
    /// Structured mesh sizes for the mesh/divfree suites.
    #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 4, 8])]
    sizes: Vec<usize>,
    /// Number of random triangles for the kernel oracle.
    #[arg(long, default_value_t = 100)]
    triangles: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Deliberately corrupt a divergence-free basis column to demonstrate
    /// suite failure (testing hook).
    #[arg(long, value_parser = ["divfree-sign"])]
    inject_fault: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Convergence(args) => cmd_convergence(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Verify(args) => cmd_verify(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn parse_levels(spec: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = spec.split(':').collect();
    let err = || Error::InvalidArgument(format!("--levels '{spec}' must look like 4:128"));
    if parts.len() != 2 {
        return Err(err());
    }
    let a: usize = parts[0].parse().map_err(|_| err())?;
    let b: usize = parts[1].parse().map_err(|_| err())?;
    Ok((a, b))
}

fn cmd_convergence(args: ConvergenceArgs) -> Result<ExitCode> {
    let problem = args.problem.problem()?;
    let tol = args.problem.tol()?;
    let algorithm: Algorithm = args.algorithm.into();
    if algorithm == Algorithm::DivFree && !problem.is_homogeneous() {
        return Err(Error::InvalidArgument(format!(
            "the divfree algorithm needs homogeneous boundary data; {} has none",
            problem.name()
        )));
    }

    let levels = match (&args.levels, &args.mesh.mesh) {
        (Some(spec), None) if problem.domain().has_structured_family() => {
            let (a, b) = parse_levels(spec)?;
            structured_levels(&problem, a, b, args.mesh.diagonal.into())?
        }
        (Some(_), None) => {
            return Err(Error::InvalidArgument(format!(
                "{} has no structured mesh family; use --refine (optionally with --mesh)",
                problem.name()
            )));
        }
        (Some(_), Some(_)) => {
            return Err(Error::InvalidArgument(
                "--levels and --mesh are mutually exclusive; use --refine with --mesh".into(),
            ));
        }
        (None, _) => {
            let base = match args.mesh.import()? {
                Some(m) => m,
                None => problem.bundled_mesh().ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "no --levels given and {} has no bundled mesh; pass --levels or --mesh",
                        problem.name()
                    ))
                })?,
            };
            if args.mesh.refine == 0 {
                return Err(Error::InvalidArgument(
                    "mesh-based studies need --refine >= 1 (levels = base + refinements)".into(),
                ));
            }
            refined_levels(base, args.mesh.refine + 1)
        }
    };

    let report = convergence_study(&problem, &levels, algorithm, tol, args.recover_pressure)?;
    print!("{}", report.render_table());
    write_report(&args.output, &report)?;
    println!("wrote {}", args.output.display());
    Ok(if report.failure.is_none() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn write_report(path: &Path, report: &ConvergenceReport) -> Result<()> {
    fs::write(path, report.to_csv())?;
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<ExitCode> {
    let problem = args.problem.problem()?;
    let tol = args.problem.tol()?;
    let algorithm: Algorithm = args.algorithm.into();
    if algorithm == Algorithm::DivFree && !problem.is_homogeneous() {
        return Err(Error::InvalidArgument(format!(
            "the divfree algorithm needs homogeneous boundary data; {} has none",
            problem.name()
        )));
    }
    let mesh = args.mesh.single(&problem)?;

    let (velocity, pressure, report, recovered) = match algorithm {
        Algorithm::Saddle => {
            let s = solve_saddle(&mesh, &problem, tol)?;
            (s.velocity, s.pressure, s.report, true)
        }
        Algorithm::DivFree => {
            let (u, report) = solve_divfree(&mesh, &problem, tol)?;
            if args.recover_pressure {
                let (p, _) = recover_pressure(&mesh, &problem, &u, tol)?;
                (u, p, report, true)
            } else {
                let zeros = vec![0.0; mesh.n_triangles()];
                (u, zeros, report, false)
            }
        }
    };

    let mut buf = Vec::new();
    write_vtk(
        &mut buf,
        &format!("{} ({})", problem.name(), Algorithm::from(args.algorithm)),
        &mesh,
        &velocity.cell,
        &pressure,
    )
    .map_err(Error::Io)?;
    fs::write(&args.output, buf).map_err(Error::Io)?;

    let mean: f64 = (0..mesh.n_triangles())
        .map(|t| mesh.tri_geometry(t).area * pressure[t])
        .sum();
    let summary = serde_json::json!({
        "problem": problem.name(),
        "algorithm": Algorithm::from(args.algorithm).to_string(),
        "mesh": mesh.stats_json(),
        "solver": {
            "iterations": report.iterations,
            "relative_residual": report.relative_residual,
            "converged": report.converged,
            "seconds": report.seconds,
        },
        "pressure_recovered": recovered,
        "pressure_mean": mean,
        "output": args.output.display().to_string(),
    });
    println!("{summary}");
    Ok(if report.converged {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let defaults = VerifyOptions::default();
    let opts = VerifyOptions {
        sizes: args.sizes,
        triangles: args.triangles,
        seed: args.seed,
        problems: match &args.problem {
            Some(p) => vec![p.clone()],
            None => defaults.problems,
        },
        reynolds: args.re,
        inject_divfree_fault: args.inject_fault.as_deref() == Some("divfree-sign"),
    };
    let results = run_suites(&opts);
    let mut all = true;
    for r in &results {
        println!("suite {}: {} - {}", r.name, if r.passed { "PASS" } else { "FAIL" }, r.detail);
        all &= r.passed;
    }
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
