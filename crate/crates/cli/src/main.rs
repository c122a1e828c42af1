//! `burgers`: solve and verify `u_t + g(u)·u_x = f(u)` from problem files.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 verification failure,
//! 3 numerical non-convergence.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use burgers_core::quad::EllMap;
use burgers_core::registry::{self, STENCIL};
use burgers_core::solver::{
    breaking_time, NonhomogeneousSolver, PointSolver, Problem, Solver, DEFAULT_BREAKING_SAMPLES,
};
use burgers_core::verify::{residual_field, residual_local, BranchSelector, Field, Grid};
use burgers_core::{problem_file, Error, Interval};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "burgers",
    version,
    about = "Exact quadrature solutions of u_t + g(u) u_x = f(u)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve on an (x, t) grid and write every branch as CSV.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        window: Window,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Residual of a claimed solution or of the solver's single-branch field.
    Residual {
        #[arg(long)]
        problem: PathBuf,
        /// Closed form u(x, t).
        #[arg(
            long,
            conflicts_with = "from_solve",
            required_unless_present = "from_solve",
            allow_hyphen_values = true
        )]
        claim: Option<String>,
        #[arg(long)]
        from_solve: bool,
        #[command(flatten)]
        window: Window,
        /// Overrides the problem file's `tol`.
        #[arg(long)]
        tol: Option<f64>,
        /// Stencil half-width, or `grid` for the grid's own spacing.
        #[arg(long, default_value_t = STENCIL.to_string())]
        stencil: String,
    },
    /// Estimate the first gradient blow-up time for f = 0.
    BreakingTime {
        #[arg(long)]
        problem: PathBuf,
        /// Profile interval LO:HI; defaults to the file's `s_domain`.
        #[arg(long, allow_hyphen_values = true)]
        s: Option<String>,
        #[arg(long, default_value_t = DEFAULT_BREAKING_SAMPLES)]
        samples: usize,
    },
    /// Tabulate u, phi(u), ell(phi(u)) as CSV.
    PhiTable {
        #[arg(long)]
        problem: PathBuf,
        /// LO:HI:N
        #[arg(long, allow_hyphen_values = true)]
        u: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in worked examples.
    Examples {
        #[arg(long)]
        id: Option<String>,
    },
}

#[derive(Args)]
struct Window {
    /// LO:HI:N
    #[arg(long, allow_hyphen_values = true)]
    x: String,
    /// LO:HI:N
    #[arg(long, allow_hyphen_values = true)]
    t: String,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConvergence { .. } => 3,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    usage(format!("{}: {e}", path.display()))
}

type Outcome = Result<u8, Failure>;

fn parse_f64(text: &str, what: &str) -> Result<f64, Failure> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| usage(format!("{what}: `{text}` is not a finite number")))
}

/// `LO:HI:N` as `N` nodes from `LO` to `HI`.
fn parse_range(text: &str, what: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err(usage(format!("{what}: expected LO:HI:N, got `{text}`")));
    };
    let (lo, hi) = (parse_f64(lo, what)?, parse_f64(hi, what)?);
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| usage(format!("{what}: N must be a positive integer")))?;
    match n {
        0 => Err(usage(format!("{what}: N must be a positive integer"))),
        1 => Ok(vec![lo]),
        _ => Ok(Interval::new(lo, hi).map_err(Failure::from)?.nodes(n - 1)),
    }
}

fn parse_interval(text: &str, what: &str) -> Result<Interval, Failure> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi] = parts[..] else {
        return Err(usage(format!("{what}: expected LO:HI, got `{text}`")));
    };
    Ok(Interval::new(parse_f64(lo, what)?, parse_f64(hi, what)?)?)
}

fn load(path: &Path) -> Result<Problem, Failure> {
    problem_file::load(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_writer(out: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>, Failure> {
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(path).map_err(|e| io_failure(path, e))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    };
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink))
}

fn csv_failure(e: impl std::fmt::Display) -> Failure {
    usage(format!("writing CSV: {e}"))
}

fn solve(problem: &Path, window: &Window, out: Option<&Path>) -> Outcome {
    let p = load(problem)?;
    let xs = parse_range(&window.x, "--x")?;
    let ts = parse_range(&window.t, "--t")?;
    let solver = Solver::new(&p)?;
    let sets = solver.sweep(&xs, &ts);
    let width = sets.iter().map(|s| s.len()).max().unwrap_or(0).max(1);
    let mut w = csv_writer(out)?;
    let mut header = vec!["x".to_string(), "t".into(), "branch_count".into()];
    header.extend((0..width).map(|k| format!("u_{k}")));
    header.push("converged".into());
    w.write_record(&header).map_err(csv_failure)?;
    let mut unconverged = 0;
    for set in &sets {
        let (x, t) = set.point.expect("solver records the point");
        let mut row = vec![num(x), num(t), set.len().to_string()];
        row.extend(set.roots.iter().map(|r| num(r.u)));
        row.resize(3 + width, String::new());
        row.push(set.converged().to_string());
        if !set.converged() {
            unconverged += 1;
        }
        w.write_record(&row).map_err(csv_failure)?;
    }
    w.flush().map_err(csv_failure)?;
    if unconverged > 0 {
        eprintln!("warning: {unconverged} point(s) had roots that failed to converge");
        return Ok(3);
    }
    Ok(0)
}

fn residual(
    problem: &Path,
    claim: Option<&str>,
    window: &Window,
    tol: Option<f64>,
    stencil: &str,
) -> Outcome {
    let mut p = load(problem)?;
    if let Some(tol) = tol {
        if tol.is_nan() || tol <= 0.0 {
            return Err(usage("--tol must be positive"));
        }
        p.settings.residual_tol = tol;
    }
    let grid = Grid::new(
        parse_range(&window.x, "--x")?,
        parse_range(&window.t, "--t")?,
    )?;
    let bound = p.bind()?;
    let tol = p.settings.residual_tol;
    let claim = match claim {
        Some(text) => {
            let e = burgers_core::parse(text)
                .map_err(|e| usage(format!("--claim: {e}")))?
                .bind(&p.params);
            if let Some(name) = e.free_names().into_iter().find(|n| n != "x" && n != "t") {
                return Err(usage(format!("--claim references unbound `{name}`")));
            }
            Some(e)
        }
        None => None,
    };
    let solver = match claim {
        Some(_) => None,
        None => Some(Solver::new(&p)?),
    };
    let eval = |x: f64, t: f64| match (&claim, &solver) {
        (Some(e), _) => e.eval(&[("x", x), ("t", t)]).ok(),
        (None, Some(s)) => BranchSelector::Single.pick(&s.solve(x, t)),
        (None, None) => unreachable!(),
    };
    let report = if stencil == "grid" {
        let field = Field::from_fn(grid, burgers_core::verify::Provenance::ClosedForm, eval);
        residual_field(&bound.f, &bound.g, &field, tol)
    } else {
        let h = parse_f64(stencil, "--stencil")?;
        residual_local(&bound.f, &bound.g, &grid, eval, h, tol)
    };
    let report = match report {
        Ok(r) => r,
        Err(Error::EmptyReport) => {
            println!("no valid nodes: the field is multivalued or undefined on the whole window");
            println!("FAIL");
            return Ok(2);
        }
        Err(e) => return Err(e.into()),
    };
    println!("nodes: {}", report.interior);
    println!(
        "stencil: dx = {:e}, dt = {:e}",
        report.spacing.0, report.spacing.1
    );
    println!(
        "max |r|: {:e} at (x, t) = ({}, {})",
        report.max_abs, report.argmax.0, report.argmax.1
    );
    println!("mean |r|: {:e}", report.mean_abs);
    println!("tol: {:e}", report.tol);
    println!("{}", if report.pass { "PASS" } else { "FAIL" });
    Ok(if report.pass { 0 } else { 2 })
}

fn breaking(problem: &Path, s: Option<&str>, samples: usize) -> Outcome {
    let p = load(problem)?;
    let interval = match (s, p.s_domain) {
        (Some(text), _) => parse_interval(text, "--s")?,
        (None, Some(d)) => d,
        (None, None) => return Err(usage("give --s LO:HI or set s_domain in the problem file")),
    };
    if samples < 2 {
        return Err(usage("--samples must be at least 2"));
    }
    match breaking_time(&p, interval, samples)? {
        Some(t) => println!("{}", num(t)),
        None => println!("none"),
    }
    Ok(0)
}

fn phi_table(problem: &Path, u: &str, out: Option<&Path>) -> Outcome {
    let p = load(problem)?;
    if p.is_homogeneous() {
        return Err(usage("phi is undefined for f = 0"));
    }
    let us = parse_range(u, "--u")?;
    let solver = NonhomogeneousSolver::new(&p)?;
    let ell: &EllMap = solver.ell();
    let mut w = csv_writer(out)?;
    w.write_record(["u", "phi", "ell_phi"])
        .map_err(csv_failure)?;
    for u in us {
        let phi = solver.phi().phi(u)?;
        let l = ell.ell_of_phi(u)?;
        w.write_record([num(u), num(phi), num(l)])
            .map_err(csv_failure)?;
    }
    w.flush().map_err(csv_failure)?;
    Ok(0)
}

fn examples(id: Option<&str>) -> Outcome {
    let entries = match id {
        Some(id) => vec![registry::get(id).ok_or_else(|| {
            usage(format!(
                "unknown example `{id}`; known: {}",
                registry::ids().join(", ")
            ))
        })?],
        None => registry::all(),
    };
    let (outcomes, ok) = registry::run_all(&entries);
    let mut nonconvergence = false;
    for (entry, outcome) in entries.iter().zip(outcomes) {
        match outcome {
            Ok(o) => println!("{o}"),
            Err(e) => {
                nonconvergence |= matches!(e, Error::NonConvergence { .. });
                println!("{}: ERROR ({e})", entry.id);
            }
        }
    }
    Ok(match (ok, nonconvergence) {
        (true, _) => 0,
        (false, true) => 3,
        (false, false) => 2,
    })
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("BURGERS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        usage(format!(
            "BURGERS_THREADS: `{raw}` is not a positive integer"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage(format!("BURGERS_THREADS: {e}")))
}

fn run(cli: Cli) -> Outcome {
    configure_threads()?;
    match &cli.command {
        Command::Solve {
            problem,
            window,
            out,
        } => solve(problem, window, out.as_deref()),
        Command::Residual {
            problem,
            claim,
            window,
            tol,
            stencil,
            ..
        } => residual(problem, claim.as_deref(), window, *tol, stencil),
        Command::BreakingTime {
            problem,
            s,
            samples,
        } => breaking(problem, s.as_deref(), *samples),
        Command::PhiTable { problem, u, out } => phi_table(problem, u, out.as_deref()),
        Command::Examples { id } => examples(id.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
