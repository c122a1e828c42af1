//! PDE residuals `u_t + g(u)·u_x − f(u)` of sampled fields.
//!
//! Derivatives are second-order central differences on the field's own
//! (possibly non-uniform) grid, so the check works for implicitly defined
//! fields that have no expression. Closed-form candidates can also be
//! checked exactly with [`symbolic_residual`].

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quad::PhiMap;
use crate::rootfind::BranchSet;
use crate::solver::PointSolver;
use crate::Interval;

/// Tensor grid; `x` and `t` strictly increasing with at least 3 nodes each.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    xs: Vec<f64>,
    ts: Vec<f64>,
}

impl Grid {
    pub fn new(xs: Vec<f64>, ts: Vec<f64>) -> Result<Self> {
        for (axis, v) in [("x", &xs), ("t", &ts)] {
            if v.len() < 3 {
                return Err(Error::invalid(format!(
                    "{axis} axis needs at least 3 nodes"
                )));
            }
            if !v.iter().all(|a| a.is_finite()) || v.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!(
                    "{axis} axis must be finite and strictly increasing"
                )));
            }
        }
        Ok(Self { xs, ts })
    }

    /// `nx × nt` equally spaced nodes including the window edges.
    pub fn uniform(x: Interval, nx: usize, t: Interval, nt: usize) -> Result<Self> {
        if nx < 3 || nt < 3 {
            return Err(Error::invalid(
                "uniform grid needs at least 3 nodes per axis",
            ));
        }
        Self::new(x.nodes(nx - 1), t.nodes(nt - 1))
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn nt(&self) -> usize {
        self.ts.len()
    }

    pub fn len(&self) -> usize {
        self.nx() * self.nt()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of node `(i, j)`, `t`-major.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx() + i
    }

    pub fn point(&self, k: usize) -> (f64, f64) {
        (self.xs[k % self.nx()], self.ts[k / self.nx()])
    }

    /// Largest spacing along each axis, `(Δx, Δt)`.
    pub fn spacing(&self) -> (f64, f64) {
        let widest = |v: &[f64]| v.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        (widest(&self.xs), widest(&self.ts))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ImplicitSolve,
    ClosedForm,
}

/// Which root of a [`BranchSet`] becomes the field value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchSelector {
    /// Valid only where exactly one root exists and no tangency was seen.
    Single,
    /// The `k`-th root (ascending) where exactly `count` roots exist.
    Index { k: usize, count: usize },
    /// The `k`-th root (ascending) wherever it exists.
    Rank(usize),
}

impl BranchSelector {
    pub fn pick(&self, set: &BranchSet) -> Option<f64> {
        if !set.converged() || !set.marginal.is_empty() {
            return None;
        }
        match *self {
            BranchSelector::Single => set.single(),
            BranchSelector::Index { k, count } => (set.len() == count).then(|| set.roots[k].u),
            BranchSelector::Rank(k) => set.roots.get(k).map(|r| r.u),
        }
    }
}

/// Values on a grid; `None` marks nodes excluded from residual statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<Option<f64>>,
    pub provenance: Provenance,
}

impl Field {
    pub fn from_fn<F>(grid: Grid, provenance: Provenance, f: F) -> Self
    where
        F: Fn(f64, f64) -> Option<f64> + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let (x, t) = grid.point(k);
                f(x, t).filter(|v| v.is_finite())
            })
            .collect();
        Self {
            grid,
            values,
            provenance,
        }
    }

    /// Samples an expression in `x`, `t`; nodes where it fails to evaluate are invalid.
    pub fn from_expr(grid: Grid, expr: &Expr) -> Result<Self> {
        if let Some(name) = expr.free_names().into_iter().find(|n| n != "x" && n != "t") {
            return Err(Error::invalid(format!(
                "candidate references unbound `{name}`"
            )));
        }
        Ok(Self::from_fn(grid, Provenance::ClosedForm, |x, t| {
            expr.eval(&[("x", x), ("t", t)]).ok()
        }))
    }

    /// `sets` in grid order, as returned by [`PointSolver::sweep`].
    pub fn from_branch_sets(
        grid: Grid,
        sets: &[BranchSet],
        selector: BranchSelector,
    ) -> Result<Self> {
        if sets.len() != grid.len() {
            return Err(Error::invalid(format!(
                "{} branch sets for a grid of {} nodes",
                sets.len(),
                grid.len()
            )));
        }
        let values = sets.iter().map(|s| selector.pick(s)).collect();
        Ok(Self {
            grid,
            values,
            provenance: Provenance::ImplicitSolve,
        })
    }

    pub fn from_solver<S: PointSolver + ?Sized>(
        grid: Grid,
        solver: &S,
        selector: BranchSelector,
    ) -> Self {
        let sets = solver.sweep(grid.xs(), grid.ts());
        Self::from_branch_sets(grid, &sets, selector).expect("sweep covers the grid")
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[self.grid.index(i, j)]
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// Nodewise image under `map`; failures become invalid nodes.
    pub fn map<M>(&self, map: M) -> Field
    where
        M: Fn(f64) -> Result<f64> + Sync,
    {
        let values = self
            .values
            .par_iter()
            .map(|v| v.and_then(|u| map(u).ok()).filter(|w| w.is_finite()))
            .collect();
        Field {
            grid: self.grid.clone(),
            values,
            provenance: self.provenance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    /// Per node, `None` at boundary and excluded nodes.
    pub residuals: Vec<Option<f64>>,
    pub max_abs: f64,
    pub mean_abs: f64,
    /// Node of the largest `|r|`.
    pub argmax: (f64, f64),
    pub interior: usize,
    pub tol: f64,
    pub pass: bool,
    /// Largest `(Δx, Δt)` of the stencil grid.
    pub spacing: (f64, f64),
    grid: Grid,
}

impl ResidualReport {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Residual at the node nearest to `(x, t)`.
    pub fn at(&self, x: f64, t: f64) -> Option<f64> {
        let nearest = |v: &[f64], a: f64| {
            (0..v.len())
                .min_by(|&i, &j| (v[i] - a).abs().total_cmp(&(v[j] - a).abs()))
                .expect("non-empty axis")
        };
        let (i, j) = (nearest(self.grid.xs(), x), nearest(self.grid.ts(), t));
        self.residuals[self.grid.index(i, j)]
    }
}

/// Three-point first derivative at the middle of `(a, b, c)` for spacings
/// `h1 = x_b − x_a`, `h2 = x_c − x_b`; second order on non-uniform grids.
fn central(a: f64, b: f64, c: f64, h1: f64, h2: f64) -> f64 {
    (-h2 / (h1 * (h1 + h2))) * a + ((h2 - h1) / (h1 * h2)) * b + (h1 / (h2 * (h1 + h2))) * c
}

fn residual_with<S, F>(field: &Field, speed: S, source: F, tol: f64) -> Result<ResidualReport>
where
    S: Fn(f64) -> Result<f64> + Sync,
    F: Fn(f64) -> Result<f64> + Sync,
{
    if field.valid_count() == 0 {
        return Err(Error::EmptyReport);
    }
    let grid = &field.grid;
    let (xs, ts) = (grid.xs(), grid.ts());
    let (nx, nt) = (grid.nx(), grid.nt());
    let residuals: Vec<Option<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            if i == 0 || j == 0 || i + 1 == nx || j + 1 == nt {
                return None;
            }
            let u = field.get(i, j)?;
            let u_x = central(
                field.get(i - 1, j)?,
                u,
                field.get(i + 1, j)?,
                xs[i] - xs[i - 1],
                xs[i + 1] - xs[i],
            );
            let u_t = central(
                field.get(i, j - 1)?,
                u,
                field.get(i, j + 1)?,
                ts[j] - ts[j - 1],
                ts[j + 1] - ts[j],
            );
            let r = u_t + speed(u).ok()? * u_x - source(u).ok()?;
            r.is_finite().then_some(r)
        })
        .collect();
    summarize(residuals, grid, grid.spacing(), tol)
}

fn summarize(
    residuals: Vec<Option<f64>>,
    grid: &Grid,
    spacing: (f64, f64),
    tol: f64,
) -> Result<ResidualReport> {
    let mut interior = 0;
    let (mut max_abs, mut sum, mut argmax) = (0.0_f64, 0.0, grid.point(0));
    for (k, r) in residuals.iter().enumerate() {
        if let Some(r) = r {
            interior += 1;
            sum += r.abs();
            if r.abs() > max_abs || interior == 1 {
                max_abs = r.abs();
                argmax = grid.point(k);
            }
        }
    }
    if interior == 0 {
        return Err(Error::EmptyReport);
    }
    Ok(ResidualReport {
        residuals,
        max_abs,
        mean_abs: sum / interior as f64,
        argmax,
        interior,
        tol,
        pass: max_abs <= tol,
        spacing,
        grid: grid.clone(),
    })
}

/// Residual at every node from a five-point stencil of half-width `h`
/// around it, with `eval` giving `u(x, t)` anywhere. Decouples the stencil
/// from the sampling grid, so a coarse grid can still be checked with
/// small truncation error.
fn local_with<E, S, F>(
    grid: &Grid,
    eval: E,
    h: f64,
    speed: S,
    source: F,
    tol: f64,
) -> Result<ResidualReport>
where
    E: Fn(f64, f64) -> Option<f64> + Sync,
    S: Fn(f64) -> Result<f64> + Sync,
    F: Fn(f64) -> Result<f64> + Sync,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("stencil half-width must be positive"));
    }
    let residuals = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (x, t) = grid.point(k);
            let u = eval(x, t)?;
            let u_x = (eval(x + h, t)? - eval(x - h, t)?) / (2.0 * h);
            let u_t = (eval(x, t + h)? - eval(x, t - h)?) / (2.0 * h);
            let r = u_t + speed(u).ok()? * u_x - source(u).ok()?;
            r.is_finite().then_some(r)
        })
        .collect();
    summarize(residuals, grid, (h, h), tol)
}

fn check_in_u(label: &str, e: &Expr) -> Result<()> {
    match e.free_names().into_iter().find(|n| n != "u") {
        Some(name) => Err(Error::invalid(format!(
            "{label} references unbound `{name}`"
        ))),
        None => Ok(()),
    }
}

/// `u_t + g(u)·u_x − f(u)` at interior nodes whose four neighbours are valid.
/// `f` and `g` must be expressions in `u` alone.
pub fn residual_field(f: &Expr, g: &Expr, field: &Field, tol: f64) -> Result<ResidualReport> {
    check_in_u("f", f)?;
    check_in_u("g", g)?;
    residual_with(
        field,
        |u| Ok(g.eval(&("u", u))?),
        |u| Ok(f.eval(&("u", u))?),
        tol,
    )
}

/// [`residual_field`] with a stencil of half-width `h` centred on each node.
pub fn residual_local<E>(
    f: &Expr,
    g: &Expr,
    grid: &Grid,
    eval: E,
    h: f64,
    tol: f64,
) -> Result<ResidualReport>
where
    E: Fn(f64, f64) -> Option<f64> + Sync,
{
    check_in_u("f", f)?;
    check_in_u("g", g)?;
    local_with(
        grid,
        |x, t| eval(x, t).filter(|u| u.is_finite()),
        h,
        |u| Ok(g.eval(&("u", u))?),
        |u| Ok(f.eval(&("u", u))?),
        tol,
    )
}

/// [`verify_canonical`] with a local stencil; `eval` gives `u(x, t)`.
pub fn verify_canonical_local<E, G>(
    map: &PhiMap,
    g_hat: G,
    grid: &Grid,
    eval: E,
    h: f64,
    tol: f64,
) -> Result<ResidualReport>
where
    E: Fn(f64, f64) -> Option<f64> + Sync,
    G: Fn(f64) -> Result<f64> + Sync,
{
    let v = |x, t| eval(x, t).and_then(|u| map.phi(u).ok());
    local_with(grid, v, h, g_hat, |_| Ok(1.0), tol)
}

/// Maps the u-field through `φ` and checks `v_t + ĝ(v)·v_x = 1`.
pub fn verify_canonical<G>(
    map: &PhiMap,
    g_hat: G,
    field: &Field,
    tol: f64,
) -> Result<ResidualReport>
where
    G: Fn(f64) -> Result<f64> + Sync,
{
    let v = field.map(|u| map.phi(u));
    residual_with(&v, g_hat, |_| Ok(1.0), tol)
}

/// Exact residual expression of a candidate `u(x, t)`, in `x` and `t`.
pub fn symbolic_residual(f: &Expr, g: &Expr, candidate: &Expr) -> Result<Expr> {
    let u_t = candidate.differentiate("t")?;
    let u_x = candidate.differentiate("x")?;
    let g_u = g.substitute("u", candidate);
    let f_u = f.substitute("u", candidate);
    let r = Expr::binary(
        crate::expr::BinOp::Sub,
        Expr::binary(
            crate::expr::BinOp::Add,
            u_t,
            Expr::binary(crate::expr::BinOp::Mul, g_u, u_x),
        ),
        f_u,
    );
    Ok(r.fold())
}

/// `log2` of the ratio of max residuals on two grids whose spacing differs by 2;
/// close to 2 for a second-order stencil on a smooth exact solution.
pub fn observed_order(coarse: &ResidualReport, fine: &ResidualReport) -> f64 {
    (coarse.max_abs / fine.max_abs).log2()
}
