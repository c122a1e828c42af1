//! Implicit solutions of `u_t + g(u)·u_x = f(u)`.
//!
//! * `f ≡ 0`: `u = h(x − t·g(u))`, with `h` the profile at `t = 0`.
//! * `f = 1`: `x = G(u) + h(t − u)` with `G' = g`.
//! * general `f` of constant sign: with `φ = ∫ du/f` and `ℓ = ∫ g∘φ⁻¹`,
//!   `x = ℓ(φ(u)) + h(t − φ(u))`. Substituting `v = φ(u)` turns the equation
//!   into the `f = 1` case with speed `g∘φ⁻¹`.
//!
//! Every solve returns the full [`BranchSet`] at the point; past the breaking
//! time the relation is multivalued and all branches are reported.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr};
use crate::quad::{EllMap, Ladder, PhiMap};
use crate::rootfind::{scan_sampled, BranchSet, DEFAULT_SCAN};
use crate::Interval;

pub const DEFAULT_HOMOGENEOUS_DOMAIN: Interval = Interval {
    lo: -100.0,
    hi: 100.0,
};
pub const DEFAULT_SOURCE_DOMAIN: Interval = Interval {
    lo: -10.0,
    hi: 10.0,
};
pub const DEFAULT_BREAKING_SAMPLES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub quad_tol: f64,
    /// Bound on `|F(u)|` for an accepted root.
    pub root_tol: f64,
    pub n_scan: usize,
    /// Residual verdict threshold.
    pub residual_tol: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            quad_tol: crate::quad::DEFAULT_TOL,
            root_tol: 1e-10,
            n_scan: DEFAULT_SCAN,
            residual_tol: 1e-5,
        }
    }
}

/// Additive constants of `φ` and `ℓ`: `φ(u_ref) = phi_ref`, `ℓ(v_ref) = ell_ref`.
///
/// Unset reference points default to the midpoint of the u-domain and to
/// `v_ref = 0` when `0` lies in the range of `φ`, else `φ(u_ref)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Normalization {
    pub u_ref: Option<f64>,
    pub phi_ref: f64,
    pub v_ref: Option<f64>,
    pub ell_ref: f64,
}

/// One instance of `u_t + g(u)·u_x = f(u)` with a chosen profile `h`.
///
/// `f` and `g` are expressions in `u`, `h` in `s`; any other name must be a
/// parameter bound in `params`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub f: Expr,
    pub g: Expr,
    pub h: Expr,
    pub params: Bindings,
    pub u_domain: Option<Interval>,
    pub s_domain: Option<Interval>,
    pub normalization: Normalization,
    pub settings: Settings,
}

/// `f`, `g`, `h` with parameters substituted.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundProblem {
    pub f: Expr,
    pub g: Expr,
    pub h: Expr,
}

impl Problem {
    pub fn new(f: Expr, g: Expr, h: Expr) -> Self {
        Self {
            f,
            g,
            h,
            params: Bindings::new(),
            u_domain: None,
            s_domain: None,
            normalization: Normalization::default(),
            settings: Settings::default(),
        }
    }

    pub fn parse(f: &str, g: &str, h: &str) -> Result<Self> {
        Ok(Self::new(
            crate::parse(f)?,
            crate::parse(g)?,
            crate::parse(h)?,
        ))
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.set(name, value);
        self
    }

    pub fn with_u_domain(mut self, lo: f64, hi: f64) -> Result<Self> {
        self.u_domain = Some(Interval::new(lo, hi)?);
        Ok(self)
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn bind(&self) -> Result<BoundProblem> {
        let bound = BoundProblem {
            f: self.f.bind(&self.params),
            g: self.g.bind(&self.params),
            h: self.h.bind(&self.params),
        };
        for (label, e, var) in [
            ("f", &bound.f, "u"),
            ("g", &bound.g, "u"),
            ("h", &bound.h, "s"),
        ] {
            if let Some(name) = e.free_names().into_iter().find(|n| n != var) {
                return Err(Error::invalid(format!(
                    "{label} references `{name}`, which is neither `{var}` nor a bound parameter"
                )));
            }
        }
        Ok(bound)
    }

    /// `f` folds to the literal `0`.
    pub fn is_homogeneous(&self) -> bool {
        self.f.bind(&self.params).is_zero()
    }

    /// Declared u-domain, else `[−100, 100]` for `f ≡ 0` and otherwise the
    /// longest constant-sign run of `f` sampled on `[−10, 10]`.
    pub fn u_domain_or_default(&self) -> Result<Interval> {
        if let Some(d) = self.u_domain {
            return Ok(d);
        }
        if self.is_homogeneous() {
            return Ok(DEFAULT_HOMOGENEOUS_DOMAIN);
        }
        let f = self.bind()?.f;
        let nodes = DEFAULT_SOURCE_DOMAIN.nodes(crate::quad::SIGN_SAMPLES);
        let signs: Vec<f64> = nodes
            .iter()
            .map(|&u| match f.eval(&("u", u)) {
                Ok(v) if v != 0.0 && v.is_finite() => v.signum(),
                _ => 0.0,
            })
            .collect();
        let mut best: Option<(usize, usize)> = None;
        let mut start = 0;
        for i in 1..=signs.len() {
            if i == signs.len() || signs[i] != signs[start] {
                if signs[start] != 0.0 && best.is_none_or(|(a, b)| i - 1 - start > b - a) {
                    best = Some((start, i - 1));
                }
                start = i;
            }
        }
        match best {
            Some((a, b)) if b > a => Interval::new(nodes[a], nodes[b]),
            _ => Err(Error::invalid(
                "f has no constant-sign region on [-10, 10]; declare u_domain",
            )),
        }
    }
}

/// Solver for one point `(x, t)`.
pub trait PointSolver: Sync {
    fn solve(&self, x: f64, t: f64) -> BranchSet;

    /// All points of `xs × ts`, `t`-major (index `j·xs.len() + i`).
    fn sweep(&self, xs: &[f64], ts: &[f64]) -> Vec<BranchSet> {
        let points: Vec<(f64, f64)> = ts
            .iter()
            .flat_map(|&t| xs.iter().map(move |&x| (x, t)))
            .collect();
        points.par_iter().map(|&(x, t)| self.solve(x, t)).collect()
    }
}

fn scan_at<F>(
    point: (f64, f64),
    residual: F,
    domain: Interval,
    nodes: &[f64],
    sampled: &[Result<f64>],
    tol: f64,
) -> BranchSet
where
    F: Fn(f64) -> Result<f64>,
{
    let mut set = scan_sampled(&residual, domain, nodes, sampled, tol);
    set.point = Some(point);
    set
}

/// Roots of `F(u) = u − h(x − t·g(u))`.
#[derive(Debug, Clone)]
pub struct HomogeneousSolver {
    g: Expr,
    h: Expr,
    domain: Interval,
    nodes: Vec<f64>,
    g_nodes: Vec<Result<f64>>,
    tol: f64,
}

impl HomogeneousSolver {
    pub fn new(p: &Problem) -> Result<Self> {
        if !p.is_homogeneous() {
            return Err(Error::invalid("homogeneous solve requires f = 0"));
        }
        let bound = p.bind()?;
        let domain = p.u_domain_or_default()?;
        let nodes = domain.nodes(p.settings.n_scan.max(2));
        let g_nodes = nodes
            .iter()
            .map(|&u| Ok(bound.g.eval(&("u", u))?))
            .collect();
        Ok(Self {
            g: bound.g,
            h: bound.h,
            domain,
            nodes,
            g_nodes,
            tol: p.settings.root_tol,
        })
    }

    pub fn residual(&self, x: f64, t: f64, u: f64) -> Result<f64> {
        let speed = self.g.eval(&("u", u))?;
        Ok(u - self.h.eval(&("s", x - t * speed))?)
    }
}

impl PointSolver for HomogeneousSolver {
    fn solve(&self, x: f64, t: f64) -> BranchSet {
        let sampled: Vec<Result<f64>> = self
            .nodes
            .iter()
            .zip(&self.g_nodes)
            .map(|(&u, g)| {
                let g = g.as_ref().map_err(Clone::clone)?;
                Ok(u - self.h.eval(&("s", x - t * g))?)
            })
            .collect();
        scan_at(
            (x, t),
            |u| self.residual(x, t, u),
            self.domain,
            &self.nodes,
            &sampled,
            self.tol,
        )
    }
}

pub fn solve_homogeneous(p: &Problem, x: f64, t: f64) -> Result<BranchSet> {
    Ok(HomogeneousSolver::new(p)?.solve(x, t))
}

/// `φ` for the problem's `f`, and the transformed speed `g∘φ⁻¹`.
#[derive(Debug, Clone)]
pub struct Canonical {
    pub phi: PhiMap,
    g: Expr,
}

impl Canonical {
    /// `(g∘φ⁻¹)(v)`.
    pub fn speed(&self, v: f64) -> Result<f64> {
        Ok(self.g.eval(&("u", self.phi.inverse(v)?))?)
    }

    /// Range of `φ`, the domain of the transformed problem.
    pub fn v_domain(&self) -> Interval {
        self.phi.range()
    }

    pub fn g(&self) -> &Expr {
        &self.g
    }

    /// Solver for `v_t + (g∘φ⁻¹)(v)·v_x = 1` with profile `h`, and
    /// `∫ g∘φ⁻¹` anchored at `anchor = (v_ref, ℓ_ref)`.
    pub fn solver(
        &self,
        h: &Expr,
        anchor: (f64, f64),
        settings: &Settings,
    ) -> Result<CanonicalSolver<impl Fn(f64) -> Result<f64> + Sync + '_>> {
        CanonicalSolver::new(move |v| self.speed(v), h, self.v_domain(), anchor, settings)
    }
}

/// The change of variables `v = φ(u)` mapping the problem to unit source.
pub fn canonicalize(p: &Problem) -> Result<Canonical> {
    let bound = p.bind()?;
    let domain = p.u_domain_or_default()?;
    let norm = p.normalization;
    let u_ref = norm.u_ref.unwrap_or(domain.midpoint());
    let phi = PhiMap::with_reference(&bound.f, u_ref, norm.phi_ref, domain, p.settings.quad_tol)?;
    Ok(Canonical { phi, g: bound.g })
}

/// Roots of `F(u) = x − G(u) − h(t − u)` with `G' = speed`.
pub struct CanonicalSolver<S> {
    speed: S,
    h: Expr,
    domain: Interval,
    ladder: Ladder,
    anchor: (f64, f64),
    raw_anchor: f64,
    nodes: Vec<f64>,
    big_g_nodes: Vec<Result<f64>>,
    tol: f64,
}

impl<S> CanonicalSolver<S>
where
    S: Fn(f64) -> Result<f64> + Sync,
{
    /// `G(anchor.0) = anchor.1`.
    pub fn new(
        speed: S,
        h: &Expr,
        domain: Interval,
        anchor: (f64, f64),
        settings: &Settings,
    ) -> Result<Self> {
        if let Some(name) = h.free_names().into_iter().find(|n| n != "s") {
            return Err(Error::invalid(format!("h references unbound `{name}`")));
        }
        let n = settings.n_scan.max(2);
        let ladder = Ladder::build(&speed, domain, n, settings.quad_tol)?;
        let raw_anchor = ladder.at(&speed, anchor.0)?;
        let nodes = ladder.nodes().to_vec();
        let big_g_nodes = ladder
            .node_values()
            .iter()
            .map(|raw| Ok(anchor.1 + (raw - raw_anchor)))
            .collect();
        Ok(Self {
            speed,
            h: h.clone(),
            domain,
            ladder,
            anchor,
            raw_anchor,
            nodes,
            big_g_nodes,
            tol: settings.root_tol,
        })
    }

    /// `G(u) = ∫ speed`, anchored.
    pub fn antiderivative(&self, u: f64) -> Result<f64> {
        if u == self.anchor.0 {
            return Ok(self.anchor.1);
        }
        Ok(self.anchor.1 + (self.ladder.at(&self.speed, u)? - self.raw_anchor))
    }

    pub fn residual(&self, x: f64, t: f64, u: f64) -> Result<f64> {
        Ok(x - self.antiderivative(u)? - self.h.eval(&("s", t - u))?)
    }
}

impl<S> PointSolver for CanonicalSolver<S>
where
    S: Fn(f64) -> Result<f64> + Sync,
{
    fn solve(&self, x: f64, t: f64) -> BranchSet {
        let sampled: Vec<Result<f64>> = self
            .nodes
            .iter()
            .zip(&self.big_g_nodes)
            .map(|(&u, big_g)| {
                let big_g = big_g.as_ref().map_err(Clone::clone)?;
                Ok(x - big_g - self.h.eval(&("s", t - u))?)
            })
            .collect();
        scan_at(
            (x, t),
            |u| self.residual(x, t, u),
            self.domain,
            &self.nodes,
            &sampled,
            self.tol,
        )
    }
}

/// Unit-source solve with `G(u) = ∫_{u_ref}^{u} g`, `u_ref` the domain midpoint.
pub fn solve_canonical(
    g: &Expr,
    h: &Expr,
    x: f64,
    t: f64,
    u_domain: Interval,
) -> Result<BranchSet> {
    let speed = |u: f64| Ok(g.eval(&("u", u))?);
    let solver = CanonicalSolver::new(
        speed,
        h,
        u_domain,
        (u_domain.midpoint(), 0.0),
        &Settings::default(),
    )?;
    Ok(solver.solve(x, t))
}

/// Roots of `F(u) = x − ℓ(φ(u)) − h(t − φ(u))`.
#[derive(Debug, Clone)]
pub struct NonhomogeneousSolver {
    ell: EllMap,
    h: Expr,
    domain: Interval,
    nodes: Vec<f64>,
    phi_nodes: Vec<Result<f64>>,
    ell_nodes: Vec<Result<f64>>,
    tol: f64,
}

impl NonhomogeneousSolver {
    pub fn new(p: &Problem) -> Result<Self> {
        let canonical = canonicalize(p)?;
        let phi = canonical.phi;
        let norm = p.normalization;
        let v_ref = norm.v_ref.unwrap_or(if phi.range().contains(0.0) {
            0.0
        } else {
            phi.phi_ref()
        });
        let ell = EllMap::new(&canonical.g, &phi, v_ref, norm.ell_ref, p.settings.quad_tol)?;
        let domain = phi.domain();
        let nodes = domain.nodes(p.settings.n_scan.max(2));
        let phi_nodes = nodes.iter().map(|&u| phi.phi(u)).collect();
        let ell_nodes = nodes.iter().map(|&u| ell.ell_of_phi(u)).collect();
        Ok(Self {
            ell,
            h: p.bind()?.h,
            domain,
            nodes,
            phi_nodes,
            ell_nodes,
            tol: p.settings.root_tol,
        })
    }

    pub fn phi(&self) -> &PhiMap {
        self.ell.phi()
    }

    pub fn ell(&self) -> &EllMap {
        &self.ell
    }

    pub fn residual(&self, x: f64, t: f64, u: f64) -> Result<f64> {
        let v = self.phi().phi(u)?;
        Ok(x - self.ell.ell_of_phi(u)? - self.h.eval(&("s", t - v))?)
    }
}

impl PointSolver for NonhomogeneousSolver {
    fn solve(&self, x: f64, t: f64) -> BranchSet {
        let sampled: Vec<Result<f64>> = self
            .phi_nodes
            .iter()
            .zip(&self.ell_nodes)
            .map(|(v, l)| {
                let (v, l) = (
                    v.as_ref().map_err(Clone::clone)?,
                    l.as_ref().map_err(Clone::clone)?,
                );
                Ok(x - l - self.h.eval(&("s", t - v))?)
            })
            .collect();
        scan_at(
            (x, t),
            |u| self.residual(x, t, u),
            self.domain,
            &self.nodes,
            &sampled,
            self.tol,
        )
    }
}

pub fn solve_nonhomogeneous(p: &Problem, x: f64, t: f64) -> Result<BranchSet> {
    Ok(NonhomogeneousSolver::new(p)?.solve(x, t))
}

/// Homogeneous or source-driven solver, picked from `f`.
#[derive(Debug, Clone)]
pub enum Solver {
    Homogeneous(HomogeneousSolver),
    Nonhomogeneous(Box<NonhomogeneousSolver>),
}

impl Solver {
    pub fn new(p: &Problem) -> Result<Self> {
        if p.is_homogeneous() {
            Ok(Solver::Homogeneous(HomogeneousSolver::new(p)?))
        } else {
            Ok(Solver::Nonhomogeneous(Box::new(NonhomogeneousSolver::new(
                p,
            )?)))
        }
    }
}

impl PointSolver for Solver {
    fn solve(&self, x: f64, t: f64) -> BranchSet {
        match self {
            Solver::Homogeneous(s) => s.solve(x, t),
            Solver::Nonhomogeneous(s) => s.solve(x, t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharPoint {
    pub t: f64,
    pub x: f64,
    pub u: f64,
}

/// Samples of a characteristic `dx/dt = g(u)`, `du/dt = f(u)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharPath {
    pub samples: Vec<CharPoint>,
    pub dt: f64,
    pub method: &'static str,
    /// Set when an evaluation failed mid-path; `samples` ends before it.
    pub truncated: Option<String>,
}

impl CharPath {
    pub fn last(&self) -> CharPoint {
        *self.samples.last().expect("path has its initial point")
    }
}

/// Classic RK4 from `(0, x0, u0)` to `t_end`; the last step is shortened to
/// land on `t_end`.
pub fn characteristic_trace(
    p: &Problem,
    x0: f64,
    u0: f64,
    t_end: f64,
    dt: f64,
) -> Result<CharPath> {
    if !(dt > 0.0 && t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::invalid(
            "characteristic trace needs dt > 0 and t_end >= 0",
        ));
    }
    let bound = p.bind()?;
    let rhs =
        |u: f64| -> Result<(f64, f64)> { Ok((bound.g.eval(&("u", u))?, bound.f.eval(&("u", u))?)) };
    let mut samples = vec![CharPoint {
        t: 0.0,
        x: x0,
        u: u0,
    }];
    let steps = (t_end / dt).ceil() as usize;
    let (mut x, mut u) = (x0, u0);
    let mut truncated = None;
    for k in 0..steps {
        let t = k as f64 * dt;
        let h = if k + 1 == steps { t_end - t } else { dt };
        let step = (|| -> Result<(f64, f64)> {
            let (kx1, ku1) = rhs(u)?;
            let (kx2, ku2) = rhs(u + 0.5 * h * ku1)?;
            let (kx3, ku3) = rhs(u + 0.5 * h * ku2)?;
            let (kx4, ku4) = rhs(u + h * ku3)?;
            Ok((
                x + h / 6.0 * (kx1 + 2.0 * kx2 + 2.0 * kx3 + kx4),
                u + h / 6.0 * (ku1 + 2.0 * ku2 + 2.0 * ku3 + ku4),
            ))
        })();
        match step {
            Ok((nx, nu)) if nx.is_finite() && nu.is_finite() => {
                x = nx;
                u = nu;
                let t_next = if k + 1 == steps { t_end } else { t + h };
                samples.push(CharPoint { t: t_next, x, u });
            }
            Ok(_) => {
                truncated = Some(format!("non-finite state after t = {t}"));
                break;
            }
            Err(e) => {
                truncated = Some(format!("at t = {t}: {e}"));
                break;
            }
        }
    }
    Ok(CharPath {
        samples,
        dt,
        method: "rk4",
        truncated,
    })
}

/// First gradient blow-up time for `f ≡ 0` with data `u(x, 0) = h(x)`:
/// `t* = −1/m`, `m = min d/ds g(h(s))` over `n_samples` points of
/// `s_interval`, or `None` when `m ≥ 0`. Sampling can miss the true minimum,
/// so the estimate is never earlier than the true breaking time.
pub fn breaking_time(p: &Problem, s_interval: Interval, n_samples: usize) -> Result<Option<f64>> {
    if !p.is_homogeneous() {
        return Err(Error::invalid("breaking time is defined for f = 0"));
    }
    let bound = p.bind()?;
    let slope = bound.g.substitute("u", &bound.h).differentiate("s")?;
    let mut min: Option<f64> = None;
    for s in s_interval.nodes(n_samples.max(2) - 1) {
        if let Ok(v) = slope.eval(&("s", s)) {
            min = Some(min.map_or(v, |m| m.min(v)));
        }
    }
    match min {
        None => Err(Error::invalid(format!(
            "d/ds g(h(s)) not evaluable anywhere on {s_interval}"
        ))),
        Some(m) if m < 0.0 => Ok(Some(-1.0 / m)),
        Some(_) => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{lambert_w, WBranch};
    use std::f64::consts::E;

    fn burgers(h: &str) -> Problem {
        Problem::parse("0", "u", h).unwrap()
    }

    #[test]
    fn rational_solution_point() {
        let p = burgers("(a*s + b)/c")
            .with_param("a", 1.0)
            .with_param("b", 0.0)
            .with_param("c", 1.0);
        let set = solve_homogeneous(&p, 2.0, 1.0).unwrap();
        assert_eq!(set.len(), 1);
        assert!((set.roots[0].u - 1.0).abs() < 1e-12);
        assert_eq!(set.point, Some((2.0, 1.0)));
    }

    #[test]
    fn initial_time_returns_profile() {
        for g in ["u", "u^2", "sin(u)"] {
            let p = Problem::parse("0", g, "s").unwrap();
            let set = solve_homogeneous(&p, 3.0, 0.0).unwrap();
            assert_eq!(set.values(), vec![3.0]);
        }
    }

    #[test]
    fn exponential_profile_matches_lambert() {
        let p = burgers("exp(a - s)").with_param("a", 0.0);
        let set = solve_homogeneous(&p, 1.0, 0.2).unwrap();
        let expected = -lambert_w(-0.2 * (-1f64).exp(), WBranch::Principal).unwrap() / 0.2;
        // Independent value (series-free Halley in a reference library).
        assert!((expected - 0.398_390_802_557_382_6).abs() < 1e-12);
        // The lower branch gives a second, large root of the same relation.
        let lower = -lambert_w(-0.2 * (-1f64).exp(), WBranch::Lower).unwrap() / 0.2;
        let v = set.values();
        assert_eq!(v.len(), 2);
        assert!((v[0] - expected).abs() < 1e-10);
        assert!((v[1] - lower).abs() < 1e-9);
    }

    #[test]
    fn homogeneous_requires_zero_source() {
        let p = Problem::parse("1", "u", "s").unwrap();
        assert!(solve_homogeneous(&p, 0.0, 0.0).is_err());
        assert!(breaking_time(&p, Interval::new(-1.0, 1.0).unwrap(), 10).is_err());
    }

    #[test]
    fn unbound_parameter_is_reported() {
        let p = burgers("k*s");
        let err = solve_homogeneous(&p, 0.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("`k`"), "{err}");
    }

    #[test]
    fn canonical_transport() {
        let d = Interval::new(-20.0, 20.0).unwrap();
        let zero = crate::parse("0").unwrap();
        let ident = crate::parse("s").unwrap();
        // x = t − u, so u = t − x.
        let set = solve_canonical(&zero, &ident, 2.5, 1.0, d).unwrap();
        assert_eq!(set.len(), 1);
        assert!((set.roots[0].u + 1.5).abs() < 1e-10);

        let one = |_: f64| Ok(1.0);
        let flat = crate::parse("0").unwrap();
        let solver = CanonicalSolver::new(one, &flat, d, (0.0, 0.0), &Settings::default()).unwrap();
        let set = solver.solve(3.25, 7.0);
        assert_eq!(set.len(), 1);
        assert!((set.roots[0].u - 3.25).abs() < 1e-10);
    }

    #[test]
    fn canonicalize_unit_source_and_exponential() {
        let p = Problem::parse("1", "u^2", "s")
            .unwrap()
            .with_u_domain(-3.0, 3.0)
            .unwrap();
        let c = canonicalize(&p).unwrap();
        assert!((c.phi.phi(1.0).unwrap() - 1.0).abs() < 1e-13);
        assert!((c.speed(0.5).unwrap() - 0.25).abs() < 1e-10);

        let p = Problem::parse("exp(u)", "u", "s")
            .unwrap()
            .with_u_domain(-3.0, 3.0)
            .unwrap()
            .with_normalization(Normalization {
                u_ref: Some(0.0),
                phi_ref: -1.0,
                ..Default::default()
            });
        let c = canonicalize(&p).unwrap();
        for v in [-15.0_f64, -2.0, -0.5, -0.06] {
            assert!((c.speed(v).unwrap() + (-v).ln()).abs() < 1e-9, "v = {v}");
        }
    }

    #[test]
    fn canonicalize_square_source() {
        let p = Problem::parse("u^2", "3*u^2", "s")
            .unwrap()
            .with_u_domain(0.1, 10.0)
            .unwrap()
            .with_normalization(Normalization {
                u_ref: Some(1.0),
                phi_ref: -1.0,
                ..Default::default()
            });
        let c = canonicalize(&p).unwrap();
        for u in [0.1, 0.5, 2.0, 9.0] {
            assert!((c.phi.phi(u).unwrap() + 1.0 / u).abs() < 1e-10);
        }
    }

    fn example_3_4() -> Problem {
        Problem::parse("exp(u)", "u", "s")
            .unwrap()
            .with_u_domain(-5.0, 5.0)
            .unwrap()
            .with_normalization(Normalization {
                u_ref: Some(0.0),
                phi_ref: -1.0,
                v_ref: Some(-1.0),
                ell_ref: -1.0,
            })
    }

    #[test]
    fn exponential_source_points() {
        let solver = NonhomogeneousSolver::new(&example_3_4()).unwrap();
        let set = solver.solve(1.0, 1.0);
        assert_eq!(set.len(), 1);
        assert!(set.roots[0].u.abs() < 1e-10);
        let set = solver.solve(1.0 + E, 1.0);
        assert_eq!(set.len(), 1);
        assert!((set.roots[0].u + 1.0).abs() < 1e-10);
    }

    #[test]
    fn cubic_flux_square_source_two_branches() {
        let p = Problem::parse("u^n", "m*u^(m-1)", "3*s")
            .unwrap()
            .with_param("m", 3.0)
            .with_param("n", 2.0)
            .with_u_domain(0.05, 20.0)
            .unwrap()
            .with_normalization(Normalization {
                u_ref: Some(1.0),
                phi_ref: -1.0,
                v_ref: Some(-1.0),
                ell_ref: 3.0,
            });
        let set = solve_nonhomogeneous(&p, 13.0, 1.0).unwrap();
        let v = set.values();
        assert_eq!(v.len(), 2);
        assert!((v[0] - 1.0 / 3.0).abs() < 1e-10);
        assert!((v[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn default_source_domain_avoids_zero() {
        let p = Problem::parse("u^2", "u", "s").unwrap();
        let d = p.u_domain_or_default().unwrap();
        assert!(d.lo > 0.0 || d.hi < 0.0, "{d}");
        assert!(d.width() > 9.9);
        let p = Problem::parse("exp(u)", "u", "s").unwrap();
        assert_eq!(p.u_domain_or_default().unwrap(), DEFAULT_SOURCE_DOMAIN);
        let p = Problem::parse("0", "u", "s").unwrap();
        assert_eq!(p.u_domain_or_default().unwrap(), DEFAULT_HOMOGENEOUS_DOMAIN);
    }

    #[test]
    fn straight_characteristic() {
        let p = burgers("s");
        let path = characteristic_trace(&p, 0.0, 2.0, 1.0, 0.01).unwrap();
        let end = path.last();
        assert!((end.t - 1.0).abs() < 1e-15);
        assert!((end.x - 2.0).abs() < 1e-12 && end.u == 2.0);
        assert!(path.samples.iter().all(|s| s.u == 2.0));
        assert!(path.truncated.is_none());
    }

    #[test]
    fn exponential_growth_characteristic() {
        let p = Problem::parse("u", "0", "s").unwrap();
        let path = characteristic_trace(&p, 0.0, 1.0, 1.0, 1e-3).unwrap();
        assert!((path.last().u - E).abs() < 1e-8);
    }

    #[test]
    fn exponential_source_characteristic() {
        // du/e^u = dt from u0 = 0 gives u = −ln(1 − t).
        let p = Problem::parse("exp(u)", "u", "s").unwrap();
        let path = characteristic_trace(&p, 0.0, 0.0, 0.9, 1e-4).unwrap();
        for s in &path.samples {
            assert!((s.u + (1.0 - s.t).ln()).abs() < 1e-8, "t = {}", s.t);
        }
    }

    #[test]
    fn characteristic_truncates_on_domain_error() {
        let p = Problem::parse("0 - 1", "ln(u)", "s").unwrap();
        let path = characteristic_trace(&p, 0.0, 0.5, 2.0, 0.01).unwrap();
        assert!(path.truncated.is_some());
        assert!(path.last().t < 0.51);
    }

    #[test]
    fn breaking_times() {
        let s = Interval::new(-5.0, 5.0).unwrap();
        assert_eq!(breaking_time(&burgers("s"), s, 4096).unwrap(), None);
        let t = breaking_time(&burgers("-s"), s, 4096).unwrap().unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        let t = breaking_time(&burgers("-tanh(s)"), s, 4096)
            .unwrap()
            .unwrap();
        assert!((t - 1.0).abs() < 1e-5);
        assert!(breaking_time(&burgers("abs(s)"), s, 16).is_err());
    }

    #[test]
    fn sweep_order_is_t_major() {
        let p = burgers("s");
        let solver = Solver::new(&p).unwrap();
        let sets = solver.sweep(&[0.0, 1.0], &[0.0, 1.0]);
        let points: Vec<_> = sets.iter().map(|s| s.point.unwrap()).collect();
        assert_eq!(points, vec![(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
    }
}
