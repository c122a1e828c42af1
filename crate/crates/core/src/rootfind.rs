//! Scalar root finding.
//!
//! [`find_root`] is a safeguarded Newton/secant iteration on a sign-change
//! bracket: an open step is taken only when it lands strictly inside the
//! current bracket and the bracket keeps halving at least every other step,
//! otherwise the iteration bisects. [`find_all_roots`] scans an interval for
//! sign changes and polishes each one, so it reports every branch of a
//! multivalued implicit relation that is resolved at the scan spacing.

use crate::error::{Error, Result};
use crate::Interval;

pub const DEFAULT_SCAN: usize = 1024;
const MAX_ITER: usize = 200;
const GOLDEN_ITER: usize = 80;

/// One polished root (or tangency candidate) with its residual `|F(u)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub u: f64,
    pub residual: f64,
    /// `residual ≤ tol` at the time the root was polished.
    pub converged: bool,
}

/// Every root of `F(u) = 0` found on a scan interval.
///
/// `roots` is strictly increasing and every entry has `residual ≤ tol`. An
/// empty set means no sign change was seen at the scan resolution, not that no
/// root exists.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSet {
    /// `(x, t)` when the set belongs to a solution point.
    pub point: Option<(f64, f64)>,
    pub roots: Vec<Root>,
    /// Local minima of `|F|` below `√tol` without a sign change: tangency
    /// (double-root) candidates, reported separately and never merged.
    pub marginal: Vec<Root>,
    /// Sign changes whose polished residual stayed above `tol` (jumps or poles).
    pub discarded: Vec<Root>,
    /// Subintervals dropped because `F` could not be evaluated there.
    pub skipped: Vec<Interval>,
    pub interval: Interval,
    pub n_scan: usize,
    pub tol: f64,
}

impl BranchSet {
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.u).collect()
    }

    /// No sign change was discarded as non-convergent.
    pub fn converged(&self) -> bool {
        self.discarded.is_empty()
    }

    /// Exactly one root and nothing discarded.
    pub fn single(&self) -> Option<f64> {
        match self.roots.as_slice() {
            [r] if self.converged() => Some(r.u),
            _ => None,
        }
    }

    /// Root closest to `u`.
    pub fn nearest(&self, u: f64) -> Option<f64> {
        self.roots
            .iter()
            .map(|r| r.u)
            .min_by(|a, b| (a - u).abs().total_cmp(&(b - u).abs()))
    }
}

/// Root of `F` on `bracket` where `F(a)·F(b) ≤ 0`.
///
/// Returns `u` with `|F(u)| ≤ tol` or with the bracket narrowed to
/// `tol·max(1, |u|)`.
pub fn find_root<F>(mut f: F, bracket: Interval, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (a, b) = (bracket.lo, bracket.hi);
    let fa = f(a)?;
    let fb = f(b)?;
    solve_bracketed(
        &mut f,
        None::<fn(f64) -> Result<f64>>,
        (a, fa),
        (b, fb),
        tol,
        tol,
    )
}

/// As [`find_root`], with Newton steps from the supplied derivative.
pub fn find_root_newton<F, D>(mut f: F, df: D, bracket: Interval, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
    D: FnMut(f64) -> Result<f64>,
{
    let (a, b) = (bracket.lo, bracket.hi);
    let fa = f(a)?;
    let fb = f(b)?;
    solve_bracketed(&mut f, Some(df), (a, fa), (b, fb), tol, tol)
}

/// Core iteration. `ftol` bounds `|F|`; `xtol` bounds the bracket width
/// relative to `max(1, |u|)`.
pub(crate) fn solve_bracketed<F, D>(
    f: &mut F,
    mut df: Option<D>,
    (mut a, mut fa): (f64, f64),
    (mut b, mut fb): (f64, f64),
    ftol: f64,
    xtol: f64,
) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
    D: FnMut(f64) -> Result<f64>,
{
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::InvalidBracket { a, b, fa, fb });
    }
    let (mut x, mut fx, mut x_prev, mut f_prev) = if fa.abs() < fb.abs() {
        (a, fa, b, fb)
    } else {
        (b, fb, a, fa)
    };
    if fx.abs() <= ftol {
        return Ok(x);
    }
    let mut widths = [(b - a).abs(); 2];
    let mut force_bisect = false;

    for _ in 0..MAX_ITER {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let open_step = match df.as_mut() {
            Some(d) => {
                let slope = d(x)?;
                x - fx / slope
            }
            None => x - fx * (x - x_prev) / (fx - f_prev),
        };
        let next = if !force_bisect && open_step.is_finite() && open_step > lo && open_step < hi {
            open_step
        } else {
            mid
        };
        let f_next = f(next)?;
        if f_next == 0.0 {
            return Ok(next);
        }
        if f_next.signum() == fa.signum() {
            a = next;
            fa = f_next;
        } else {
            b = next;
            fb = f_next;
        }
        x_prev = x;
        f_prev = fx;
        x = next;
        fx = f_next;
        if fx.abs() <= ftol {
            return Ok(x);
        }
        let width = (b - a).abs();
        if width <= xtol * x.abs().max(1.0) {
            break;
        }
        force_bisect = width > 0.5 * widths[0];
        widths = [widths[1], width];
    }
    // Best of the bracket ends and the last iterate.
    let best = [(x, fx), (a, fa), (b, fb)]
        .into_iter()
        .min_by(|p, q| p.1.abs().total_cmp(&q.1.abs()))
        .map(|(u, _)| u)
        .unwrap_or(x);
    Ok(best)
}

/// Scan `interval` in `n_scan` equal steps and polish every sign change.
pub fn find_all_roots<F>(f: F, interval: Interval, n_scan: usize, tol: f64) -> BranchSet
where
    F: Fn(f64) -> Result<f64>,
{
    let n_scan = n_scan.max(2);
    let nodes = interval.nodes(n_scan);
    let values: Vec<Result<f64>> = nodes.iter().map(|&u| f(u)).collect();
    scan_sampled(&f, interval, &nodes, &values, tol)
}

/// Scan with the samples `values[i] = F(nodes[i])` already computed.
pub(crate) fn scan_sampled<F>(
    f: &F,
    interval: Interval,
    nodes: &[f64],
    values: &[Result<f64>],
    tol: f64,
) -> BranchSet
where
    F: Fn(f64) -> Result<f64>,
{
    debug_assert_eq!(nodes.len(), values.len());
    let mut set = BranchSet {
        point: None,
        roots: Vec::new(),
        marginal: Vec::new(),
        discarded: Vec::new(),
        skipped: Vec::new(),
        interval,
        n_scan: nodes.len() - 1,
        tol,
    };
    let sample = |i: usize| values[i].as_ref().ok().copied().filter(|v| v.is_finite());
    let mut candidates = Vec::new();

    for i in 0..nodes.len() {
        if sample(i) == Some(0.0) {
            candidates.push(nodes[i]);
        }
        if i + 1 == nodes.len() {
            break;
        }
        let (Some(fa), Some(fb)) = (sample(i), sample(i + 1)) else {
            push_skipped(&mut set.skipped, nodes[i], nodes[i + 1]);
            continue;
        };
        if fa == 0.0 || fb == 0.0 || fa.signum() == fb.signum() {
            continue;
        }
        let mut g = |u: f64| f(u);
        let polished = solve_bracketed(
            &mut g,
            None::<fn(f64) -> Result<f64>>,
            (nodes[i], fa),
            (nodes[i + 1], fb),
            tol * 1e-3,
            4.0 * f64::EPSILON,
        );
        match polished {
            Ok(u) => candidates.push(u),
            Err(_) => push_skipped(&mut set.skipped, nodes[i], nodes[i + 1]),
        }
    }

    for u in candidates {
        let residual = f(u).map(f64::abs).unwrap_or(f64::INFINITY);
        let root = Root {
            u,
            residual,
            converged: residual <= tol,
        };
        if root.converged {
            set.roots.push(root);
        } else {
            set.discarded.push(root);
        }
    }
    set.roots.sort_by(|p, q| p.u.total_cmp(&q.u));
    set.roots = dedup(set.roots, 10.0 * tol);

    // Tangency candidates: same-sign local minima of |F|.
    for i in 1..nodes.len().saturating_sub(1) {
        let (Some(fl), Some(fm), Some(fr)) = (sample(i - 1), sample(i), sample(i + 1)) else {
            continue;
        };
        let same_sign = fl.signum() == fm.signum() && fm.signum() == fr.signum() && fm != 0.0;
        if !same_sign || fm.abs() > fl.abs() || fm.abs() > fr.abs() {
            continue;
        }
        if let Some(root) = golden_min_abs(f, nodes[i - 1], nodes[i + 1], tol) {
            let near_root = set.roots.iter().any(|r| (r.u - root.u).abs() <= 10.0 * tol);
            if root.residual <= tol.sqrt() && !near_root {
                set.marginal.push(root);
            }
        }
    }
    set
}

fn push_skipped(skipped: &mut Vec<Interval>, lo: f64, hi: f64) {
    match skipped.last_mut() {
        Some(last) if last.hi == lo => last.hi = hi,
        _ => skipped.push(Interval { lo, hi }),
    }
}

fn dedup(sorted: Vec<Root>, min_gap: f64) -> Vec<Root> {
    let mut out: Vec<Root> = Vec::with_capacity(sorted.len());
    for root in sorted {
        match out.last_mut() {
            Some(last) if root.u - last.u <= min_gap => {
                if root.residual < last.residual {
                    *last = root;
                }
            }
            _ => out.push(root),
        }
    }
    out
}

fn golden_min_abs<F>(f: &F, mut a: f64, mut b: f64, tol: f64) -> Option<Root>
where
    F: Fn(f64) -> Result<f64>,
{
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let eval = |u: f64| f(u).ok().map(f64::abs);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    for _ in 0..GOLDEN_ITER {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = eval(d)?;
        }
    }
    let (u, residual) = if fc < fd { (c, fc) } else { (d, fd) };
    Some(Root {
        u,
        residual,
        converged: residual <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn linear_root() {
        let u = find_root(|u| Ok(u - 1.0), iv(0.0, 2.0), 1e-12).unwrap();
        assert!((u - 1.0).abs() < 1e-12);
    }

    #[test]
    fn homogeneous_affine_profile() {
        // u = x − t·u at x = t = 1, i.e. (a·x + b)/(a·t + c) with a = c = 1, b = 0.
        let (x, t) = (1.0, 1.0);
        let u = find_root(|u| Ok(u - (x - t * u)), iv(0.0, 1.0), 1e-12).unwrap();
        assert!((u - 0.5).abs() < 1e-12);
    }

    #[test]
    fn quadratic_lower_root() {
        let u = find_root(|u| Ok(3.0 * u * u - 10.0 * u + 3.0), iv(0.0, 1.0), 1e-13).unwrap();
        assert!((u - 1.0 / 3.0).abs() < 1e-12, "{u}");
    }

    #[test]
    fn newton_variant() {
        let u =
            find_root_newton(|u| Ok(u * u - 2.0), |u| Ok(2.0 * u), iv(0.0, 2.0), 1e-14).unwrap();
        assert!((u - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn invalid_bracket() {
        let err = find_root(|u| Ok(u * u + 1.0), iv(-1.0, 1.0), 1e-12).unwrap_err();
        assert!(matches!(err, Error::InvalidBracket { .. }));
    }

    #[test]
    fn step_function_collapses_bracket() {
        // Sign change without a root: returns at bracket resolution.
        let u = find_root(
            |u| Ok(if u < 0.3 { -1.0 } else { 1.0 }),
            iv(0.0, 1.0),
            1e-12,
        )
        .unwrap();
        assert!((u - 0.3).abs() < 1e-11);
    }

    #[test]
    fn no_real_roots() {
        let set = find_all_roots(|u| Ok(u * u + 1.0), iv(-5.0, 5.0), 64, 1e-10);
        assert!(set.is_empty());
        assert!(set.marginal.is_empty());
    }

    #[test]
    fn both_quadratic_branches() {
        let set = find_all_roots(
            |u| Ok(3.0 * u * u - 10.0 * u + 3.0),
            iv(0.0, 5.0),
            64,
            1e-10,
        );
        let v = set.values();
        assert_eq!(v.len(), 2);
        assert!((v[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((v[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn affine_relation_has_one_root() {
        for (x, t) in [(0.3, 0.0), (-2.0, 4.0), (5.0, -0.5)] {
            let set = find_all_roots(|u| Ok(u - (x - t * u)), iv(-100.0, 100.0), 1024, 1e-10);
            assert_eq!(set.len(), 1);
            assert!((set.roots[0].u - x / (1.0 + t)).abs() < 1e-10);
        }
    }

    #[test]
    fn root_on_scan_node_reported_once() {
        let set = find_all_roots(Ok, iv(-1.0, 1.0), 4, 1e-10);
        assert_eq!(set.values(), vec![0.0]);
    }

    #[test]
    fn tangency_goes_to_marginal() {
        let set = find_all_roots(|u| Ok((u - 0.3).powi(2)), iv(-1.0, 1.0), 64, 1e-10);
        assert!(set.is_empty());
        assert_eq!(set.marginal.len(), 1);
        assert!((set.marginal[0].u - 0.3).abs() < 1e-4);
    }

    #[test]
    fn pole_is_discarded_not_reported() {
        let set = find_all_roots(|u| Ok(1.0 / (u - 0.123)), iv(-1.0, 1.0), 64, 1e-10);
        assert!(set.is_empty());
        assert_eq!(set.discarded.len(), 1);
        assert!(!set.converged());
    }

    #[test]
    fn evaluation_failures_are_skipped() {
        let set = find_all_roots(
            |u| {
                if u < 0.0 {
                    Err(Error::invalid("outside"))
                } else {
                    Ok(u - 0.5)
                }
            },
            iv(-1.0, 1.0),
            8,
            1e-10,
        );
        assert_eq!(set.values(), vec![0.5]);
        assert_eq!(set.skipped, vec![iv(-1.0, 0.0)]);
    }
}
