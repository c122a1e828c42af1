//! Adaptive Simpson quadrature and the two transformation maps built from it.
//!
//! [`PhiMap`] is `φ(u) = ∫ du/f(u)`, normalised by `φ(u_ref) = φ_ref`.
//! [`EllMap`] is `ℓ(v) = ∫ g(φ⁻¹(v)) dv`, normalised by `ℓ(v_ref) = ℓ_ref`.
//!
//! Both are evaluated from a ladder of checkpoints: the antiderivative is
//! accumulated once, segment by segment, at construction, and a value at an
//! arbitrary point is the nearest checkpoint below it plus one short adaptive
//! integral. The maps are immutable afterwards and can be shared across threads.

use crate::error::{Error, Result};
use crate::expr::{parse, BinOp, Expr};
use crate::rootfind::find_root_newton;
use crate::Interval;

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_DEPTH: u32 = 48;
/// Panel refinements allowed per adaptive integral. Depth alone does not
/// bound the work: an unresolvable integrand fills the whole tree.
pub const MAX_PANELS: usize = 1 << 20;
/// Samples of `f` used to validate its sign, and ladder segments.
pub const SIGN_SAMPLES: usize = 1024;
const LADDER_SEGMENTS: usize = 1024;

/// `∫ₐᵇ f`, with `|error| ≤ tol·max(1, |result|)`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    try_integrate(|x| Ok(f(x)), a, b, tol)
}

/// [`integrate`] for integrands that can fail.
pub fn try_integrate<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return try_integrate(f, b, a, tol).map(|v| -v);
    }
    // A coarse composite rule fixes the scale of the relative tolerance.
    let coarse = composite_simpson(&mut f, a, b, 8)?;
    simpson_abs(&mut f, a, b, tol * coarse.abs().max(1.0))
}

fn checked<F>(f: &mut F, x: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let v = f(x)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(format!("integrand not finite at {x}")))
    }
}

fn composite_simpson<F>(f: &mut F, a: f64, b: f64, panels: usize) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let h = (b - a) / (2 * panels) as f64;
    let mut sum = checked(f, a)? + checked(f, b)?;
    for i in 1..2 * panels {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += weight * checked(f, a + h * i as f64)?;
    }
    Ok(sum * h / 3.0)
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

/// Adaptive Simpson with an absolute error target on `a < b`.
pub(crate) fn simpson_abs<F>(f: &mut F, a: f64, b: f64, eps: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (checked(f, a)?, checked(f, m)?, checked(f, b)?);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut budget = Budget {
        converged: true,
        panels: MAX_PANELS,
    };
    let value = refine(
        f,
        Panel {
            a,
            b,
            fa,
            fm,
            fb,
            whole,
        },
        eps,
        MAX_DEPTH,
        &mut budget,
    )?;
    if budget.converged {
        Ok(value)
    } else {
        Err(Error::NonConvergence {
            a,
            b,
            partial: value,
        })
    }
}

struct Budget {
    converged: bool,
    panels: usize,
}

fn refine<F>(f: &mut F, p: Panel, eps: f64, depth: u32, budget: &mut Budget) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if budget.panels == 0 {
        budget.converged = false;
        return Ok(p.whole);
    }
    budget.panels -= 1;
    let m = 0.5 * (p.a + p.b);
    let lm = 0.5 * (p.a + m);
    let rm = 0.5 * (m + p.b);
    let (flm, frm) = (checked(f, lm)?, checked(f, rm)?);
    let left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
    let right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
    let delta = left + right - p.whole;
    let at_resolution = lm <= p.a || rm >= p.b || delta.abs() <= 1e-15 * (left + right).abs();
    if delta.abs() <= 15.0 * eps || at_resolution {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        budget.converged = false;
        return Ok(left + right + delta / 15.0);
    }
    let l = refine(
        f,
        Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
        },
        0.5 * eps,
        depth - 1,
        budget,
    )?;
    let r = refine(
        f,
        Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
        },
        0.5 * eps,
        depth - 1,
        budget,
    )?;
    Ok(l + r)
}

/// Cumulative antiderivative from `domain.lo` on a uniform ladder.
#[derive(Debug, Clone)]
pub(crate) struct Ladder {
    domain: Interval,
    nodes: Vec<f64>,
    values: Vec<f64>,
    step: f64,
    eps: f64,
}

impl Ladder {
    pub(crate) fn build<F>(f: &F, domain: Interval, segments: usize, tol: f64) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let nodes = domain.nodes(segments);
        let mut g = |x: f64| f(x);
        // Per-segment share of an absolute budget scaled by the total magnitude.
        let scale = composite_simpson(&mut g, domain.lo, domain.hi, 64)?
            .abs()
            .max(1.0);
        let eps = tol * scale / segments as f64;
        let mut values = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        values.push(0.0);
        for pair in nodes.windows(2) {
            acc += simpson_abs(&mut g, pair[0], pair[1], eps)?;
            values.push(acc);
        }
        Ok(Self {
            domain,
            step: domain.width() / segments as f64,
            nodes,
            values,
            eps,
        })
    }

    fn segment(&self, x: f64) -> usize {
        let k = ((x - self.domain.lo) / self.step).floor();
        let last = self.nodes.len() - 2;
        let mut k = if k.is_nan() || k < 0.0 {
            0
        } else {
            (k as usize).min(last)
        };
        // Rounding in the division can land one segment off.
        while k > 0 && self.nodes[k] > x {
            k -= 1;
        }
        while k < last && self.nodes[k + 1] <= x {
            k += 1;
        }
        k
    }

    pub(crate) fn at<F>(&self, f: &F, x: f64) -> Result<f64>
    where
        F: Fn(f64) -> Result<f64>,
    {
        if !self.domain.contains(x) {
            return Err(Error::OutOfRange {
                value: x,
                lo: self.domain.lo,
                hi: self.domain.hi,
            });
        }
        let k = self.segment(x);
        let mut g = |y: f64| f(y);
        Ok(self.values[k] + simpson_abs(&mut g, self.nodes[k], x, self.eps)?)
    }

    pub(crate) fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub(crate) fn node_values(&self) -> &[f64] {
        &self.values
    }
}

/// `φ(u) = ∫ du/f(u)` on a validated domain where `f` has constant nonzero sign.
#[derive(Debug, Clone)]
pub struct PhiMap {
    f: Expr,
    domain: Interval,
    u_ref: f64,
    phi_ref: f64,
    tol: f64,
    sign: f64,
    ladder: Ladder,
    raw_ref: f64,
    range: Interval,
}

impl PhiMap {
    /// `φ` with `φ(u_ref) = 0`. `f` is an expression in `u` only.
    pub fn new(f: &Expr, u_ref: f64, domain: Interval, tol: f64) -> Result<Self> {
        Self::with_reference(f, u_ref, 0.0, domain, tol)
    }

    /// `φ` with `φ(u_ref) = phi_ref`.
    pub fn with_reference(
        f: &Expr,
        u_ref: f64,
        phi_ref: f64,
        domain: Interval,
        tol: f64,
    ) -> Result<Self> {
        if !domain.contains(u_ref) {
            return Err(Error::invalid(format!(
                "reference point {u_ref} outside u-domain {domain}"
            )));
        }
        let sign = validate_sign(f, domain)?;
        let inv = |u: f64| Ok(1.0 / f.eval(&("u", u))?);
        let ladder = Ladder::build(&inv, domain, LADDER_SEGMENTS, tol)?;
        let raw_ref = ladder.at(&inv, u_ref)?;
        let mut map = Self {
            f: f.clone(),
            domain,
            u_ref,
            phi_ref,
            tol,
            sign,
            ladder,
            raw_ref,
            range: domain,
        };
        let (p_lo, p_hi) = (map.phi(domain.lo)?, map.phi(domain.hi)?);
        map.range = Interval {
            lo: p_lo.min(p_hi),
            hi: p_lo.max(p_hi),
        };
        Ok(map)
    }

    fn reciprocal(&self, u: f64) -> Result<f64> {
        Ok(1.0 / self.f.eval(&("u", u))?)
    }

    pub fn phi(&self, u: f64) -> Result<f64> {
        if u == self.u_ref {
            return Ok(self.phi_ref);
        }
        let raw = self.ladder.at(&|w| self.reciprocal(w), u)?;
        Ok(self.phi_ref + (raw - self.raw_ref))
    }

    /// `φ'(u) = 1/f(u)`.
    pub fn derivative(&self, u: f64) -> Result<f64> {
        self.reciprocal(u)
    }

    /// `u` with `|φ(u) − v| ≤ 1e-10·max(1, |v|)`: bisection to the ladder
    /// segment, then safeguarded Newton with `φ' = 1/f`.
    pub fn inverse(&self, v: f64) -> Result<f64> {
        if v == self.phi_ref {
            return Ok(self.u_ref);
        }
        let slack = 1e-12 * v.abs().max(1.0);
        if !(v >= self.range.lo - slack && v <= self.range.hi + slack) {
            return Err(Error::OutOfRange {
                value: v,
                lo: self.range.lo,
                hi: self.range.hi,
            });
        }
        let target_raw = v - self.phi_ref + self.raw_ref;
        let nodes = self.ladder.nodes();
        let raw = self.ladder.node_values();
        // raw is monotone with direction `sign`.
        let above = |k: usize| self.sign * (raw[k] - target_raw) >= 0.0;
        let (mut lo, mut hi) = (0usize, nodes.len() - 1);
        if !above(hi) {
            return Ok(self.domain.hi);
        }
        if above(lo) {
            return Ok(self.domain.lo);
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if above(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let bracket = Interval {
            lo: nodes[lo],
            hi: nodes[hi],
        };
        find_root_newton(
            |u| Ok(self.phi(u)? - v),
            |u| self.derivative(u),
            bracket,
            1e-13 * v.abs().max(1.0),
        )
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    /// `φ(domain)`.
    pub fn range(&self) -> Interval {
        self.range
    }

    pub fn u_ref(&self) -> f64 {
        self.u_ref
    }

    pub fn phi_ref(&self) -> f64 {
        self.phi_ref
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// `+1` if `f > 0` on the domain, `−1` if `f < 0`.
    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn f(&self) -> &Expr {
        &self.f
    }
}

/// Constant, nonzero sign of `f` at [`SIGN_SAMPLES`] points spanning `domain`.
/// A sampling heuristic: a sign change between samples goes unnoticed.
fn validate_sign(f: &Expr, domain: Interval) -> Result<f64> {
    let mut sign = 0.0;
    for u in domain.nodes(SIGN_SAMPLES - 1) {
        let value = f.eval(&("u", u))?;
        if value == 0.0 || !value.is_finite() || (sign != 0.0 && value.signum() != sign) {
            return Err(Error::SignChange { u, value });
        }
        sign = value.signum();
    }
    Ok(sign)
}

/// Builds `φ` with `φ(u_ref) = 0`.
pub fn build_phi_map(f: &Expr, u_ref: f64, domain: Interval, tol: f64) -> Result<PhiMap> {
    PhiMap::new(f, u_ref, domain, tol)
}

pub fn phi_inverse(map: &PhiMap, v: f64) -> Result<f64> {
    map.inverse(v)
}

/// `ℓ(v) = ∫ g(φ⁻¹(v)) dv` over the range of `φ`.
#[derive(Debug, Clone)]
pub struct EllMap {
    phi: PhiMap,
    g: Expr,
    v_ref: f64,
    ell_ref: f64,
    v_ladder: Ladder,
    v_raw_ref: f64,
    // ℓ∘φ directly in u: d/du ℓ(φ(u)) = g(u)/f(u).
    u_ladder: Ladder,
    u_raw_star: f64,
}

impl EllMap {
    /// `ℓ` with `ℓ(v_ref) = ell_ref`. `g` is an expression in `u` only.
    pub fn new(g: &Expr, phi: &PhiMap, v_ref: f64, ell_ref: f64, tol: f64) -> Result<Self> {
        let range = phi.range();
        if !range.contains(v_ref) {
            return Err(Error::OutOfRange {
                value: v_ref,
                lo: range.lo,
                hi: range.hi,
            });
        }
        let speed = |v: f64| Ok(g.eval(&("u", phi.inverse(v)?))?);
        let v_ladder = Ladder::build(&speed, range, LADDER_SEGMENTS, tol)?;
        let v_raw_ref = v_ladder.at(&speed, v_ref)?;

        let slope = |u: f64| Ok(g.eval(&("u", u))? / phi.f.eval(&("u", u))?);
        let u_ladder = Ladder::build(&slope, phi.domain(), LADDER_SEGMENTS, tol)?;
        let u_star = phi.inverse(v_ref)?;
        let u_raw_star = u_ladder.at(&slope, u_star)?;
        Ok(Self {
            phi: phi.clone(),
            g: g.clone(),
            v_ref,
            ell_ref,
            v_ladder,
            v_raw_ref,
            u_ladder,
            u_raw_star,
        })
    }

    /// `(g∘φ⁻¹)(v)`.
    pub fn speed(&self, v: f64) -> Result<f64> {
        Ok(self.g.eval(&("u", self.phi.inverse(v)?))?)
    }

    pub fn ell(&self, v: f64) -> Result<f64> {
        if v == self.v_ref {
            return Ok(self.ell_ref);
        }
        let raw = self.v_ladder.at(&|w| self.speed(w), v)?;
        Ok(self.ell_ref + (raw - self.v_raw_ref))
    }

    /// `ℓ(φ(u))`, integrated in `u` as `∫ g/f du` so no inversion is needed.
    pub fn ell_of_phi(&self, u: f64) -> Result<f64> {
        let slope = |w: f64| Ok(self.g.eval(&("u", w))? / self.phi.f.eval(&("u", w))?);
        let raw = self.u_ladder.at(&slope, u)?;
        Ok(self.ell_ref + (raw - self.u_raw_star))
    }

    pub fn phi(&self) -> &PhiMap {
        &self.phi
    }

    pub fn v_ref(&self) -> f64 {
        self.v_ref
    }

    pub fn ell_ref(&self) -> f64 {
        self.ell_ref
    }
}

/// Builds `ℓ` with `ℓ(v_ref) = 0`.
pub fn build_ell(g: &Expr, map: &PhiMap, v_ref: f64, tol: f64) -> Result<EllMap> {
    EllMap::new(g, map, v_ref, 0.0, tol)
}

/// Tabulated `ℓ(v)` for `u_t + (u^m)_x = u^n`, i.e. `g = m·u^(m−1)`, `f = uⁿ`,
/// as an expression in `v`:
///
/// | case        | ℓ(v)                                        |
/// |-------------|---------------------------------------------|
/// | `1 < n ≠ m` | `m/(m−n) · ((1−n)·v)^((n−m)/(n−1))`         |
/// | `n = m ≠ 1` | `m/(1−m) · ln((1−m)·v)`                     |
/// | `n = 1 ≠ m` | `m/(m−1) · exp((m−1)·v)`                    |
/// | `n = m = 1` | `exp(v)`                                    |
///
/// The first row is real only where `(1−n)·v > 0`. The last row is kept as
/// tabulated; there `g ≡ 1` and the antiderivative of `g∘φ⁻¹` is `v` itself,
/// so it does not agree with [`EllMap`]. Pairs outside the four cases give
/// [`Error::NotCovered`].
pub fn ell_closed_form(m: i64, n: i64) -> Result<Expr> {
    let (mf, nf) = (m as f64, n as f64);
    let v = Expr::var("v");
    let num = Expr::num;
    let scaled = |coef: f64, body: Expr| Expr::binary(BinOp::Mul, num(coef), body);
    let linear = |coef: f64| Expr::binary(BinOp::Mul, num(coef), v.clone());
    let expr = if n == 1 && m == 1 {
        parse("exp(v)").expect("literal")
    } else if n == 1 {
        scaled(
            mf / (mf - 1.0),
            Expr::call(crate::expr::Func::Exp, linear(mf - 1.0)),
        )
    } else if n == m {
        scaled(
            mf / (1.0 - mf),
            Expr::call(crate::expr::Func::Ln, linear(1.0 - mf)),
        )
    } else if n > 1 {
        scaled(
            mf / (mf - nf),
            Expr::binary(BinOp::Pow, linear(1.0 - nf), num((nf - mf) / (nf - 1.0))),
        )
    } else {
        return Err(Error::NotCovered { m, n });
    };
    Ok(expr.fold())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, LN_2};

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn expr(s: &str) -> Expr {
        parse(s).unwrap()
    }

    #[test]
    fn constant_integrand() {
        assert!((integrate(|_| 1.0, 0.0, 1.0, 1e-10).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reciprocal_gives_log_two() {
        let v = integrate(|u| 1.0 / u, 1.0, 2.0, 1e-10).unwrap();
        assert!((v - LN_2).abs() < 1e-10);
    }

    #[test]
    fn decaying_exponential() {
        let v = integrate(|u| (-u).exp(), 0.0, 1.0, 1e-10).unwrap();
        assert!((v - (1.0 - (-1f64).exp())).abs() < 1e-10);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let fwd = integrate(|u| u * u, 0.0, 2.0, 1e-12).unwrap();
        let back = integrate(|u| u * u, 2.0, 0.0, 1e-12).unwrap();
        assert_eq!(fwd, -back);
        assert!((fwd - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn depth_exhaustion_reports_partial() {
        // Discontinuous integrand with an unreachable tolerance.
        let err =
            integrate(|u| if u < 1.0 / 3.0 { 0.0 } else { 1.0 }, 0.0, 1.0, 1e-300).unwrap_err();
        match err {
            Error::NonConvergence { partial, .. } => assert!((partial - 2.0 / 3.0).abs() < 1e-6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unresolvable_oscillation_stops_at_panel_budget() {
        let w = |u: f64| 2.0 + (1.0 / ((u - 0.3).powi(2) + 1e-30)).sin();
        assert!(matches!(
            integrate(w, 0.0, 1.0, 1e-10),
            Err(Error::NonConvergence { .. })
        ));
    }

    #[test]
    fn phi_of_exponential_source() {
        let map = build_phi_map(&expr("exp(u)"), 0.0, iv(-5.0, 5.0), 1e-10).unwrap();
        assert!((map.phi(1.0).unwrap() - (1.0 - 1.0 / E)).abs() < 1e-10);
        assert!((map.phi(1.0).unwrap() - 0.632_120_558_828_557_7).abs() < 1e-10);
        assert!((map.inverse(1.0 - 1.0 / E).unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(map.sign(), 1.0);
    }

    #[test]
    fn phi_of_unit_source_is_shift() {
        let map = build_phi_map(&expr("1"), 0.5, iv(-2.0, 2.0), 1e-10).unwrap();
        for u in [-2.0, -1.0, 0.5, 1.75, 2.0] {
            assert!((map.phi(u).unwrap() - (u - 0.5)).abs() < 1e-14);
        }
        let map = build_phi_map(&expr("1"), 0.0, iv(-2.0, 2.0), 1e-10).unwrap();
        for v in [-1.9, -0.3, 0.0, 1.2] {
            assert!((map.inverse(v).unwrap() - v).abs() < 1e-12);
        }
    }

    #[test]
    fn phi_of_square_source() {
        let map = build_phi_map(&expr("u^2"), 1.0, iv(0.1, 20.0), 1e-10).unwrap();
        assert!((map.phi(2.0).unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn inverse_at_reference() {
        let map = build_phi_map(&expr("2 + sin(u)"), 0.3, iv(-3.0, 3.0), 1e-10).unwrap();
        assert_eq!(map.inverse(0.0).unwrap(), 0.3);
        assert_eq!(map.phi(0.3).unwrap(), 0.0);
    }

    #[test]
    fn inverse_outside_range() {
        let map = build_phi_map(&expr("1"), 0.0, iv(-1.0, 1.0), 1e-10).unwrap();
        match map.inverse(3.0).unwrap_err() {
            Error::OutOfRange { lo, hi, .. } => {
                assert!((lo + 1.0).abs() < 1e-14 && (hi - 1.0).abs() < 1e-14)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sign_change_rejected() {
        let err = build_phi_map(&expr("u"), 1.0, iv(-1.0, 2.0), 1e-10).unwrap_err();
        assert!(matches!(err, Error::SignChange { .. }));
        let err = build_phi_map(&expr("u - 0.3"), 1.0, iv(-1.0, 2.0), 1e-10).unwrap_err();
        assert!(matches!(err, Error::SignChange { .. }));
    }

    #[test]
    fn negative_source_is_decreasing() {
        let map = build_phi_map(&expr("-exp(u)"), 0.0, iv(-2.0, 2.0), 1e-10).unwrap();
        assert_eq!(map.sign(), -1.0);
        assert!(map.phi(1.0).unwrap() < 0.0);
        let u = map.inverse(map.phi(1.3).unwrap()).unwrap();
        assert!((u - 1.3).abs() < 1e-10);
    }

    #[test]
    fn zero_speed_gives_zero_ell() {
        let map = build_phi_map(&expr("exp(u)"), 0.0, iv(-2.0, 2.0), 1e-10).unwrap();
        let ell = build_ell(&expr("0"), &map, 0.0, 1e-10).unwrap();
        for v in [map.range().lo, -0.5, 0.5, map.range().hi] {
            assert_eq!(ell.ell(v).unwrap(), 0.0);
        }
    }

    #[test]
    fn ell_for_exponential_source() {
        // With φ(0) = −1, φ(u) = −e^{−u}, and ℓ(v) = v(1 − ln(−v)) + const.
        let map = PhiMap::with_reference(&expr("exp(u)"), 0.0, -1.0, iv(-3.0, 3.0), 1e-10).unwrap();
        let ell = EllMap::new(&expr("u"), &map, -1.0, -1.0, 1e-10).unwrap();
        let closed = |v: f64| v * (1.0 - (-v).ln());
        for v in [-15.0, -3.0, -1.5, -1.0, -0.7, -0.1] {
            assert!((ell.ell(v).unwrap() - closed(v)).abs() < 1e-8, "v = {v}");
        }
        for u in [-2.5_f64, -1.0, 0.0, 0.4, 2.0] {
            let expected = -(u + 1.0) * (-u).exp();
            assert!(
                (ell.ell_of_phi(u).unwrap() - expected).abs() < 1e-8,
                "u = {u}"
            );
        }
    }

    #[test]
    fn ell_of_phi_for_cubic_flux_square_source() {
        // f = u², g = 3u²: ℓ∘φ(u) = 3u + const.
        let map = build_phi_map(&expr("u^2"), 1.0, iv(0.2, 10.0), 1e-10).unwrap();
        let ell = build_ell(&expr("3*u^2"), &map, 0.0, 1e-10).unwrap();
        let via_v =
            ell.ell(map.phi(2.0).unwrap()).unwrap() - ell.ell(map.phi(1.0).unwrap()).unwrap();
        let via_u = ell.ell_of_phi(2.0).unwrap() - ell.ell_of_phi(1.0).unwrap();
        assert!((via_v - 3.0).abs() < 1e-8, "{via_v}");
        assert!((via_u - 3.0).abs() < 1e-10, "{via_u}");
    }

    #[test]
    fn tabulated_ell_cases() {
        assert_eq!(ell_closed_form(1, 1).unwrap(), expr("exp(v)"));
        let e = ell_closed_form(2, 1).unwrap();
        assert_eq!(e.to_string(), "2*exp(v)");
        assert!((e.eval(&("v", 0.7)).unwrap() - 2.0 * 0.7_f64.exp()).abs() < 1e-15);
        let e = ell_closed_form(3, 2).unwrap();
        assert_eq!(e.eval(&("v", -0.5)).unwrap(), 6.0);
        assert_eq!(e.eval(&("v", 2.0)).unwrap(), -1.5);
        let e = ell_closed_form(2, 2).unwrap();
        assert!((e.eval(&("v", -0.5)).unwrap() + 2.0 * 0.5f64.ln()).abs() < 1e-15);
        assert!(matches!(
            ell_closed_form(3, 0),
            Err(Error::NotCovered { m: 3, n: 0 })
        ));
        assert!(matches!(
            ell_closed_form(2, -1),
            Err(Error::NotCovered { .. })
        ));
    }
}
