//! Exact solutions of the generalized inviscid Burgers equation
//! `u_t + g(u)·u_x = f(u)` by quadrature, together with independent checks.
//!
//! * [`expr`]: the expression language for `f`, `g`, the profile `h(s)` and
//!   closed-form candidates `u(x, t)`.
//! * [`special`]: real branches of Lambert W.
//! * [`quad`]: adaptive Simpson quadrature, the map `φ(u) = ∫ du/f(u)`, its
//!   inverse, and `ℓ(v) = ∫ g(φ⁻¹(v)) dv`.
//! * [`rootfind`]: bracketed root finding and scans for every root of an
//!   implicit relation.
//! * [`solver`]: the implicit solutions `u = h(x − t·g(u))` (homogeneous) and
//!   `x = ℓ(φ(u)) + h(t − φ(u))` (with source), characteristics, breaking time.
//! * [`verify`]: finite-difference PDE residuals of sampled fields.
//! * [`problem_file`] and [`registry`]: the text problem format and the
//!   built-in worked examples used by the CLI.

pub mod error;
pub mod expr;
pub mod problem_file;
pub mod quad;
pub mod registry;
pub mod rootfind;
pub mod solver;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use expr::{parse, Bindings, Expr};

/// Closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }

    /// `n + 1` equally spaced nodes from `lo` to `hi`, endpoints exact.
    pub fn nodes(&self, n: usize) -> Vec<f64> {
        assert!(n >= 1);
        let h = self.width() / n as f64;
        (0..=n)
            .map(|i| {
                if i == n {
                    self.hi
                } else {
                    self.lo + h * i as f64
                }
            })
            .collect()
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}
