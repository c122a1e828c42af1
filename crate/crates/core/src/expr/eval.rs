use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::{BinOp, Expr, Func};
use crate::special::{lambert_w, WBranch};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound name `{0}`")]
    Unbound(String),

    /// A primitive's argument left its real domain.
    #[error("{op}: argument {arg} outside domain")]
    Domain { op: &'static str, arg: f64 },

    #[error("{op}: non-finite result")]
    NonFinite { op: &'static str },
}

/// Name lookup for evaluation.
pub trait Env {
    fn lookup(&self, name: &str) -> Option<f64>;
}

impl Env for (&str, f64) {
    fn lookup(&self, name: &str) -> Option<f64> {
        (self.0 == name).then_some(self.1)
    }
}

impl<const N: usize> Env for [(&str, f64); N] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.iter().find(|(k, _)| *k == name).map(|(_, v)| *v)
    }
}

impl Env for [(&str, f64)] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.iter().find(|(k, _)| *k == name).map(|(_, v)| *v)
    }
}

impl Env for HashMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

/// First environment shadows the second.
impl<A: Env, B: Env> Env for (A, B) {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.0.lookup(name).or_else(|| self.1.lookup(name))
    }
}

impl<T: Env + ?Sized> Env for &T {
    fn lookup(&self, name: &str) -> Option<f64> {
        (**self).lookup(name)
    }
}

/// Named parameter values (`a`, `b`, `m`, ...).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bindings(BTreeMap<String, f64>);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        Self(pairs.into_iter().map(|(k, v)| (k.to_owned(), v)).collect())
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Env for Bindings {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name)
    }
}

fn finite(op: &'static str, value: f64) -> Result<f64, EvalError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(EvalError::NonFinite { op })
    }
}

pub(super) fn apply_binary(op: BinOp, a: f64, b: f64) -> Result<f64, EvalError> {
    match op {
        BinOp::Add => finite("+", a + b),
        BinOp::Sub => finite("-", a - b),
        BinOp::Mul => finite("*", a * b),
        BinOp::Div => {
            if b == 0.0 {
                return Err(EvalError::Domain { op: "/", arg: b });
            }
            finite("/", a / b)
        }
        BinOp::Pow => power(a, b),
    }
}

// Integral exponents go through repeated multiplication so negative bases work.
fn power(base: f64, exponent: f64) -> Result<f64, EvalError> {
    if exponent.fract() == 0.0 && exponent.abs() <= i32::MAX as f64 {
        if base == 0.0 && exponent < 0.0 {
            return Err(EvalError::Domain { op: "^", arg: base });
        }
        return finite("^", base.powi(exponent as i32));
    }
    if base < 0.0 || (base == 0.0 && exponent < 0.0) {
        return Err(EvalError::Domain { op: "^", arg: base });
    }
    finite("^", base.powf(exponent))
}

pub(super) fn apply_func(func: Func, x: f64) -> Result<f64, EvalError> {
    let op = func.name();
    match func {
        Func::Exp => finite(op, x.exp()),
        Func::Ln => {
            if x <= 0.0 {
                return Err(EvalError::Domain { op, arg: x });
            }
            finite(op, x.ln())
        }
        Func::Sqrt => {
            if x < 0.0 {
                return Err(EvalError::Domain { op, arg: x });
            }
            Ok(x.sqrt())
        }
        Func::Sin => Ok(x.sin()),
        Func::Cos => Ok(x.cos()),
        Func::Tanh => Ok(x.tanh()),
        Func::Abs => Ok(x.abs()),
        Func::LambertW0 => lambert_w(x, WBranch::Principal),
        Func::LambertWm1 => lambert_w(x, WBranch::Lower),
    }
}

impl Expr {
    pub fn eval(&self, env: &impl Env) -> Result<f64, EvalError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var(name) => env
                .lookup(name)
                .ok_or_else(|| EvalError::Unbound(name.clone())),
            Expr::Neg(inner) => Ok(-inner.eval(env)?),
            Expr::Binary(op, lhs, rhs) => apply_binary(*op, lhs.eval(env)?, rhs.eval(env)?),
            Expr::Call(func, arg) => apply_func(*func, arg.eval(env)?),
        }
    }

    /// Evaluate with a single variable bound, on top of `params`.
    pub fn eval_at(&self, var: &str, value: f64, params: &impl Env) -> Result<f64, EvalError> {
        self.eval(&((var, value), params))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn eval1(src: &str, var: &str, value: f64) -> Result<f64, EvalError> {
        parse(src).unwrap().eval(&(var, value))
    }

    #[test]
    fn basic_values() {
        assert_eq!(eval1("u^2", "u", 3.0).unwrap(), 9.0);
        assert_eq!(eval1("exp(u)", "u", 0.0).unwrap(), 1.0);
        let e = parse("(a*s+b)/c").unwrap();
        let env = [("a", 1.0), ("b", 0.0), ("c", 2.0), ("s", 4.0)];
        assert_eq!(e.eval(&env).unwrap(), 2.0);
    }

    #[test]
    fn unbound_name() {
        assert_eq!(
            eval1("u + k", "u", 1.0),
            Err(EvalError::Unbound("k".into()))
        );
    }

    #[test]
    fn integral_powers_of_negative_bases() {
        assert_eq!(eval1("u^3", "u", -2.0).unwrap(), -8.0);
        assert_eq!(eval1("u^(-1)", "u", -4.0).unwrap(), -0.25);
        assert!(eval1("u^(m-1)", "u", -2.0).is_err()); // m unbound
        let e = parse("u^(m-1)").unwrap();
        assert_eq!(e.eval(&[("u", -2.0), ("m", 3.0)]).unwrap(), 4.0);
        assert!(matches!(
            eval1("u^0.5", "u", -1.0),
            Err(EvalError::Domain { op: "^", .. })
        ));
        assert!(eval1("u^(-2)", "u", 0.0).is_err());
        assert_eq!(eval1("u^0.5", "u", 0.0).unwrap(), 0.0);
    }

    #[test]
    fn domain_boundaries() {
        assert!(eval1("ln(u)", "u", 0.0).is_err());
        assert!(eval1("ln(u)", "u", f64::MIN_POSITIVE).is_ok());
        assert!(eval1("sqrt(u)", "u", 0.0).is_ok());
        assert!(eval1("sqrt(u)", "u", -f64::MIN_POSITIVE).is_err());
        assert!(eval1("1/u", "u", 0.0).is_err());
        assert!(matches!(
            eval1("exp(u)", "u", 1000.0),
            Err(EvalError::NonFinite { .. })
        ));
        let bp = crate::special::BRANCH_POINT;
        assert!(eval1("lambertw0(u)", "u", bp).is_ok());
        assert!(eval1("lambertw0(u)", "u", bp.next_down()).is_err());
        assert!(eval1("lambertwm1(u)", "u", 0.0).is_err());
        assert!(eval1("lambertwm1(u)", "u", -1e-10).is_ok());
    }

    #[test]
    fn chained_env_shadows() {
        let params = Bindings::from_pairs([("u", 10.0), ("a", 2.0)]);
        let e = parse("a*u").unwrap();
        assert_eq!(e.eval_at("u", 3.0, &params).unwrap(), 6.0);
    }
}
