use super::eval::{apply_binary, apply_func};
use super::{BinOp, Expr, Func};
use crate::error::{Error, Result};

// Folding constructors. They only rewrite literal arithmetic and the
// identities x+0, x*1, x*0, x^1, x^0, --x.

pub(super) fn neg(e: Expr) -> Expr {
    match e {
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

pub(super) fn call(func: Func, arg: Expr) -> Expr {
    if let Some(c) = arg.as_const() {
        if let Ok(v) = apply_func(func, c) {
            return Expr::num(v);
        }
    }
    Expr::call(func, arg)
}

pub(super) fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    let (l, r) = (lhs.as_const(), rhs.as_const());
    if let (Some(a), Some(b)) = (l, r) {
        if let Ok(v) = apply_binary(op, a, b) {
            return Expr::num(v);
        }
    }
    match op {
        BinOp::Add if l == Some(0.0) => rhs,
        BinOp::Add | BinOp::Sub if r == Some(0.0) => lhs,
        BinOp::Sub if l == Some(0.0) => neg(rhs),
        BinOp::Mul if l == Some(0.0) || r == Some(0.0) => Expr::Const(0.0),
        BinOp::Mul if l == Some(1.0) => rhs,
        BinOp::Mul | BinOp::Div if r == Some(1.0) => lhs,
        BinOp::Mul if l == Some(-1.0) => neg(rhs),
        BinOp::Div if l == Some(0.0) => Expr::Const(0.0),
        BinOp::Pow if r == Some(1.0) => lhs,
        BinOp::Pow if r == Some(0.0) => Expr::Const(1.0),
        _ => Expr::binary(op, lhs, rhs),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    binary(BinOp::Add, a, b)
}

fn sub(a: Expr, b: Expr) -> Expr {
    binary(BinOp::Sub, a, b)
}

fn mul(a: Expr, b: Expr) -> Expr {
    binary(BinOp::Mul, a, b)
}

fn div(a: Expr, b: Expr) -> Expr {
    binary(BinOp::Div, a, b)
}

fn pow(a: Expr, b: Expr) -> Expr {
    binary(BinOp::Pow, a, b)
}

impl Expr {
    /// Exact derivative with respect to `var`, with literal arithmetic folded.
    ///
    /// `abs` is rejected (not differentiable at 0). The Lambert W branches use
    /// `W'(z) = W/(z(1 + W)) = e^{-W}/(1 + W)`, the second form being finite at `z = 0`.
    pub fn differentiate(&self, var: &str) -> Result<Expr> {
        if !self.depends_on(var) {
            return Ok(Expr::Const(0.0));
        }
        let d = |e: &Expr| e.differentiate(var);
        Ok(match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var(name) => Expr::Const(if name == var { 1.0 } else { 0.0 }),
            Expr::Neg(inner) => neg(d(inner)?),
            Expr::Binary(op, lhs, rhs) => {
                let (a, b) = (lhs.as_ref().clone(), rhs.as_ref().clone());
                match op {
                    BinOp::Add => add(d(lhs)?, d(rhs)?),
                    BinOp::Sub => sub(d(lhs)?, d(rhs)?),
                    BinOp::Mul => add(mul(d(lhs)?, b), mul(a, d(rhs)?)),
                    BinOp::Div => div(
                        sub(mul(d(lhs)?, b.clone()), mul(a, d(rhs)?)),
                        pow(b, Expr::Const(2.0)),
                    ),
                    BinOp::Pow => {
                        if !rhs.depends_on(var) {
                            // b·a^(b−1)·a'
                            let lowered = pow(a, sub(b.clone(), Expr::Const(1.0)));
                            mul(mul(b, lowered), d(lhs)?)
                        } else if !lhs.depends_on(var) {
                            // a^b·ln(a)·b'
                            mul(mul(self.clone(), call(Func::Ln, a)), d(rhs)?)
                        } else {
                            // a^b·(b'·ln a + b·a'/a)
                            let log_term = mul(d(rhs)?, call(Func::Ln, a.clone()));
                            let base_term = div(mul(b, d(lhs)?), a);
                            mul(self.clone(), add(log_term, base_term))
                        }
                    }
                }
            }
            Expr::Call(func, arg) => {
                let inner = arg.as_ref().clone();
                let outer = match func {
                    Func::Exp => self.clone(),
                    Func::Ln => div(Expr::Const(1.0), inner),
                    Func::Sqrt => div(Expr::Const(1.0), mul(Expr::Const(2.0), self.clone())),
                    Func::Sin => call(Func::Cos, inner),
                    Func::Cos => neg(call(Func::Sin, inner)),
                    Func::Tanh => sub(Expr::Const(1.0), pow(self.clone(), Expr::Const(2.0))),
                    Func::Abs => return Err(Error::NotDifferentiable("abs")),
                    Func::LambertW0 | Func::LambertWm1 => div(
                        call(Func::Exp, neg(self.clone())),
                        add(Expr::Const(1.0), self.clone()),
                    ),
                };
                mul(outer, d(arg)?)
            }
        })
    }
}
