//! One-variable expression trees: parsing, evaluation and symbolic
//! differentiation.
//!
//! Grammar (EBNF, whitespace insignificant):
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = ("-" | "+") unary | power ;
//! power   = primary [ "^" unary ] ;          (* right-associative *)
//! primary = number | name | func "(" expr ")" | "(" expr ")" ;
//! func    = "exp" | "ln" | "sqrt" | "sin" | "cos" | "tanh" | "abs"
//!         | "lambertw0" | "lambertwm1" ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! name    = letter { letter | digit | "_" } ;
//! ```
//!
//! So `-u^2` is `-(u^2)`, `2^3^2` is `2^(3^2)` and `u^-1` is `u^(-1)`.
//! Variables and parameters share the `name` production; which names are
//! bound is decided per evaluation.

mod diff;
mod eval;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

pub use eval::{Bindings, Env, EvalError};
pub use parse::{parse, ParseError, ParseErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Ln,
    Sqrt,
    Sin,
    Cos,
    Tanh,
    Abs,
    LambertW0,
    LambertWm1,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Sin,
        Func::Cos,
        Func::Tanh,
        Func::Abs,
        Func::LambertW0,
        Func::LambertWm1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
            Func::LambertW0 => "lambertw0",
            Func::LambertWm1 => "lambertwm1",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

const NEG_PRECEDENCE: u8 = 3;
const ATOM_PRECEDENCE: u8 = 5;

/// Expression tree.
///
/// `Const` holds non-negative finite literals; negative numbers are
/// `Neg(Const(..))`, which is what the parser produces and what
/// [`Expr::num`] builds. Trees that respect this print and re-parse to an
/// identical structure.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn num(value: f64) -> Expr {
        assert!(value.is_finite(), "non-finite literal {value}");
        if value < 0.0 {
            Expr::Neg(Box::new(Expr::Const(-value)))
        } else {
            // Folds -0.0 to 0.0.
            Expr::Const(value.abs())
        }
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        Expr::Call(func, Box::new(arg))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    /// Literal value of a constant subtree (`Const` or negated `Const`).
    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            Expr::Neg(inner) => match inner.as_ref() {
                Expr::Const(c) => Some(-c),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    /// All variable and parameter names referenced by the tree.
    pub fn free_names(&self) -> BTreeSet<String> {
        let mut names = BTreeSet::new();
        self.collect_names(&mut names);
        names
    }

    fn collect_names(&self, names: &mut BTreeSet<String>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(name) => {
                names.insert(name.clone());
            }
            Expr::Neg(inner) | Expr::Call(_, inner) => inner.collect_names(names),
            Expr::Binary(_, lhs, rhs) => {
                lhs.collect_names(names);
                rhs.collect_names(names);
            }
        }
    }

    pub fn depends_on(&self, name: &str) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(v) => v == name,
            Expr::Neg(inner) | Expr::Call(_, inner) => inner.depends_on(name),
            Expr::Binary(_, lhs, rhs) => lhs.depends_on(name) || rhs.depends_on(name),
        }
    }

    /// Replace every occurrence of `name` by `replacement`.
    pub fn substitute(&self, name: &str, replacement: &Expr) -> Expr {
        match self {
            Expr::Var(v) if v == name => replacement.clone(),
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(inner) => Expr::Neg(Box::new(inner.substitute(name, replacement))),
            Expr::Call(f, inner) => Expr::call(*f, inner.substitute(name, replacement)),
            Expr::Binary(op, lhs, rhs) => Expr::binary(
                *op,
                lhs.substitute(name, replacement),
                rhs.substitute(name, replacement),
            ),
        }
    }

    /// Substitute every bound name by its value and fold literal arithmetic.
    pub fn bind(&self, bindings: &Bindings) -> Expr {
        let mut out = self.clone();
        for (name, value) in bindings.iter() {
            if out.depends_on(name) {
                out = out.substitute(name, &Expr::num(value));
            }
        }
        out.fold()
    }

    /// Constant-fold literal subtrees. Calls whose literal argument is outside
    /// the function's domain are left in place so evaluation reports them.
    pub fn fold(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(inner) => diff::neg(inner.fold()),
            Expr::Call(f, inner) => diff::call(*f, inner.fold()),
            Expr::Binary(op, lhs, rhs) => diff::binary(*op, lhs.fold(), rhs.fold()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Call(..) => ATOM_PRECEDENCE,
            Expr::Neg(_) => NEG_PRECEDENCE,
            Expr::Binary(op, ..) => op.precedence(),
        }
    }
}

fn write_number(f: &mut fmt::Formatter<'_>, value: f64) -> fmt::Result {
    let plain = format!("{value}");
    if plain.len() > 20 {
        write!(f, "{value:e}")
    } else {
        f.write_str(&plain)
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write_number(f, *c),
            Expr::Var(name) => f.write_str(name),
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
            Expr::Neg(inner) => {
                f.write_str("-")?;
                let wrap = inner.precedence() <= NEG_PRECEDENCE;
                write_wrapped(f, inner, wrap)
            }
            Expr::Binary(op, lhs, rhs) => {
                let p = op.precedence();
                let wrap_lhs = match op {
                    BinOp::Pow => lhs.precedence() <= p,
                    _ => lhs.precedence() < p,
                };
                let wrap_rhs = match op {
                    BinOp::Pow => rhs.precedence() <= NEG_PRECEDENCE,
                    _ => rhs.precedence() <= p || rhs.precedence() == NEG_PRECEDENCE,
                };
                write_wrapped(f, lhs, wrap_lhs)?;
                f.write_str(op.symbol())?;
                write_wrapped(f, rhs, wrap_rhs)
            }
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printing_uses_minimal_parentheses() {
        for (src, printed) in [
            ("(a*s+b)/c", "(a*s + b)/c"),
            ("-u^2", "-u^2"),
            ("(-u)^2", "(-u)^2"),
            ("2^3^2", "2^3^2"),
            ("(2^3)^2", "(2^3)^2"),
            ("u^-1", "u^(-1)"),
            ("a-(b-c)", "a - (b - c)"),
            ("a-b-c", "a - b - c"),
            ("a/(b*c)", "a/(b*c)"),
            ("-(a*b)", "-(a*b)"),
            ("exp(a-s)", "exp(a - s)"),
            ("- - u", "-(-u)"),
        ] {
            assert_eq!(parse(src).unwrap().to_string(), printed, "{src}");
        }
    }

    #[test]
    fn num_keeps_literals_non_negative() {
        assert_eq!(Expr::num(-2.0), Expr::Neg(Box::new(Expr::Const(2.0))));
        assert_eq!(Expr::num(-0.0), Expr::Const(0.0));
        assert_eq!(Expr::num(-2.0).as_const(), Some(-2.0));
        assert_eq!(
            parse(&Expr::num(1e-300).to_string()).unwrap(),
            Expr::num(1e-300)
        );
    }

    #[test]
    fn free_names_and_bind() {
        let e = parse("(a*s+b)/c").unwrap();
        let names: Vec<_> = e.free_names().into_iter().collect();
        assert_eq!(names, ["a", "b", "c", "s"]);
        let bound = e.bind(&Bindings::from_pairs([("a", 1.0), ("b", 0.0), ("c", 2.0)]));
        assert_eq!(bound.free_names().into_iter().collect::<Vec<_>>(), ["s"]);
        assert_eq!(bound.eval(&("s", 4.0)).unwrap(), 2.0);
    }

    #[test]
    fn bind_negative_parameter_round_trips() {
        let e = parse("x^m")
            .unwrap()
            .bind(&Bindings::from_pairs([("m", -1.0)]));
        assert_eq!(e.to_string(), "x^(-1)");
        assert_eq!(parse(&e.to_string()).unwrap(), e);
    }
}
