use thiserror::Error;

use super::{BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at position {position}")]
pub struct ParseError {
    /// Byte offset into the source text.
    pub position: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("unexpected {found}, expected {expected}")]
    UnexpectedToken {
        found: String,
        expected: &'static str,
    },
    #[error("unexpected end of input")]
    UnexpectedEnd,
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("function `{0}` needs parenthesised argument")]
    MissingCallParens(String),
    #[error("unclosed `(`")]
    UnclosedParen,
    #[error("unmatched `)`")]
    UnmatchedParen,
    #[error("malformed number `{0}`")]
    BadNumber(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Name(String),
    Op(char),
    LParen,
    RParen,
}

impl Token {
    fn describe(&self) -> String {
        match self {
            Token::Number(n) => format!("number {n}"),
            Token::Name(n) => format!("name `{n}`"),
            Token::Op(c) => format!("`{c}`"),
            Token::LParen => "`(`".into(),
            Token::RParen => "`)`".into(),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>, ParseError> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let value: f64 = text.parse().map_err(|_| ParseError {
                position: start,
                kind: ParseErrorKind::BadNumber(text.into()),
            })?;
            if !value.is_finite() {
                return Err(ParseError {
                    position: start,
                    kind: ParseErrorKind::BadNumber(text.into()),
                });
            }
            tokens.push((start, Token::Number(value)));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            tokens.push((start, Token::Name(src[start..i].to_owned())));
            continue;
        }
        let token = match c {
            '+' | '-' | '*' | '/' | '^' => Token::Op(c),
            '(' => Token::LParen,
            ')' => Token::RParen,
            _ => {
                let ch = src[start..].chars().next().unwrap_or(c);
                return Err(ParseError {
                    position: start,
                    kind: ParseErrorKind::UnexpectedChar(ch),
                });
            }
        };
        tokens.push((start, token));
        i += 1;
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            position: self.offset(),
            kind,
        }
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Token::Op(c)) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c) = self.eat_op(&['+', '-']) {
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::binary(op, lhs, self.term()?);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.eat_op(&['*', '/']) {
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::binary(op, lhs, self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.eat_op(&['-', '+']) {
            Some('-') => Ok(Expr::Neg(Box::new(self.unary()?))),
            Some(_) => self.unary(),
            None => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat_op(&['^']).is_some() {
            return Ok(Expr::binary(BinOp::Pow, base, self.unary()?));
        }
        Ok(base)
    }

    fn parenthesised(&mut self) -> Result<Expr, ParseError> {
        let open = self.offset();
        self.pos += 1;
        let inner = self.expr()?;
        match self.peek() {
            Some(Token::RParen) => {
                self.pos += 1;
                Ok(inner)
            }
            None => Err(ParseError {
                position: open,
                kind: ParseErrorKind::UnclosedParen,
            }),
            Some(other) => Err(self.error(ParseErrorKind::UnexpectedToken {
                found: other.describe(),
                expected: "`)`",
            })),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(token) = self.peek().cloned() else {
            return Err(self.error(ParseErrorKind::UnexpectedEnd));
        };
        match token {
            Token::Number(n) => {
                self.pos += 1;
                Ok(Expr::Const(n))
            }
            Token::LParen => self.parenthesised(),
            Token::Name(name) => {
                let at = self.offset();
                self.pos += 1;
                let called = matches!(self.peek(), Some(Token::LParen));
                match (Func::from_name(&name), called) {
                    (Some(func), true) => Ok(Expr::call(func, self.parenthesised()?)),
                    (Some(_), false) => Err(ParseError {
                        position: at,
                        kind: ParseErrorKind::MissingCallParens(name),
                    }),
                    (None, true) => Err(ParseError {
                        position: at,
                        kind: ParseErrorKind::UnknownFunction(name),
                    }),
                    (None, false) => Ok(Expr::Var(name)),
                }
            }
            Token::RParen => Err(self.error(ParseErrorKind::UnmatchedParen)),
            Token::Op(_) => Err(self.error(ParseErrorKind::UnexpectedToken {
                found: token.describe(),
                expected: "operand",
            })),
        }
    }
}

/// Parse an infix expression.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut parser = Parser {
        tokens: tokenize(text)?,
        pos: 0,
        end: text.len(),
    };
    let expr = parser.expr()?;
    match parser.peek() {
        None => Ok(expr),
        Some(Token::RParen) => Err(parser.error(ParseErrorKind::UnmatchedParen)),
        Some(other) => {
            let found = other.describe();
            Err(parser.error(ParseErrorKind::UnexpectedToken {
                found,
                expected: "operator or end of input",
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(n: &str) -> Expr {
        Expr::var(n)
    }

    #[test]
    fn single_variable() {
        assert_eq!(parse("u").unwrap(), var("u"));
        assert_eq!(parse("  u ").unwrap(), var("u"));
    }

    #[test]
    fn affine_over_constant() {
        let expected = Expr::binary(
            BinOp::Div,
            Expr::binary(
                BinOp::Add,
                Expr::binary(BinOp::Mul, var("a"), var("s")),
                var("b"),
            ),
            var("c"),
        );
        assert_eq!(parse("(a*s+b)/c").unwrap(), expected);
    }

    #[test]
    fn exp_of_difference() {
        let expected = Expr::call(Func::Exp, Expr::binary(BinOp::Sub, var("a"), var("s")));
        assert_eq!(parse("exp(a-s)").unwrap(), expected);
    }

    #[test]
    fn precedence_and_associativity() {
        let pow = |a, b| Expr::binary(BinOp::Pow, a, b);
        let c = Expr::Const;
        assert_eq!(parse("2^3^2").unwrap(), pow(c(2.0), pow(c(3.0), c(2.0))));
        assert_eq!(
            parse("-u^2").unwrap(),
            Expr::Neg(Box::new(pow(var("u"), c(2.0))))
        );
        assert_eq!(
            parse("u^-1").unwrap(),
            pow(var("u"), Expr::Neg(Box::new(c(1.0))))
        );
        assert_eq!(
            parse("-exp(u)").unwrap(),
            Expr::Neg(Box::new(Expr::call(Func::Exp, var("u"))))
        );
        assert_eq!(parse("1.5e-3").unwrap(), c(1.5e-3));
        assert_eq!(parse("+u").unwrap(), var("u"));
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse("u + $").unwrap_err();
        assert_eq!(err.position, 4);
        assert_eq!(err.kind, ParseErrorKind::UnexpectedChar('$'));

        let err = parse("foo(u)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownFunction("foo".into()));
        assert_eq!(err.position, 0);

        let err = parse("(u + 1").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnclosedParen);
        assert_eq!(err.position, 0);

        let err = parse("u + 1)").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnmatchedParen);
        assert_eq!(err.position, 5);

        assert_eq!(
            parse("u +").unwrap_err().kind,
            ParseErrorKind::UnexpectedEnd
        );
        assert_eq!(parse("").unwrap_err().kind, ParseErrorKind::UnexpectedEnd);
        assert!(matches!(
            parse("exp u").unwrap_err().kind,
            ParseErrorKind::MissingCallParens(_)
        ));
        assert!(matches!(
            parse("2 u").unwrap_err().kind,
            ParseErrorKind::UnexpectedToken { .. }
        ));
        assert!(matches!(
            parse("1.2.3").unwrap_err().kind,
            ParseErrorKind::BadNumber(_)
        ));
    }
}
