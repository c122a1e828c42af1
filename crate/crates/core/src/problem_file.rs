//! Plain-text problem description, one `key = value` per line.
//!
//! ```text
//! # u_t + u·u_x = 0 with u(x, 0) = (a·x + b)/c
//! f = "0"
//! g = "u"
//! h = "(a*s + b)/c"
//! param.a = 1
//! param.b = 0
//! param.c = 1
//! u_domain = [-10, 10]
//! s_domain = [-5, 5]
//! tol = 1e-5
//! ```
//!
//! `f`, `g`, `h` are required and quoted. Optional scalars: `tol` (residual
//! verdict threshold), `n_scan`, and the normalization `u_ref`, `phi_ref`,
//! `v_ref`, `ell_ref`. Blank lines and lines starting with `#` are ignored.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::solver::Problem;
use crate::Interval;

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::ProblemFile {
        line,
        message: message.into(),
    }
}

fn number(line: usize, key: &str, raw: &str) -> Result<f64> {
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(err(
            line,
            format!("`{key}` expects a finite number, got `{raw}`"),
        )),
    }
}

fn interval(line: usize, key: &str, raw: &str) -> Result<Interval> {
    let inner = raw
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| err(line, format!("`{key}` expects [lo, hi]")))?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    let [lo, hi] = parts[..] else {
        return Err(err(line, format!("`{key}` expects exactly two bounds")));
    };
    Interval::new(number(line, key, lo)?, number(line, key, hi)?)
        .map_err(|e| err(line, format!("`{key}`: {e}")))
}

fn quoted(line: usize, key: &str, raw: &str) -> Result<crate::Expr> {
    let inner = raw
        .strip_prefix('"')
        .and_then(|r| r.strip_suffix('"'))
        .filter(|r| !r.contains('"'))
        .ok_or_else(|| err(line, format!("`{key}` expects a double-quoted expression")))?;
    crate::parse(inner).map_err(|e| err(line, format!("`{key}`: {e}")))
}

pub fn parse_problem(text: &str) -> Result<Problem> {
    let mut exprs = [None, None, None];
    let mut seen = HashSet::new();
    let mut problem = Problem::new(
        crate::Expr::num(0.0),
        crate::Expr::num(0.0),
        crate::Expr::num(0.0),
    );
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| err(line, "expected `key = value`"))?;
        if !seen.insert(key.to_string()) {
            return Err(err(line, format!("duplicate key `{key}`")));
        }
        let norm = &mut problem.normalization;
        match key {
            "f" => exprs[0] = Some(quoted(line, key, value)?),
            "g" => exprs[1] = Some(quoted(line, key, value)?),
            "h" => exprs[2] = Some(quoted(line, key, value)?),
            "u_domain" => problem.u_domain = Some(interval(line, key, value)?),
            "s_domain" => problem.s_domain = Some(interval(line, key, value)?),
            "tol" => {
                let tol = number(line, key, value)?;
                if tol <= 0.0 {
                    return Err(err(line, "`tol` must be positive"));
                }
                problem.settings.residual_tol = tol;
            }
            "n_scan" => {
                problem.settings.n_scan = value
                    .parse::<usize>()
                    .ok()
                    .filter(|&n| n >= 2)
                    .ok_or_else(|| err(line, "`n_scan` expects an integer >= 2"))?;
            }
            "u_ref" => norm.u_ref = Some(number(line, key, value)?),
            "phi_ref" => norm.phi_ref = number(line, key, value)?,
            "v_ref" => norm.v_ref = Some(number(line, key, value)?),
            "ell_ref" => norm.ell_ref = number(line, key, value)?,
            _ => match key.strip_prefix("param.") {
                Some(name) if is_identifier(name) => {
                    if matches!(name, "u" | "s" | "x" | "t") {
                        return Err(err(
                            line,
                            format!("`{name}` is reserved and cannot be a parameter"),
                        ));
                    }
                    problem.params.set(name, number(line, key, value)?);
                }
                _ => return Err(err(line, format!("unknown key `{key}`"))),
            },
        }
    }
    let last = text.lines().count().max(1);
    let [f, g, h] = exprs;
    problem.f = f.ok_or_else(|| err(last, "missing required key `f`"))?;
    problem.g = g.ok_or_else(|| err(last, "missing required key `g`"))?;
    problem.h = h.ok_or_else(|| err(last, "missing required key `h`"))?;
    problem.bind()?;
    Ok(problem)
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn load(path: &Path) -> Result<Problem> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    parse_problem(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RATIONAL: &str = r#"
# rational profile
f = "0"
g = "u"
h = "(a*s + b)/c"
param.a = 1
param.b = 0
param.c = 1
s_domain = [-5, 5]
tol = 1e-6
"#;

    #[test]
    fn parses_full_file() {
        let p = parse_problem(RATIONAL).unwrap();
        assert!(p.is_homogeneous());
        assert_eq!(p.params.get("c"), Some(1.0));
        assert_eq!(p.s_domain, Some(Interval::new(-5.0, 5.0).unwrap()));
        assert_eq!(p.settings.residual_tol, 1e-6);
        assert_eq!(p.bind().unwrap().h.to_string(), "s");
    }

    #[test]
    fn normalization_keys() {
        let p = parse_problem(
            "f = \"u^2\"\ng = \"3*u^2\"\nh = \"3*s\"\nu_domain = [0.05, 20]\nu_ref = 1\nphi_ref = -1\nv_ref = -1\nell_ref = 3\nn_scan = 512",
        )
        .unwrap();
        assert_eq!(p.normalization.u_ref, Some(1.0));
        assert_eq!(p.normalization.ell_ref, 3.0);
        assert_eq!(p.settings.n_scan, 512);
    }

    fn line_of(text: &str) -> usize {
        match parse_problem(text) {
            Err(Error::ProblemFile { line, .. }) => line,
            other => panic!("expected a line error, got {other:?}"),
        }
    }

    #[test]
    fn errors_cite_lines() {
        assert_eq!(line_of("f = \"0\"\ng = \"u\"\nh = \"s\"\ncolour = 3"), 4);
        assert_eq!(line_of("f = \"0\"\n# c\ng = \"u +\"\nh = \"s\""), 3);
        assert_eq!(line_of("f = 0\ng = \"u\"\nh = \"s\""), 1);
        assert_eq!(
            line_of("f = \"0\"\ng = \"u\"\nh = \"s\"\nu_domain = [1, 0]"),
            4
        );
        assert_eq!(line_of("f = \"0\"\ng = \"u\"\nh = \"s\"\ntol = abc"), 4);
        assert_eq!(line_of("f = \"0\"\nf = \"1\""), 2);
        assert_eq!(line_of("f = \"0\"\ng = \"u\""), 2);
        assert_eq!(line_of("f = \"0\"\ng = \"u\"\nh = \"s\"\nparam.u = 1"), 4);
        assert_eq!(line_of("just text"), 1);
    }

    #[test]
    fn unbound_parameter_rejected() {
        let e = parse_problem("f = \"0\"\ng = \"u\"\nh = \"k*s\"").unwrap_err();
        assert!(e.to_string().contains("`k`"));
    }
}
