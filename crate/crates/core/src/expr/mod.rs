//! Test-function expressions `f(t, x)`.
//!
//! A small arithmetic language with a recursive-descent [`parse`]r, an
//! evaluator and symbolic differentiation ([`diff`]). Simplification is
//! limited to constant folding and identity elimination.

mod diff;
mod parser;

use std::fmt;

use crate::error::{Error, Result};

pub use diff::diff;
pub use parser::{parse, ParseError};

/// Functions exercised by the derivative checks and the acceptance suite.
pub const CATALOG: &[&str] = &[
    "x",
    "x^2",
    "t*x",
    "exp(x)",
    "sin(t*x)",
    "x^3 - 2*t*x",
    "t^2*cos(x)",
    "log(1 + x^2)",
    "exp(0.5*t)*x/(1 + x^2)",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    T,
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Log,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Log => "log",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "log" => Func::Log,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn constant(c: f64) -> Self {
        Expr::Const(c)
    }

    pub fn var(v: Var) -> Self {
        Expr::Var(v)
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    /// Whether `v` occurs anywhere in the tree.
    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.depends_on(v) || b.depends_on(v)
            }
            Expr::Pow(a, _) | Expr::Call(_, a) => a.depends_on(v),
        }
    }

    /// Evaluates at `(t, x)`; log of a non-positive value or division by
    /// zero reports the offending node.
    pub fn eval(&self, t: f64, x: f64) -> Result<f64> {
        Ok(match self {
            Expr::Const(c) => *c,
            Expr::Var(Var::T) => t,
            Expr::Var(Var::X) => x,
            Expr::Add(a, b) => a.eval(t, x)? + b.eval(t, x)?,
            Expr::Sub(a, b) => a.eval(t, x)? - b.eval(t, x)?,
            Expr::Mul(a, b) => a.eval(t, x)? * b.eval(t, x)?,
            Expr::Div(a, b) => {
                let num = a.eval(t, x)?;
                let den = b.eval(t, x)?;
                if den == 0.0 {
                    return Err(domain(self, "division by zero"));
                }
                num / den
            }
            Expr::Pow(a, k) => powu(a.eval(t, x)?, *k),
            Expr::Call(f, a) => {
                let v = a.eval(t, x)?;
                match f {
                    Func::Exp => v.exp(),
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Log => {
                        if v <= 0.0 || v.is_nan() {
                            return Err(domain(self, "log of a non-positive value"));
                        }
                        v.ln()
                    }
                }
            }
        })
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Pow(..) => 4,
            Expr::Const(c) if c.is_sign_negative() => 1,
            _ => 5,
        }
    }
}

fn domain(node: &Expr, reason: &'static str) -> Error {
    Error::Domain {
        node: node.to_string(),
        reason,
    }
}

fn powu(base: f64, k: u32) -> f64 {
    match k {
        0 => 1.0,
        1 => base,
        2 => base * base,
        k if k <= i32::MAX as u32 => base.powi(k as i32),
        k => base.powf(k as f64),
    }
}

fn fmt_const(c: f64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    // `{:?}` is the shortest round-trip form; strip the trailing ".0" for
    // integral values to keep printed functions readable.
    let s = format!("{c:?}");
    match s.strip_suffix(".0") {
        Some(int) => f.write_str(int),
        None => f.write_str(&s),
    }
}

impl fmt::Display for Expr {
    /// Prints with minimal parentheses; re-parsing yields the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |e: &Expr, min: u8, f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if e.precedence() < min {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        match self {
            Expr::Const(c) => fmt_const(*c, f),
            Expr::Var(Var::T) => f.write_str("t"),
            Expr::Var(Var::X) => f.write_str("x"),
            Expr::Add(a, b) => {
                child(a, 1, f)?;
                f.write_str(" + ")?;
                child(b, 2, f)
            }
            Expr::Sub(a, b) => {
                child(a, 1, f)?;
                f.write_str(" - ")?;
                child(b, 2, f)
            }
            Expr::Mul(a, b) => {
                child(a, 2, f)?;
                f.write_str("*")?;
                child(b, 3, f)
            }
            Expr::Div(a, b) => {
                child(a, 2, f)?;
                f.write_str("/")?;
                child(b, 3, f)
            }
            Expr::Pow(a, k) => {
                child(a, 5, f)?;
                write!(f, "^{k}")
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// A test function with the partial derivatives the Ito machinery needs.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    pub f: Expr,
    pub f_t: Expr,
    pub f_x: Expr,
    pub f_xx: Expr,
}

impl FunctionSpec {
    pub fn new(f: Expr) -> Self {
        let f_t = diff(&f, Var::T);
        let f_x = diff(&f, Var::X);
        let f_xx = diff(&f_x, Var::X);
        Self { f, f_t, f_x, f_xx }
    }

    pub fn parse(source: &str) -> Result<Self> {
        Ok(Self::new(parse(source)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, t: f64, x: f64) -> Result<f64> {
        parse(src).unwrap().eval(t, x)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(ev("x^2", 123.0, 3.0).unwrap(), 9.0);
        assert_eq!(ev("t*x", 2.0, 0.5).unwrap(), 1.0);
        assert_eq!(ev("-x^2", 0.0, 3.0).unwrap(), -9.0);
        assert_eq!(ev("2^10", 0.0, 0.0).unwrap(), 1024.0);
    }

    #[test]
    fn eval_domain_errors_name_the_node() {
        match ev("1 + log(x)", 0.0, -1.0) {
            Err(Error::Domain { node, .. }) => assert_eq!(node, "log(x)"),
            other => panic!("unexpected {other:?}"),
        }
        match ev("t/(x - 1)", 0.0, 1.0) {
            Err(Error::Domain { node, reason }) => {
                assert_eq!(node, "t/(x - 1)");
                assert_eq!(reason, "division by zero");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn printing() {
        for (src, printed) in [
            ("t*x + sin(x)", "t*x + sin(x)"),
            ("x - (t - x)", "x - (t - x)"),
            ("(x + t)^2", "(x + t)^2"),
            ("-3*x", "(-3)*x"),
            ("-3 + x", "-3 + x"),
            ("x*(-3)", "x*(-3)"),
            ("x/(t*x)", "x/(t*x)"),
            ("0.5*x", "0.5*x"),
        ] {
            assert_eq!(parse(src).unwrap().to_string(), printed, "{src}");
        }
    }

    #[test]
    fn function_spec_partials() {
        let fs = FunctionSpec::parse("t*x^2").unwrap();
        assert_eq!(fs.f_t.to_string(), "x^2");
        assert_eq!(fs.f_x.to_string(), "t*(2*x)");
        assert_eq!(fs.f_xx.to_string(), "t*2");
        assert_eq!(fs.f_xx.eval(3.0, 9.0).unwrap(), 6.0);
    }

    #[test]
    fn catalog_parses() {
        for src in CATALOG {
            let fs = FunctionSpec::parse(src).unwrap();
            assert!(fs.f.eval(1.0, 0.5).unwrap().is_finite());
        }
    }

    #[test]
    fn depends_on() {
        let e = parse("exp(t) + 1").unwrap();
        assert!(e.depends_on(Var::T));
        assert!(!e.depends_on(Var::X));
    }
}
