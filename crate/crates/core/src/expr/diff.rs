use super::{Expr, Func, Var};

/// Symbolic partial derivative of `e` with respect to `v`.
///
/// Results are folded: constant subtrees collapse, and `0*u`, `1*u`,
/// `u + 0`, `u - 0`, `u/1`, `u^0`, `u^1` reduce.
pub fn diff(e: &Expr, v: Var) -> Expr {
    match e {
        Expr::Const(_) => Expr::Const(0.0),
        Expr::Var(w) => Expr::Const(if *w == v { 1.0 } else { 0.0 }),
        Expr::Add(a, b) => add(diff(a, v), diff(b, v)),
        Expr::Sub(a, b) => sub(diff(a, v), diff(b, v)),
        Expr::Mul(a, b) => add(
            mul(diff(a, v), (**b).clone()),
            mul((**a).clone(), diff(b, v)),
        ),
        Expr::Div(a, b) => {
            let da = diff(a, v);
            let db = diff(b, v);
            if is_zero(&db) {
                return div(da, (**b).clone());
            }
            div(
                sub(mul(da, (**b).clone()), mul((**a).clone(), db)),
                pow((**b).clone(), 2),
            )
        }
        Expr::Pow(a, k) => match k {
            0 => Expr::Const(0.0),
            k => mul(
                mul(Expr::Const(*k as f64), pow((**a).clone(), k - 1)),
                diff(a, v),
            ),
        },
        Expr::Call(f, a) => {
            let inner = diff(a, v);
            if is_zero(&inner) {
                return Expr::Const(0.0);
            }
            let outer = match f {
                Func::Exp => e.clone(),
                Func::Sin => Expr::Call(Func::Cos, a.clone()),
                Func::Cos => sub(Expr::Const(0.0), Expr::Call(Func::Sin, a.clone())),
                Func::Log => return div(inner, (**a).clone()),
            };
            mul(outer, inner)
        }
    }
}

fn is_zero(e: &Expr) -> bool {
    e.as_const() == Some(0.0)
}

fn is_one(e: &Expr) -> bool {
    e.as_const() == Some(1.0)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x - y),
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => Expr::Const(x * y),
        _ if is_zero(&a) || is_zero(&b) => Expr::Const(0.0),
        _ if is_one(&a) => b,
        _ if is_one(&b) => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        // c/0 is left unfolded so evaluation reports the domain error
        (Some(x), Some(y)) if y != 0.0 => Expr::Const(x / y),
        _ if is_one(&b) => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, k: u32) -> Expr {
    match k {
        0 => Expr::Const(1.0),
        1 => a,
        _ => match a.as_const() {
            Some(c) => Expr::Const(c.powi(k as i32)),
            None => Expr::Pow(Box::new(a), k),
        },
    }
}
