//! Closed-form stochastic exponential `E_A(t, t0) = U * V`.
//!
//! `U` multiplies the jump factors `1 + A(s-) dW` over the gaps in
//! `(t0, t)`, `D` collects the same gaps' first and second order terms,
//! and `V = exp(int A dW - 1/2 int A^2 ds - D)` carries the dense part.
//! The closed form is checked against the Euler recursion
//! `X(s_i) = X(s_{i-1}) (1 + A(s_{i-1}) dW_i)`.

use serde::{Deserialize, Serialize};

use crate::delta::sample_integrand;
use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::path::PathSample;
use crate::sum::NeumaierSum;
use crate::timescale::GapInterval;

/// Factors with magnitude at or below this are treated as zero.
pub const REGRESSIVITY_TOL: f64 = 1e-12;

/// The process `A`: an expression in `(t, x)` evaluated at `(t, W_t)`, or
/// a table of adapted values at the partition times.
#[derive(Debug, Clone, PartialEq)]
pub enum Coefficient {
    Expr(Expr),
    Table(Vec<f64>),
}

impl Coefficient {
    pub fn parse(source: &str) -> Result<Self> {
        Ok(Coefficient::Expr(crate::expr::parse(source)?))
    }

    pub fn constant(c: f64) -> Self {
        Coefficient::Expr(Expr::Const(c))
    }

    /// True for expressions that ignore the path.
    pub fn is_deterministic(&self) -> bool {
        matches!(self, Coefficient::Expr(e) if !e.depends_on(Var::X))
    }

    /// Values at every partition time of the path.
    pub fn sample(&self, path: &PathSample) -> Result<Vec<f64>> {
        match self {
            Coefficient::Expr(e) => sample_integrand(e, path),
            Coefficient::Table(v) => {
                if v.len() != path.times().len() {
                    return Err(Error::TableLength {
                        expected: path.times().len(),
                        got: v.len(),
                    });
                }
                Ok(v.clone())
            }
        }
    }
}

/// Jump factor of one gap and the literally printed regressivity quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressivityEntry {
    pub gap: GapInterval,
    /// `1 + A(s-) (W(s+) - W(s-))`, the factor entering `U`.
    pub factor: f64,
    /// `(1 + A(s-)) (W(s+) - W(s-))`.
    pub printed: f64,
    pub pass: bool,
}

/// Per-gap subintervals of the path inside `[t0, t]`, with indices.
fn gaps_in(path: &PathSample, t0: f64, t: f64) -> Result<Vec<(usize, GapInterval)>> {
    let (lo, hi) = path.partition().span(t0, t)?;
    Ok(path
        .partition()
        .gaps()
        .filter(|(i, _)| *i >= lo && *i < hi)
        .collect())
}

/// Checks every gap factor in `(t0, t)` for regressivity.
pub fn regressivity_check(
    a: &Coefficient,
    path: &PathSample,
    t0: f64,
    t: f64,
) -> Result<Vec<RegressivityEntry>> {
    let av = a.sample(path)?;
    Ok(gaps_in(path, t0, t)?
        .into_iter()
        .map(|(i, gap)| {
            let dw = path.increment(i);
            let factor = 1.0 + av[i] * dw;
            RegressivityEntry {
                gap,
                factor,
                printed: (1.0 + av[i]) * dw,
                pass: factor.abs() > REGRESSIVITY_TOL,
            }
        })
        .collect())
}

fn correction_parts(av: &[f64], path: &PathSample, gaps: &[(usize, GapInterval)]) -> (f64, f64) {
    let mut first = NeumaierSum::new();
    let mut second = NeumaierSum::new();
    for &(i, gap) in gaps {
        first.add(av[i] * path.increment(i));
        second.add(av[i] * av[i] * gap.length());
    }
    (first.value(), second.value())
}

/// `D = sum A(s-) dW - 1/2 sum A(s-)^2 (s+ - s-)` over gaps in `(t0, t)`.
pub fn correction_d(a: &Coefficient, path: &PathSample, t0: f64, t: f64) -> Result<f64> {
    let av = a.sample(path)?;
    let (first, second) = correction_parts(&av, path, &gaps_in(path, t0, t)?);
    Ok(first - 0.5 * second)
}

/// `U = prod (1 + A(s-) dW)` over gaps in `(t0, t)`.
pub fn gap_product_u(a: &Coefficient, path: &PathSample, t0: f64, t: f64) -> Result<f64> {
    let av = a.sample(path)?;
    product_u(&av, path, &gaps_in(path, t0, t)?)
}

fn product_u(av: &[f64], path: &PathSample, gaps: &[(usize, GapInterval)]) -> Result<f64> {
    let mut u = 1.0;
    for &(i, gap) in gaps {
        let factor = 1.0 + av[i] * path.increment(i);
        if factor.abs() <= REGRESSIVITY_TOL {
            return Err(Error::NotRegressive {
                s_minus: gap.s_minus,
                s_plus: gap.s_plus,
                factor,
            });
        }
        u *= factor;
    }
    Ok(u)
}

/// Exponent `int A dW - 1/2 int A^2 ds` over `[t0, t]` on the path.
fn girsanov_exponent(av: &[f64], path: &PathSample, t0: f64, t: f64) -> Result<(f64, f64)> {
    let (lo, hi) = path.partition().span(t0, t)?;
    let times = path.times();
    let mut stoch = NeumaierSum::new();
    let mut quad = NeumaierSum::new();
    for i in lo..hi {
        stoch.add(av[i] * path.increment(i));
        quad.add(av[i] * av[i] * (times[i + 1] - times[i]));
    }
    Ok((stoch.value(), quad.value()))
}

/// Computes `int A dW` and `int A^2 ds` for a coefficient.
pub(crate) fn exponent_parts(a: &Coefficient, path: &PathSample, t0: f64, t: f64) -> Result<(f64, f64)> {
    girsanov_exponent(&a.sample(path)?, path, t0, t)
}

/// `V = exp(int A dW - 1/2 int A^2 ds - D)`.
pub fn exponential_v(a: &Coefficient, path: &PathSample, t0: f64, t: f64) -> Result<f64> {
    let av = a.sample(path)?;
    Ok(v_parts(&av, path, t0, t)?.1.exp())
}

/// Returns `(D, log V)`; gap terms are summed in the same order as the
/// full integrals, so on a purely discrete scale `log V` is exactly zero.
fn v_parts(av: &[f64], path: &PathSample, t0: f64, t: f64) -> Result<(f64, f64)> {
    let (stoch, quad) = girsanov_exponent(av, path, t0, t)?;
    let (first, second) = correction_parts(av, path, &gaps_in(path, t0, t)?);
    let d = first - 0.5 * second;
    Ok((d, (stoch - 0.5 * quad) - d))
}

/// Closed form `U * V`.
pub fn stoch_exp_closed(a: &Coefficient, path: &PathSample, t0: f64, t: f64) -> Result<f64> {
    Ok(exponential_report(a, path, t0, t)?.closed_form)
}

/// Euler realization of `E = 1 + int A E dW`, returned at every partition
/// time in `[t0, t]`.
pub fn stoch_exp_recursive_path(a: &Coefficient, path: &PathSample, t0: f64, t: f64) -> Result<Vec<f64>> {
    let av = a.sample(path)?;
    let (lo, hi) = path.partition().span(t0, t)?;
    let mut x = 1.0;
    let mut out = Vec::with_capacity(hi - lo + 1);
    out.push(x);
    for i in lo..hi {
        x *= 1.0 + av[i] * path.increment(i);
        out.push(x);
    }
    Ok(out)
}

pub fn stoch_exp_recursive(a: &Coefficient, path: &PathSample, t0: f64, t: f64) -> Result<f64> {
    let xs = stoch_exp_recursive_path(a, path, t0, t)?;
    Ok(xs[xs.len() - 1])
}

/// Closed form, recursion and their parts on one path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentialReport {
    pub u: f64,
    pub d: f64,
    pub v: f64,
    pub closed_form: f64,
    pub recursive: f64,
    pub rel_error: f64,
}

pub fn exponential_report(a: &Coefficient, path: &PathSample, t0: f64, t: f64) -> Result<ExponentialReport> {
    let av = a.sample(path)?;
    let gaps = gaps_in(path, t0, t)?;
    let u = product_u(&av, path, &gaps)?;
    let (d, log_v) = v_parts(&av, path, t0, t)?;
    let v = log_v.exp();
    let closed_form = u * v;
    let recursive = stoch_exp_recursive(&Coefficient::Table(av), path, t0, t)?;
    Ok(ExponentialReport {
        u,
        d,
        v,
        closed_form,
        recursive,
        rel_error: (recursive - closed_form) / closed_form,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::path::{sample_path, RngConfig};
    use crate::timescale::{Piece, TimeScale};

    fn discrete_path(values: Vec<f64>, points: &[f64]) -> PathSample {
        let pieces: Vec<Piece> = points.iter().map(|&p| Piece::Point(p)).collect();
        let ts = TimeScale::canonicalize(&pieces).unwrap();
        let p = Arc::new(ts.partition(points[0], *points.last().unwrap(), 0).unwrap());
        PathSample::from_values(p, values, RngConfig::new(0, 0)).unwrap()
    }

    #[test]
    fn correction_d_examples() {
        let one = Coefficient::constant(1.0);
        let path = discrete_path(vec![0.0, 0.5], &[1.0, 2.0]);
        assert_eq!(correction_d(&one, &path, 1.0, 2.0).unwrap(), 0.0);
        assert_eq!(correction_d(&Coefficient::constant(0.0), &path, 1.0, 2.0).unwrap(), 0.0);
        let dense = Arc::new(TimeScale::interval(0.0, 1.0).unwrap().partition(0.0, 1.0, 4).unwrap());
        let bm = sample_path(dense, RngConfig::new(1, 1));
        assert_eq!(correction_d(&one, &bm, 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn gap_product_examples() {
        let one = Coefficient::constant(1.0);
        let single = discrete_path(vec![0.0, -0.4], &[1.0, 2.0]);
        assert!((gap_product_u(&one, &single, 1.0, 2.0).unwrap() - 0.6).abs() < 1e-15);
        let double = discrete_path(vec![0.0, 0.5, 0.3], &[1.0, 2.0, 3.0]);
        assert!((gap_product_u(&one, &double, 1.0, 3.0).unwrap() - 1.2).abs() < 1e-15);
        let dense = Arc::new(TimeScale::interval(0.0, 1.0).unwrap().partition(0.0, 1.0, 4).unwrap());
        let bm = sample_path(dense, RngConfig::new(1, 1));
        assert_eq!(gap_product_u(&one, &bm, 0.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn zero_factor_is_not_regressive() {
        let one = Coefficient::constant(1.0);
        let path = discrete_path(vec![0.0, -1.0], &[1.0, 2.0]);
        assert!(matches!(
            gap_product_u(&one, &path, 1.0, 2.0),
            Err(Error::NotRegressive { .. })
        ));
        let entries = regressivity_check(&one, &path, 1.0, 2.0).unwrap();
        assert_eq!(entries.len(), 1);
        assert!(!entries[0].pass);
        assert_eq!(entries[0].printed, -2.0);
        let zero = Coefficient::constant(0.0);
        assert!(regressivity_check(&zero, &path, 1.0, 2.0).unwrap()[0].pass);
    }

    #[test]
    fn v_is_one_on_discrete_scales() {
        let ts = TimeScale::qscale(2.0, -10, 3, true).unwrap();
        let p = Arc::new(ts.partition(0.0, 8.0, 0).unwrap());
        let a = Coefficient::parse("0.5 + sin(t) - 0.2*x").unwrap();
        for id in 0..100 {
            let path = sample_path(p.clone(), RngConfig::new(3, id));
            assert_eq!(exponential_v(&a, &path, 0.0, 8.0).unwrap(), 1.0);
            let r = exponential_report(&a, &path, 0.0, 8.0).unwrap();
            assert_eq!(r.closed_form, r.u);
            assert!((r.closed_form - r.recursive).abs() <= 1e-12 * r.closed_form.abs().max(1.0));
        }
    }

    #[test]
    fn dense_interval_gives_doleans_dade() {
        let p = Arc::new(TimeScale::interval(0.0, 1.0).unwrap().partition(0.0, 1.0, 10).unwrap());
        let one = Coefficient::constant(1.0);
        for id in 0..20 {
            let path = sample_path(p.clone(), RngConfig::new(4, id));
            let w1 = path.value_at(1.0).unwrap();
            let r = exponential_report(&one, &path, 0.0, 1.0).unwrap();
            assert_eq!(r.u, 1.0);
            assert_eq!(r.d, 0.0);
            assert!((r.closed_form - (w1 - 0.5).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_coefficient_gives_one() {
        let ts = TimeScale::canonicalize(&[Piece::Interval([0.0, 1.0]), Piece::Point(2.0)]).unwrap();
        let p = Arc::new(ts.partition(0.0, 2.0, 5).unwrap());
        let zero = Coefficient::constant(0.0);
        let path = sample_path(p, RngConfig::new(2, 9));
        let r = exponential_report(&zero, &path, 0.0, 2.0).unwrap();
        assert_eq!((r.u, r.v, r.closed_form, r.recursive), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn table_coefficient_must_match_partition() {
        let path = discrete_path(vec![0.0, 0.5], &[1.0, 2.0]);
        let bad = Coefficient::Table(vec![1.0]);
        assert!(matches!(bad.sample(&path), Err(Error::TableLength { .. })));
        let ok = Coefficient::Table(vec![1.0, 7.0]);
        assert!((gap_product_u(&ok, &path, 1.0, 2.0).unwrap() - 1.5).abs() < 1e-15);
    }
}
