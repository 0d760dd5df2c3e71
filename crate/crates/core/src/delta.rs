//! Delta integrals, the extension operator and the delta derivative.
//!
//! Both integrals are left-endpoint sums on a working partition. Across a
//! gap the extended integrand is constant, so the gap term is exact; on a
//! dense stretch the sum is the usual Riemann or Ito approximant.

use crate::error::{Error, Result};
use crate::expr::{Expr, FunctionSpec};
use crate::path::PathSample;
use crate::sum::NeumaierSum;
use crate::timescale::{TimeScale, WorkingPartition};

/// Value of the extension of `g` at any real `t`: `g(sup [0, t]_T)`.
pub fn extend_value<F>(ts: &TimeScale, g: F, t: f64) -> Result<f64>
where
    F: FnOnce(f64) -> f64,
{
    Ok(g(ts.sup_le(t)?))
}

/// Evaluates `e(s_i, W(s_i))` at every time of the path.
pub fn sample_integrand(e: &Expr, path: &PathSample) -> Result<Vec<f64>> {
    path.times()
        .iter()
        .zip(path.values())
        .map(|(&t, &w)| e.eval(t, w))
        .collect()
}

fn check_len(g: &[f64], p: &WorkingPartition) -> Result<()> {
    if g.len() != p.len() {
        return Err(Error::TableLength {
            expected: p.len(),
            got: g.len(),
        });
    }
    Ok(())
}

/// `sum g(s_{i-1}) (s_i - s_{i-1})` over the subintervals of `[t1, t2]`.
pub fn delta_time_integral(g: &[f64], p: &WorkingPartition, t1: f64, t2: f64) -> Result<f64> {
    check_len(g, p)?;
    let (i, j) = p.span(t1, t2)?;
    let times = p.times();
    let mut acc = NeumaierSum::new();
    for k in i..j {
        acc.add(g[k] * (times[k + 1] - times[k]));
    }
    Ok(acc.value())
}

/// `sum g(s_{i-1}) (W(s_i) - W(s_{i-1}))` over the subintervals of `[t1, t2]`.
pub fn delta_stochastic_integral(g: &[f64], path: &PathSample, t1: f64, t2: f64) -> Result<f64> {
    check_len(g, path.partition())?;
    let (i, j) = path.partition().span(t1, t2)?;
    let mut acc = NeumaierSum::new();
    for k in i..j {
        acc.add(g[k] * path.increment(k));
    }
    Ok(acc.value())
}

/// Delta derivative in `t` of `f(t, x)`.
///
/// Right-scattered points use the forward difference quotient across the
/// jump; right-dense points (including the scale maximum) use `f_t`.
pub fn delta_derivative(fs: &FunctionSpec, ts: &TimeScale, t: f64, x: f64) -> Result<f64> {
    let next = ts.sigma(t)?;
    if next > t {
        Ok((fs.f.eval(next, x)? - fs.f.eval(t, x)?) / (next - t))
    } else {
        fs.f_t.eval(t, x)
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::path::{sample_path, RngConfig};
    use crate::timescale::Piece;

    fn two_blocks() -> TimeScale {
        TimeScale::canonicalize(&[Piece::Interval([0.0, 1.0]), Piece::Interval([2.0, 3.0])])
            .unwrap()
    }

    #[test]
    fn extension_freezes_across_gaps() {
        let ts = two_blocks();
        assert_eq!(extend_value(&ts, |s| s, 1.5).unwrap(), 1.0);
        assert_eq!(extend_value(&ts, |s| s, 2.25).unwrap(), 2.25);
        let q = TimeScale::qscale(2.0, -20, 3, true).unwrap();
        assert_eq!(extend_value(&q, |s| s, 3.0).unwrap(), 2.0);
        let shifted = TimeScale::interval(1.0, 2.0).unwrap();
        assert!(extend_value(&shifted, |s| s, 0.5).is_err());
    }

    #[test]
    fn time_integral_of_one_is_length() {
        let ts = two_blocks();
        let p = ts.partition(0.0, 3.0, 4).unwrap();
        let ones = vec![1.0; p.len()];
        assert_eq!(delta_time_integral(&ones, &p, 0.0, 3.0).unwrap(), 3.0);
    }

    #[test]
    fn time_integral_across_a_gap_uses_the_left_value() {
        let p = two_blocks().partition(0.0, 3.0, 3).unwrap();
        let g: Vec<f64> = p.times().to_vec();
        assert_eq!(delta_time_integral(&g, &p, 1.0, 2.0).unwrap(), 1.0);
    }

    #[test]
    fn time_integral_on_qscale() {
        let q = TimeScale::qscale(2.0, 0, 3, false).unwrap();
        let p = q.partition(1.0, 8.0, 0).unwrap();
        let g: Vec<f64> = p.times().to_vec();
        assert_eq!(delta_time_integral(&g, &p, 1.0, 8.0).unwrap(), 21.0);
    }

    #[test]
    fn time_integral_rejects_foreign_endpoints() {
        let p = two_blocks().partition(0.0, 3.0, 1).unwrap();
        let g = vec![0.0; p.len()];
        assert_eq!(
            delta_time_integral(&g, &p, 0.3, 3.0),
            Err(Error::NotPartitionTime(0.3))
        );
        assert!(delta_time_integral(&g[1..], &p, 0.0, 3.0).is_err());
    }

    #[test]
    fn stochastic_integral_basics() {
        let p = Arc::new(two_blocks().partition(0.0, 3.0, 6).unwrap());
        let path = sample_path(p.clone(), RngConfig::new(2, 3));
        let ones = vec![1.0; p.len()];
        let zeros = vec![0.0; p.len()];
        let (w1, w2) = (path.value_at(0.5).unwrap(), path.value_at(2.5).unwrap());
        assert_eq!(delta_stochastic_integral(&ones, &path, 0.5, 2.5).unwrap(), w2 - w1);
        assert_eq!(delta_stochastic_integral(&zeros, &path, 0.0, 3.0).unwrap(), 0.0);
        assert!(delta_stochastic_integral(&ones, &path, 0.0, 1.7).is_err());
    }

    #[test]
    fn stochastic_integral_of_w_on_discrete_scale() {
        // sum W dW = (W2^2 - W1^2)/2 - sum (dW)^2 / 2
        let q = TimeScale::qscale(2.0, -6, 3, true).unwrap();
        let p = Arc::new(q.partition(0.0, 8.0, 0).unwrap());
        for id in 0..50 {
            let path = sample_path(p.clone(), RngConfig::new(9, id));
            let w = path.values();
            let ito = delta_stochastic_integral(w, &path, 0.0, 8.0).unwrap();
            let qv: f64 = (0..w.len() - 1).map(|i| path.increment(i).powi(2)).sum();
            let oracle = 0.5 * (w[w.len() - 1].powi(2) - w[0].powi(2)) - 0.5 * qv;
            assert!((ito - oracle).abs() < 1e-12, "{ito} vs {oracle}");
        }
    }

    #[test]
    fn delta_derivative_examples() {
        let q = TimeScale::qscale(2.0, -20, 3, true).unwrap();
        let sq = FunctionSpec::parse("t^2").unwrap();
        // ((qt)^2 - t^2)/((q - 1)t) = (q + 1)t
        assert_eq!(delta_derivative(&sq, &q, 4.0, 0.0).unwrap(), 12.0);
        let unit = TimeScale::interval(0.0, 1.0).unwrap();
        assert_eq!(delta_derivative(&sq, &unit, 0.25, 0.0).unwrap(), 0.5);
        // scale maximum takes the dense branch
        assert_eq!(delta_derivative(&sq, &unit, 1.0, 0.0).unwrap(), 2.0);
        let c = FunctionSpec::parse("3").unwrap();
        assert_eq!(delta_derivative(&c, &q, 2.0, 1.0).unwrap(), 0.0);
        assert_eq!(delta_derivative(&c, &unit, 0.5, 1.0).unwrap(), 0.0);
        assert!(delta_derivative(&c, &unit, 1.5, 1.0).is_err());
    }

    #[test]
    fn simple_useful_formula_at_scattered_points() {
        let ts = TimeScale::canonicalize(&[
            Piece::Interval([0.0, 1.0]),
            Piece::Point(1.5),
            Piece::Qscale(crate::timescale::QScale {
                q: 1.7,
                kmin: 2,
                kmax: 5,
                include_zero: false,
            }),
        ])
        .unwrap();
        for src in crate::expr::CATALOG {
            let fs = FunctionSpec::parse(src).unwrap();
            for &(_, b) in ts.segments() {
                let mu = ts.mu(b).unwrap();
                if mu == 0.0 {
                    continue;
                }
                let x = 0.3;
                let lhs = fs.f.eval(ts.sigma(b).unwrap(), x).unwrap();
                let rhs = fs.f.eval(b, x).unwrap() + mu * delta_derivative(&fs, &ts, b, x).unwrap();
                assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), "{src} at {b}");
            }
        }
    }

    #[test]
    fn left_sums_approach_finest_level_monotonically() {
        let ts = TimeScale::canonicalize(&[Piece::Interval([0.0, 1.0]), Piece::Interval([2.0, 3.0])])
            .unwrap();
        let g = |t: f64| (3.0 * t).sin() + t * t;
        let sum_at = |n: u32| {
            let p = ts.partition(0.0, 3.0, n).unwrap();
            let vals: Vec<f64> = p.times().iter().map(|&t| g(t)).collect();
            delta_time_integral(&vals, &p, 0.0, 3.0).unwrap()
        };
        let reference = sum_at(16);
        let errs: Vec<f64> = (4..=12).map(|n| (sum_at(n) - reference).abs()).collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0], "{errs:?}");
        }
    }
}
