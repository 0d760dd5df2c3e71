//! Both sides of the time-scale Ito formula, and the delta SDE solver.
//!
//! For `f(t, W_t)` the right-hand side is
//!
//! ```text
//! int f^Delta ds + int f_x dW + 1/2 int f_xx ds
//!   + sum over gaps (s-, s+) of
//!     f(s+, W(s+)) - f(s+, W(s-)) - f_x(s-, W(s-)) dW - 1/2 f_xx(s-, W(s-)) ds
//! ```
//!
//! with every integral a left-endpoint sum on the path's partition. On a
//! purely discrete scale the identity telescopes exactly; on dense
//! stretches the residual is the quadratic-variation error of the grid.

use serde::{Deserialize, Serialize};

use crate::delta::delta_derivative;
use crate::error::{Error, Result};
use crate::expr::{Expr, FunctionSpec};
use crate::path::PathSample;
use crate::sum::NeumaierSum;
use crate::timescale::{GapInterval, TimeScale};

/// Coefficients of `dX = b(t, X) dt + s(t, X) dW` and the initial value.
#[derive(Debug, Clone, PartialEq)]
pub struct SdeSpec {
    pub drift: Expr,
    pub diffusion: Expr,
    pub x0: f64,
}

impl SdeSpec {
    pub fn parse(drift: &str, diffusion: &str, x0: f64) -> Result<Self> {
        Ok(Self {
            drift: crate::expr::parse(drift)?,
            diffusion: crate::expr::parse(diffusion)?,
            x0,
        })
    }
}

/// One gap's contribution to the correction sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapCorrection {
    pub gap: GapInterval,
    pub value: f64,
}

/// The two sides of an Ito identity on one path.
///
/// `rhs` is the sum of the four component fields in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItoReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// `int f^Delta ds`, `int b f^Delta ds` (as_printed), or
    /// `int (f^Delta + b f_x) ds` (substituted).
    pub time_term: f64,
    pub stochastic_term: f64,
    pub second_order_term: f64,
    pub correction_sum: f64,
    pub corrections: Vec<GapCorrection>,
}

impl ItoReport {
    fn assemble(
        lhs: f64,
        time_term: f64,
        stochastic_term: f64,
        second_order_term: f64,
        corrections: Vec<GapCorrection>,
    ) -> Self {
        let correction_sum = corrections
            .iter()
            .map(|c| c.value)
            .collect::<NeumaierSum>()
            .value();
        let rhs = time_term + stochastic_term + second_order_term + correction_sum;
        Self {
            lhs,
            rhs,
            residual: lhs - rhs,
            time_term,
            stochastic_term,
            second_order_term,
            correction_sum,
            corrections,
        }
    }
}

/// Correction term of a single gap for `f(t, W_t)`.
pub fn gap_correction(fs: &FunctionSpec, gap: GapInterval, path: &PathSample) -> Result<f64> {
    let w_minus = path.value_at(gap.s_minus)?;
    let w_plus = path.value_at(gap.s_plus)?;
    gap_bracket(fs, gap, w_minus, w_plus, 1.0)
}

/// `f(s+, v+) - f(s+, v-) - k f_x(s-, v-)(v+ - v-) - 1/2 k^2 f_xx(s-, v-)(s+ - s-)`.
fn gap_bracket(fs: &FunctionSpec, gap: GapInterval, v_minus: f64, v_plus: f64, k: f64) -> Result<f64> {
    let (sm, sp) = (gap.s_minus, gap.s_plus);
    Ok(fs.f.eval(sp, v_plus)? - fs.f.eval(sp, v_minus)?
        - k * fs.f_x.eval(sm, v_minus)? * (v_plus - v_minus)
        - 0.5 * k * k * fs.f_xx.eval(sm, v_minus)? * (sp - sm))
}

fn gap_corrections<F>(path: &PathSample, lo: usize, hi: usize, mut bracket: F) -> Result<Vec<GapCorrection>>
where
    F: FnMut(usize, GapInterval) -> Result<f64>,
{
    path.partition()
        .gaps()
        .filter(|(i, _)| *i >= lo && *i < hi)
        .map(|(i, gap)| {
            Ok(GapCorrection {
                gap,
                value: bracket(i, gap)?,
            })
        })
        .collect()
}

/// Evaluates both sides of the Ito formula for `f(t, W_t)` on `[t1, t2]`.
pub fn ito_sides(
    fs: &FunctionSpec,
    ts: &TimeScale,
    path: &PathSample,
    t1: f64,
    t2: f64,
) -> Result<ItoReport> {
    let (lo, hi) = path.partition().span(t1, t2)?;
    let times = path.times();
    let w = path.values();

    let mut time_term = NeumaierSum::new();
    let mut stoch_term = NeumaierSum::new();
    let mut second = NeumaierSum::new();
    for i in lo..hi {
        let (s, x) = (times[i], w[i]);
        let ds = times[i + 1] - s;
        time_term.add(delta_derivative(fs, ts, s, x)? * ds);
        stoch_term.add(fs.f_x.eval(s, x)? * path.increment(i));
        second.add(fs.f_xx.eval(s, x)? * ds);
    }
    let corrections = gap_corrections(path, lo, hi, |i, gap| {
        gap_bracket(fs, gap, w[i], w[i + 1], 1.0)
    })?;
    let lhs = fs.f.eval(t2, w[hi])? - fs.f.eval(t1, w[lo])?;
    Ok(ItoReport::assemble(
        lhs,
        time_term.value(),
        stoch_term.value(),
        0.5 * second.value(),
        corrections,
    ))
}

/// Euler solution of the delta SDE, aligned with a slice of the path.
#[derive(Debug, Clone, PartialEq)]
pub struct XPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Solves `X(s_i) = X(s_{i-1}) + b ds + s dW` from `X(t1) = x0` to `t2`.
///
/// Across a gap the frozen coefficients are exactly the delta-integral
/// semantics; on dense stretches this is the Euler approximant.
pub fn euler_delta_sde(sde: &SdeSpec, path: &PathSample, t1: f64, t2: f64) -> Result<XPath> {
    let (lo, hi) = path.partition().span(t1, t2)?;
    let times = &path.times()[lo..=hi];
    let mut values = Vec::with_capacity(times.len());
    let mut x = sde.x0;
    values.push(x);
    for i in lo..hi {
        let s = path.times()[i];
        let ds = path.times()[i + 1] - s;
        x += sde.drift.eval(s, x)? * ds + sde.diffusion.eval(s, x)? * path.increment(i);
        values.push(x);
    }
    Ok(XPath {
        times: times.to_vec(),
        values,
    })
}

/// Reading of the general Ito formula for an SDE solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Time integrand `b f^Delta`, gap brackets evaluated on `W`.
    AsPrinted,
    /// Time integrand `f^Delta + b f_x + 1/2 s^2 f_xx`, gap brackets on `X`.
    Substituted,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::AsPrinted => "as_printed",
            Variant::Substituted => "substituted",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "as_printed" => Ok(Variant::AsPrinted),
            "substituted" => Ok(Variant::Substituted),
            other => Err(Error::Config(format!("unknown variant `{other}`"))),
        }
    }
}

/// Both sides of the general Ito formula for `f(t, X_t)`.
#[allow(clippy::too_many_arguments)]
pub fn general_ito_sides(
    fs: &FunctionSpec,
    ts: &TimeScale,
    sde: &SdeSpec,
    xpath: &XPath,
    path: &PathSample,
    t1: f64,
    t2: f64,
    variant: Variant,
) -> Result<ItoReport> {
    let (lo, hi) = path.partition().span(t1, t2)?;
    if xpath.times.as_slice() != &path.times()[lo..=hi] || xpath.values.len() != xpath.times.len() {
        return Err(Error::MismatchedPaths);
    }
    let times = path.times();
    let w = path.values();
    let x = &xpath.values;

    let mut time_term = NeumaierSum::new();
    let mut stoch_term = NeumaierSum::new();
    let mut second = NeumaierSum::new();
    for i in lo..hi {
        let k = i - lo;
        let (s, xv) = (times[i], x[k]);
        let ds = times[i + 1] - s;
        let b = sde.drift.eval(s, xv)?;
        let sig = sde.diffusion.eval(s, xv)?;
        let f_delta = delta_derivative(fs, ts, s, xv)?;
        let f_x = fs.f_x.eval(s, xv)?;
        match variant {
            Variant::AsPrinted => time_term.add(b * f_delta * ds),
            Variant::Substituted => {
                time_term.add(f_delta * ds);
                time_term.add(b * f_x * ds);
            }
        }
        stoch_term.add(sig * f_x * path.increment(i));
        second.add(sig * sig * fs.f_xx.eval(s, xv)? * ds);
    }

    let corrections = gap_corrections(path, lo, hi, |i, gap| {
        let k = i - lo;
        match variant {
            Variant::AsPrinted => {
                let sig = sde.diffusion.eval(gap.s_minus, w[i])?;
                gap_bracket(fs, gap, w[i], w[i + 1], sig)
            }
            Variant::Substituted => {
                // the diffusion enters through the Euler step, so the first
                // order term uses the full increment of X
                let sig = sde.diffusion.eval(gap.s_minus, x[k])?;
                let (sm, sp) = (gap.s_minus, gap.s_plus);
                Ok(fs.f.eval(sp, x[k + 1])? - fs.f.eval(sp, x[k])?
                    - fs.f_x.eval(sm, x[k])? * (x[k + 1] - x[k])
                    - 0.5 * sig * sig * fs.f_xx.eval(sm, x[k])? * (sp - sm))
            }
        }
    })?;
    let lhs = fs.f.eval(t2, x[x.len() - 1])? - fs.f.eval(t1, x[0])?;
    Ok(ItoReport::assemble(
        lhs,
        time_term.value(),
        stoch_term.value(),
        0.5 * second.value(),
        corrections,
    ))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::path::{sample_path, RngConfig};
    use crate::timescale::{Piece, WorkingPartition};

    fn mixed() -> TimeScale {
        TimeScale::canonicalize(&[
            Piece::Interval([0.0, 1.0]),
            Piece::Point(1.5),
            Piece::Interval([2.0, 3.0]),
        ])
        .unwrap()
    }

    fn gap_path(w1: f64, w2: f64) -> PathSample {
        let ts = TimeScale::canonicalize(&[Piece::Point(1.0), Piece::Point(2.0)]).unwrap();
        let p: Arc<WorkingPartition> = Arc::new(ts.partition(1.0, 2.0, 0).unwrap());
        PathSample::from_values(p, vec![w1, w2], RngConfig::new(0, 0)).unwrap()
    }

    const GAP: GapInterval = GapInterval {
        s_minus: 1.0,
        s_plus: 2.0,
    };

    #[test]
    fn gap_correction_examples() {
        let path = gap_path(0.3, -0.1);
        let sq = FunctionSpec::parse("x^2").unwrap();
        // (dW)^2 - ds = 0.16 - 1
        assert!((gap_correction(&sq, GAP, &path).unwrap() + 0.84).abs() < 1e-15);
        let lin = FunctionSpec::parse("x").unwrap();
        assert_eq!(gap_correction(&lin, GAP, &path).unwrap(), 0.0);
        // f = t x: f(2,-0.1) - f(2,0.3) - 1*(-0.4) = -0.2 - 0.6 + 0.4
        let tx = FunctionSpec::parse("t*x").unwrap();
        assert!((gap_correction(&tx, GAP, &path).unwrap() + 0.4).abs() < 1e-15);
        let missing = GapInterval {
            s_minus: 1.0,
            s_plus: 3.0,
        };
        assert!(gap_correction(&sq, missing, &path).is_err());
    }

    #[test]
    fn linear_f_has_zero_residual() {
        let ts = mixed();
        let fs = FunctionSpec::parse("x").unwrap();
        for n in [0, 3, 7] {
            let p = Arc::new(ts.partition(0.0, 3.0, n).unwrap());
            for id in 0..20 {
                let path = sample_path(p.clone(), RngConfig::new(4, id));
                let r = ito_sides(&fs, &ts, &path, 0.0, 3.0).unwrap();
                assert_eq!(r.residual, 0.0);
                assert_eq!(r.correction_sum, 0.0);
            }
        }
    }

    #[test]
    fn discrete_scale_telescopes() {
        let ts = TimeScale::qscale(2.0, -12, 3, true).unwrap();
        let p = Arc::new(ts.partition(0.0, 8.0, 0).unwrap());
        for src in crate::expr::CATALOG {
            let fs = FunctionSpec::parse(src).unwrap();
            for id in 0..50 {
                let path = sample_path(p.clone(), RngConfig::new(1, id));
                let r = ito_sides(&fs, &ts, &path, 0.0, 8.0).unwrap();
                assert!(r.residual.abs() <= 1e-9, "{src}: {}", r.residual);
                assert_eq!(r.corrections.len(), 16);
            }
        }
    }

    #[test]
    fn report_components_add_up() {
        let ts = mixed();
        let fs = FunctionSpec::parse("t*x^2").unwrap();
        let p = Arc::new(ts.partition(0.0, 3.0, 4).unwrap());
        let path = sample_path(p, RngConfig::new(7, 7));
        let r = ito_sides(&fs, &ts, &path, 0.0, 3.0).unwrap();
        assert_eq!(r.residual, r.lhs - r.rhs);
        assert_eq!(
            r.rhs,
            r.time_term + r.stochastic_term + r.second_order_term + r.correction_sum
        );
        assert_eq!(r.corrections.len(), 2);
    }

    #[test]
    fn euler_examples() {
        let ts = mixed();
        let p = Arc::new(ts.partition(0.0, 3.0, 5).unwrap());
        let path = sample_path(p.clone(), RngConfig::new(3, 1));
        let bm = SdeSpec::parse("0", "1", 0.0).unwrap();
        assert_eq!(euler_delta_sde(&bm, &path, 0.0, 3.0).unwrap().values, path.values());
        let clock = SdeSpec::parse("1", "0", 0.0).unwrap();
        let x = euler_delta_sde(&clock, &path, 1.0, 3.0).unwrap();
        for (t, v) in x.times.iter().zip(&x.values) {
            assert_eq!(*v, t - 1.0);
        }
        let bad = SdeSpec::parse("log(x)", "1", 0.0).unwrap();
        assert!(euler_delta_sde(&bad, &path, 0.0, 3.0).is_err());
    }

    #[test]
    fn euler_on_discrete_scale_is_the_recursion() {
        let ts = TimeScale::qscale(2.0, -4, 2, true).unwrap();
        let p = Arc::new(ts.partition(0.0, 4.0, 0).unwrap());
        let path = sample_path(p, RngConfig::new(2, 2));
        let sde = SdeSpec::parse("-x", "0.5*x + t", 1.0).unwrap();
        let x = euler_delta_sde(&sde, &path, 0.0, 4.0).unwrap();
        let times = path.times();
        let mut expect = 1.0;
        for i in 0..times.len() - 1 {
            assert_eq!(x.values[i], expect);
            let ds = times[i + 1] - times[i];
            expect += -expect * ds + (0.5 * expect + times[i]) * path.increment(i);
        }
        assert_eq!(*x.values.last().unwrap(), expect);
    }

    #[test]
    fn general_formula_reduces_to_brownian_case() {
        let ts = mixed();
        let fs = FunctionSpec::parse("x^2").unwrap();
        let sde = SdeSpec::parse("0", "1", 0.0).unwrap();
        let p = Arc::new(ts.partition(0.0, 3.0, 6).unwrap());
        for id in 0..10 {
            let path = sample_path(p.clone(), RngConfig::new(5, id));
            let x = euler_delta_sde(&sde, &path, 0.0, 3.0).unwrap();
            let base = ito_sides(&fs, &ts, &path, 0.0, 3.0).unwrap();
            for v in [Variant::AsPrinted, Variant::Substituted] {
                let r = general_ito_sides(&fs, &ts, &sde, &x, &path, 0.0, 3.0, v).unwrap();
                assert!((r.residual - base.residual).abs() < 1e-12);
                assert!((r.rhs - base.rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn printed_form_misses_the_drift_of_x() {
        // f = x, b = 1, s = 1: the printed time integrand b f^Delta is 0,
        // so the residual is the drift contribution t2 - t1
        let ts = TimeScale::interval(0.0, 1.0).unwrap();
        let fs = FunctionSpec::parse("x").unwrap();
        let sde = SdeSpec::parse("1", "1", 0.0).unwrap();
        let p = Arc::new(ts.partition(0.0, 1.0, 8).unwrap());
        let path = sample_path(p, RngConfig::new(6, 0));
        let x = euler_delta_sde(&sde, &path, 0.0, 1.0).unwrap();
        let printed = general_ito_sides(&fs, &ts, &sde, &x, &path, 0.0, 1.0, Variant::AsPrinted).unwrap();
        assert!((printed.residual - 1.0).abs() < 1e-12, "{}", printed.residual);
        let subst = general_ito_sides(&fs, &ts, &sde, &x, &path, 0.0, 1.0, Variant::Substituted).unwrap();
        assert!(subst.residual.abs() < 1e-12);
    }

    #[test]
    fn substituted_form_telescopes_on_discrete_scales() {
        let ts = TimeScale::qscale(2.0, -6, 2, true).unwrap();
        let p = Arc::new(ts.partition(0.0, 4.0, 0).unwrap());
        let fs = FunctionSpec::parse("sin(t*x) + x^3").unwrap();
        let sde = SdeSpec::parse("0.3*x - t", "1 + 0.2*x^2", 0.5).unwrap();
        for id in 0..20 {
            let path = sample_path(p.clone(), RngConfig::new(8, id));
            let x = euler_delta_sde(&sde, &path, 0.0, 4.0).unwrap();
            let r = general_ito_sides(&fs, &ts, &sde, &x, &path, 0.0, 4.0, Variant::Substituted).unwrap();
            assert!(r.residual.abs() < 1e-9 * r.lhs.abs().max(1.0), "{}", r.residual);
        }
    }

    #[test]
    fn mismatched_xpath_is_rejected() {
        let ts = mixed();
        let fs = FunctionSpec::parse("x").unwrap();
        let sde = SdeSpec::parse("0", "1", 0.0).unwrap();
        let p = Arc::new(ts.partition(0.0, 3.0, 3).unwrap());
        let path = sample_path(p, RngConfig::new(1, 1));
        let x = euler_delta_sde(&sde, &path, 0.0, 1.0).unwrap();
        assert_eq!(
            general_ito_sides(&fs, &ts, &sde, &x, &path, 0.0, 3.0, Variant::AsPrinted),
            Err(Error::MismatchedPaths)
        );
    }
}
