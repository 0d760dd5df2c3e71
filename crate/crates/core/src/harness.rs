//! Monte-Carlo orchestration and refinement studies.
//!
//! Paths are sampled once at the finest requested level and restricted to
//! the coarser partitions, so every level of a study sees the same
//! trajectories. Work fans out over paths with rayon; results are collected
//! in path order and reduced with compensated sums, which keeps every table
//! bitwise reproducible for a given seed.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::delta::{delta_stochastic_integral, delta_time_integral, sample_integrand};
use crate::error::{Error, Result};
use crate::expr::{Expr, FunctionSpec};
use crate::ito::ito_sides;
use crate::path::{sample_path, PathSample, RngConfig};
use crate::stoch_exp::{exponential_report, Coefficient};
use crate::sum::NeumaierSum;
use crate::timescale::{Class, TimeScale, WorkingPartition};

/// Sample statistics with an unbiased variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub se: f64,
    pub ci95: (f64, f64),
}

pub fn summarize<I: IntoIterator<Item = f64>>(values: I) -> Summary {
    let values: Vec<f64> = values.into_iter().collect();
    let n = values.len();
    let mean = if n == 0 {
        f64::NAN
    } else {
        values.iter().copied().collect::<NeumaierSum>().value() / n as f64
    };
    let variance = if n < 2 {
        f64::NAN
    } else {
        values
            .iter()
            .map(|v| (v - mean).powi(2))
            .collect::<NeumaierSum>()
            .value()
            / (n - 1) as f64
    };
    let se = (variance / n as f64).sqrt();
    Summary {
        n,
        mean,
        variance,
        se,
        ci95: (mean - 1.96 * se, mean + 1.96 * se),
    }
}

/// Root mean square.
pub fn rms<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut n = 0usize;
    let s: NeumaierSum = values
        .into_iter()
        .map(|v| {
            n += 1;
            v * v
        })
        .collect();
    (s.value() / n as f64).sqrt()
}

/// `sum over class-(a) subintervals of f(s, W_s) ((dW)^2 - ds)` in `[t1, t2]`.
pub fn quadratic_variation_statistic(f: &Expr, path: &PathSample, t1: f64, t2: f64) -> Result<f64> {
    let (lo, hi) = path.partition().span(t1, t2)?;
    let times = path.times();
    let w = path.values();
    let labels = path.labels();
    let mut acc = NeumaierSum::new();
    for i in lo..hi {
        if labels[i] == Class::Dense {
            let dw = path.increment(i);
            acc.add(f.eval(times[i], w[i])? * (dw * dw - (times[i + 1] - times[i])));
        }
    }
    Ok(acc.value())
}

/// `sum over class-(a) subintervals of (ds)^2`, the scale of Var V_n.
pub fn dense_square_sum(p: &WorkingPartition, t1: f64, t2: f64) -> Result<f64> {
    let (lo, hi) = p.span(t1, t2)?;
    let times = p.times();
    Ok((lo..hi)
        .filter(|&i| p.labels()[i] == Class::Dense)
        .map(|i| (times[i + 1] - times[i]).powi(2))
        .collect::<NeumaierSum>()
        .value())
}

/// Quantity tracked across refinement levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    /// Left sum of `f(s, W_s) ds`.
    TimeIntegral,
    /// Left sum of `f(s, W_s) dW`.
    StochIntegral,
    /// Quadratic-variation statistic over dense subintervals.
    QuadraticVariation,
    /// Residual of the Ito formula for `f`.
    ItoResidual,
    /// Relative error of the Euler recursion against the closed-form
    /// stochastic exponential with coefficient `A`.
    ExpError,
}

impl Target {
    pub fn name(self) -> &'static str {
        match self {
            Target::TimeIntegral => "time_integral",
            Target::StochIntegral => "stoch_integral",
            Target::QuadraticVariation => "quadratic_variation",
            Target::ItoResidual => "ito_residual",
            Target::ExpError => "exp_error",
        }
    }

    /// Integral targets are measured against the finest level; the others
    /// are errors in their own right.
    pub fn is_integral(self) -> bool {
        matches!(self, Target::TimeIntegral | Target::StochIntegral)
    }
}

impl std::str::FromStr for Target {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('-', "_").as_str() {
            "time_integral" => Target::TimeIntegral,
            "stoch_integral" => Target::StochIntegral,
            "quadratic_variation" => Target::QuadraticVariation,
            "ito_residual" => Target::ItoResidual,
            "exp_error" => Target::ExpError,
            other => return Err(Error::Config(format!("unknown target `{other}`"))),
        })
    }
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub t1: f64,
    pub t2: f64,
    pub levels: Vec<u32>,
    pub paths: u64,
    pub seed: u64,
    /// Integrand or test function.
    pub f: FunctionSpec,
    /// Coefficient for [`Target::ExpError`].
    pub a: Coefficient,
}

impl StudyConfig {
    fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::Config("at least one refinement level is required".into()));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("levels must be strictly increasing".into()));
        }
        if self.paths < 2 {
            return Err(Error::Config("at least 2 paths are required".into()));
        }
        if self.t1 >= self.t2 {
            return Err(Error::InvalidRange {
                t1: self.t1,
                t2: self.t2,
            });
        }
        Ok(())
    }
}

/// One level of a refinement study.
///
/// `mean` and `variance` describe the raw per-path statistic. `rms` is the
/// root-mean-square error: for integral targets the difference to the
/// finest level on the same path, otherwise the statistic itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: u32,
    pub mean: f64,
    pub rms: f64,
    pub variance: f64,
    pub se: f64,
    /// Theoretical variance bound where one applies (quadratic_variation).
    pub bound: Option<f64>,
    pub paths: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub target: Target,
    pub seed: u64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// RMS strictly decreasing across levels (the reference level of an
    /// integral study is excluded).
    pub fn rms_strictly_decreasing(&self) -> bool {
        let rows = if self.target.is_integral() {
            &self.rows[..self.rows.len().saturating_sub(1)]
        } else {
            &self.rows[..]
        };
        rows.windows(2).all(|w| w[1].rms < w[0].rms)
    }
}

/// Samples `paths` trajectories at the finest level and evaluates `stat`
/// on each level's restriction. Returns `values[path][level]`.
pub fn per_level<F>(
    ts: &TimeScale,
    t1: f64,
    t2: f64,
    levels: &[u32],
    paths: u64,
    seed: u64,
    stat: F,
) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&PathSample) -> Result<f64> + Sync,
{
    let partitions = levels
        .iter()
        .map(|&n| ts.partition(t1, t2, n).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    let finest = partitions[partitions.len() - 1].clone();
    (0..paths)
        .into_par_iter()
        .map(|id| {
            let fine = sample_path(finest.clone(), RngConfig::new(seed, id));
            partitions
                .iter()
                .map(|p| {
                    if Arc::ptr_eq(p, &finest) {
                        stat(&fine)
                    } else {
                        stat(&fine.restrict(p.clone())?)
                    }
                })
                .collect()
        })
        .collect()
}

/// Runs a refinement study for `target` on `ts`.
pub fn convergence_study(ts: &TimeScale, target: Target, cfg: &StudyConfig) -> Result<ConvergenceTable> {
    cfg.validate()?;
    let (t1, t2) = (cfg.t1, cfg.t2);
    let fs = &cfg.f;
    let stat = |path: &PathSample| -> Result<f64> {
        match target {
            Target::TimeIntegral => {
                delta_time_integral(&sample_integrand(&fs.f, path)?, path.partition(), t1, t2)
            }
            Target::StochIntegral => {
                delta_stochastic_integral(&sample_integrand(&fs.f, path)?, path, t1, t2)
            }
            Target::QuadraticVariation => quadratic_variation_statistic(&fs.f, path, t1, t2),
            Target::ItoResidual => Ok(ito_sides(fs, ts, path, t1, t2)?.residual),
            Target::ExpError => Ok(exponential_report(&cfg.a, path, t1, t2)?.rel_error),
        }
    };
    let values = per_level(ts, t1, t2, &cfg.levels, cfg.paths, cfg.seed, stat)?;

    // max f^2 over the evaluated path values stands in for max E f^2
    let f_sq_max = if target == Target::QuadraticVariation {
        if fs.f.depends_on(crate::expr::Var::X) {
            max_f_squared(ts, cfg)?
        } else {
            let p = ts.partition(t1, t2, *cfg.levels.last().unwrap())?;
            p.times()
                .iter()
                .map(|&t| fs.f.eval(t, 0.0).map(|v| v * v))
                .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))?
        }
    } else {
        f64::NAN
    };

    let last = cfg.levels.len() - 1;
    let rows = cfg
        .levels
        .iter()
        .enumerate()
        .map(|(k, &n)| -> Result<ConvergenceRow> {
            let s = summarize(values.iter().map(|v| v[k]));
            let rms_val = if target.is_integral() {
                rms(values.iter().map(|v| v[k] - v[last]))
            } else {
                rms(values.iter().map(|v| v[k]))
            };
            let bound = if target == Target::QuadraticVariation {
                let p = ts.partition(t1, t2, n)?;
                let (lo, hi) = p.span(t1, t2)?;
                let dense_len: f64 = (lo..hi)
                    .filter(|&i| p.labels()[i] == Class::Dense)
                    .map(|i| p.times()[i + 1] - p.times()[i])
                    .collect::<NeumaierSum>()
                    .value();
                Some(2f64.powi(-(n as i32 - 1)) * f_sq_max * dense_len)
            } else {
                None
            };
            Ok(ConvergenceRow {
                n,
                mean: s.mean,
                rms: rms_val,
                variance: s.variance,
                se: s.se,
                bound,
                paths: cfg.paths,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable {
        target,
        seed: cfg.seed,
        rows,
    })
}

fn max_f_squared(ts: &TimeScale, cfg: &StudyConfig) -> Result<f64> {
    let n = *cfg.levels.last().unwrap();
    let p = Arc::new(ts.partition(cfg.t1, cfg.t2, n)?);
    let maxima = (0..cfg.paths)
        .into_par_iter()
        .map(|id| {
            let path = sample_path(p.clone(), RngConfig::new(cfg.seed, id));
            sample_integrand(&cfg.f.f, &path).map(|v| v.iter().fold(0.0f64, |m, x| m.max(x * x)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(maxima.into_iter().fold(0.0, f64::max))
}
