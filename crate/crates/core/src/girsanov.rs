//! Girsanov reweighting on time scales.
//!
//! Under the weight `G = exp(int A dW - 1/2 int A^2 ds)` the shifted
//! process `B = W - int A ds` should be a Brownian motion on the scale.
//! [`measure_change_test`] checks that claim through weighted moments of
//! the increments of `B`, each compared with its target at three standard
//! errors.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{summarize, Summary};
use crate::path::{sample_path, PathSample, RngConfig};
use crate::stoch_exp::{exponent_parts, Coefficient};
use crate::sum::NeumaierSum;
use crate::timescale::TimeScale;

/// Novikov exponents above this are reported as overflow.
pub const NOVIKOV_EXPONENT_LIMIT: f64 = 700.0;

/// Acceptance band, in standard errors, for every moment test.
pub const SE_BAND: f64 = 3.0;

/// `B(s_i) = W(s_i) - int_{s_0}^{s_i} A ds` at every partition time.
pub fn shifted_path(a: &Coefficient, path: &PathSample) -> Result<Vec<f64>> {
    let av = a.sample(path)?;
    let times = path.times();
    let w = path.values();
    let mut drift = NeumaierSum::new();
    let mut out = Vec::with_capacity(w.len());
    out.push(w[0]);
    for i in 1..w.len() {
        drift.add(av[i - 1] * (times[i] - times[i - 1]));
        out.push(w[i] - drift.value());
    }
    Ok(out)
}

/// Girsanov density `G_A(t, t0)` on one path.
pub fn girsanov_density(a: &Coefficient, path: &PathSample, t0: f64, t: f64) -> Result<f64> {
    let (stoch, quad) = exponent_parts(a, path, t0, t)?;
    Ok((stoch - 0.5 * quad).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NovikovValue {
    pub exponent: f64,
    pub value: f64,
    pub overflow: bool,
}

/// `exp(int_{t0}^{t} A^2 ds)` for a deterministic `A`.
pub fn novikov_value(a: &Coefficient, ts: &TimeScale, t0: f64, t: f64, level: u32) -> Result<NovikovValue> {
    let Coefficient::Expr(e) = a else {
        return Err(Error::NotDeterministic);
    };
    if !a.is_deterministic() {
        return Err(Error::NotDeterministic);
    }
    let p = ts.partition(t0, t, level)?;
    let times = p.times();
    let mut acc = NeumaierSum::new();
    for i in 0..times.len() - 1 {
        let v = e.eval(times[i], 0.0)?;
        acc.add(v * v * (times[i + 1] - times[i]));
    }
    let exponent = acc.value();
    let overflow = exponent > NOVIKOV_EXPONENT_LIMIT;
    Ok(NovikovValue {
        exponent,
        value: if overflow { f64::INFINITY } else { exponent.exp() },
        overflow,
    })
}

/// Configuration of a reweighting experiment.
#[derive(Debug, Clone)]
pub struct MeasureChangeConfig {
    pub coefficient: Coefficient,
    pub t0: f64,
    pub t_end: f64,
    pub level: u32,
    pub paths: u64,
    pub seed: u64,
}

/// Weighted moments of one increment of `B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementMoments {
    pub from: f64,
    pub to: f64,
    pub target_m2: f64,
    pub weighted_mean: f64,
    pub se_mean: f64,
    pub weighted_m2: f64,
    pub se_m2: f64,
    pub pass_mean: bool,
    pub pass_m2: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureChangeReport {
    pub n: u32,
    pub n_paths: u64,
    pub seed: u64,
    pub t0: f64,
    pub t_end: f64,
    /// Weighted mean of `B(t_end) - B(t0)`, target 0.
    pub weighted_mean: f64,
    pub se_mean: f64,
    /// Weighted second moment of `B(t_end) - B(t0)`.
    pub weighted_m2: f64,
    pub se_m2: f64,
    pub target_m2: f64,
    pub mean_weight: f64,
    pub se_weight: f64,
    /// Unweighted second moment of `W(t_end) - W(t0)`: confirms the target.
    pub oracle_m2: f64,
    pub se_oracle_m2: f64,
    /// Unweighted mean of the `B` increment; must fail when `A` is nonzero.
    pub control_mean: f64,
    pub se_control: f64,
    pub pass_weight: bool,
    pub pass_mean: bool,
    pub pass_m2: bool,
    pub pass_oracle: bool,
    /// True when the unweighted control is rejected (or `A` is zero).
    pub pass_control: bool,
    pub increments: Vec<IncrementMoments>,
}

impl MeasureChangeReport {
    pub fn passed(&self) -> bool {
        self.pass_weight
            && self.pass_mean
            && self.pass_m2
            && self.pass_oracle
            && self.pass_control
            && self.increments.iter().all(|m| m.pass_mean && m.pass_m2)
    }
}

fn within(s: &Summary, target: f64) -> bool {
    (s.mean - target).abs() <= SE_BAND * s.se
}

struct PathStats {
    weight: f64,
    w_incr: f64,
    b_incrs: Vec<f64>,
}

/// Checkpoints of the increment table: window ends plus every segment
/// endpoint inside the window.
fn checkpoints(ts: &TimeScale, t0: f64, t_end: f64) -> Vec<f64> {
    let mut cps = vec![t0];
    for &(a, b) in ts.segments() {
        for c in [a, b] {
            if c > t0 && c < t_end && cps.last() != Some(&c) {
                cps.push(c);
            }
        }
    }
    cps.push(t_end);
    cps
}

/// Simulates under the original measure and tests the reweighted moments.
pub fn measure_change_test(ts: &TimeScale, cfg: &MeasureChangeConfig) -> Result<MeasureChangeReport> {
    if cfg.paths < 2 {
        return Err(Error::Config("measure change test needs at least 2 paths".into()));
    }
    let partition = Arc::new(ts.partition(cfg.t0, cfg.t_end, cfg.level)?);
    let cps = checkpoints(ts, cfg.t0, cfg.t_end);
    let cp_idx = cps
        .iter()
        .map(|&c| partition.index_of(c))
        .collect::<Result<Vec<_>>>()?;

    let stats: Vec<PathStats> = (0..cfg.paths)
        .into_par_iter()
        .map(|id| {
            let path = sample_path(partition.clone(), RngConfig::new(cfg.seed, id));
            let weight = girsanov_density(&cfg.coefficient, &path, cfg.t0, cfg.t_end)?;
            let b = shifted_path(&cfg.coefficient, &path)?;
            let w = path.values();
            Ok(PathStats {
                weight,
                w_incr: w[w.len() - 1] - w[0],
                b_incrs: cp_idx.windows(2).map(|p| b[p[1]] - b[p[0]]).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let total = |s: &PathStats| s.b_incrs.iter().copied().collect::<NeumaierSum>().value();
    let weights = summarize(stats.iter().map(|s| s.weight));
    let mean = summarize(stats.iter().map(|s| s.weight * total(s)));
    let m2 = summarize(stats.iter().map(|s| s.weight * total(s).powi(2)));
    let oracle = summarize(stats.iter().map(|s| s.w_incr.powi(2)));
    let control = summarize(stats.iter().map(total));
    let target_m2 = cfg.t_end - cfg.t0;

    let increments = cps
        .windows(2)
        .enumerate()
        .map(|(k, c)| {
            let mean = summarize(stats.iter().map(|s| s.weight * s.b_incrs[k]));
            let m2 = summarize(stats.iter().map(|s| s.weight * s.b_incrs[k].powi(2)));
            let target = c[1] - c[0];
            IncrementMoments {
                from: c[0],
                to: c[1],
                target_m2: target,
                weighted_mean: mean.mean,
                se_mean: mean.se,
                weighted_m2: m2.mean,
                se_m2: m2.se,
                pass_mean: within(&mean, 0.0),
                pass_m2: within(&m2, target),
            }
        })
        .collect();

    let trivial = matches!(&cfg.coefficient, Coefficient::Expr(e) if e.as_const() == Some(0.0));
    Ok(MeasureChangeReport {
        n: cfg.level,
        n_paths: cfg.paths,
        seed: cfg.seed,
        t0: cfg.t0,
        t_end: cfg.t_end,
        weighted_mean: mean.mean,
        se_mean: mean.se,
        weighted_m2: m2.mean,
        se_m2: m2.se,
        target_m2,
        mean_weight: weights.mean,
        se_weight: weights.se,
        oracle_m2: oracle.mean,
        se_oracle_m2: oracle.se,
        control_mean: control.mean,
        se_control: control.se,
        pass_weight: within(&weights, 1.0),
        pass_mean: within(&mean, 0.0),
        pass_m2: within(&m2, target_m2),
        pass_oracle: within(&oracle, target_m2),
        pass_control: trivial || !within(&control, 0.0),
        increments,
    })
}
