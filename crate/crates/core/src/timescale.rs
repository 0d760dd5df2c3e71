//! Time scales as finite unions of closed intervals.
//!
//! A [`TimeScale`] is stored as sorted, strictly disjoint closed segments;
//! isolated points are degenerate segments `[c, c]`. Every structural query
//! (jump operators, graininess, gaps, partitions) compares stored endpoints
//! exactly, so constructors are the only place coordinates are created.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper bound on the number of times a working partition may hold.
pub const MAX_PARTITION_POINTS: u64 = 1 << 28;

/// One building block of a scale spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Piece {
    Interval([f64; 2]),
    Point(f64),
    Qscale(QScale),
}

/// Quantum scale `{q^k : kmin <= k <= kmax}`, optionally with `0`.
///
/// The full quantum scale accumulates at zero; `kmin` truncates that tail,
/// leaving a single gap `(0, q^kmin)` when zero is included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QScale {
    pub q: f64,
    pub kmin: i32,
    pub kmax: i32,
    #[serde(default)]
    pub include_zero: bool,
}

impl QScale {
    pub fn point(&self, k: i32) -> f64 {
        self.q.powi(k)
    }
}

/// The JSON scale-spec document: `{"pieces": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleSpec {
    pub pieces: Vec<Piece>,
}

impl ScaleSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed scale spec: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn build(&self) -> Result<TimeScale> {
        TimeScale::canonicalize(&self.pieces)
    }
}

/// Maximal open interval `(s_minus, s_plus)` missing from the scale whose
/// endpoints both belong to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapInterval {
    pub s_minus: f64,
    pub s_plus: f64,
}

impl GapInterval {
    pub fn length(&self) -> f64 {
        self.s_plus - self.s_minus
    }
}

/// A nonempty closed subset of `[0, inf)` held as sorted disjoint segments.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeScale {
    segments: Vec<(f64, f64)>,
}

impl TimeScale {
    /// Sorts and merges scale pieces into canonical segments.
    pub fn canonicalize(pieces: &[Piece]) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::EmptyScale);
        }
        let mut raw: Vec<(f64, f64)> = Vec::new();
        for piece in pieces {
            match *piece {
                Piece::Interval([a, b]) => {
                    check_coord(a)?;
                    check_coord(b)?;
                    if a > b {
                        return Err(Error::ReversedInterval(a, b));
                    }
                    raw.push((a, b));
                }
                Piece::Point(c) => {
                    check_coord(c)?;
                    raw.push((c, c));
                }
                Piece::Qscale(qs) => {
                    if !qs.q.is_finite() || qs.q <= 1.0 {
                        return Err(Error::InvalidQ(qs.q));
                    }
                    if qs.kmin > qs.kmax {
                        return Err(Error::InvalidExponentRange(qs.kmin, qs.kmax));
                    }
                    if qs.include_zero {
                        raw.push((0.0, 0.0));
                    }
                    for k in qs.kmin..=qs.kmax {
                        let p = qs.point(k);
                        check_coord(p)?;
                        raw.push((p, p));
                    }
                }
            }
        }
        raw.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut segments: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match segments.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => segments.push((a, b)),
            }
        }
        Ok(Self { segments })
    }

    /// A single closed interval `[a, b]`.
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::canonicalize(&[Piece::Interval([a, b])])
    }

    pub fn qscale(q: f64, kmin: i32, kmax: i32, include_zero: bool) -> Result<Self> {
        Self::canonicalize(&[Piece::Qscale(QScale {
            q,
            kmin,
            kmax,
            include_zero,
        })])
    }

    pub fn segments(&self) -> &[(f64, f64)] {
        &self.segments
    }

    pub fn min(&self) -> f64 {
        self.segments[0].0
    }

    pub fn max(&self) -> f64 {
        self.segments[self.segments.len() - 1].1
    }

    /// True when every segment is a single point.
    pub fn is_discrete(&self) -> bool {
        self.segments.iter().all(|&(a, b)| a == b)
    }

    /// Index of the segment containing `t`.
    fn locate(&self, t: f64) -> Option<usize> {
        // first segment whose right end is >= t
        let i = self.segments.partition_point(|&(_, b)| b < t);
        match self.segments.get(i) {
            Some(&(a, _)) if a <= t => Some(i),
            _ => None,
        }
    }

    fn locate_member(&self, t: f64) -> Result<usize> {
        self.locate(t).ok_or(Error::NotInScale(t))
    }

    pub fn contains(&self, t: f64) -> bool {
        self.locate(t).is_some()
    }

    /// Forward jump: the least member above `t`, or `t` at the maximum.
    pub fn sigma(&self, t: f64) -> Result<f64> {
        let i = self.locate_member(t)?;
        let (_, b) = self.segments[i];
        if t < b {
            Ok(t)
        } else {
            Ok(self.segments.get(i + 1).map_or(t, |s| s.0))
        }
    }

    /// Backward jump: the greatest member below `t`, or `t` at the minimum.
    pub fn rho(&self, t: f64) -> Result<f64> {
        let i = self.locate_member(t)?;
        let (a, _) = self.segments[i];
        if t > a || i == 0 {
            Ok(t)
        } else {
            Ok(self.segments[i - 1].1)
        }
    }

    /// Graininess `sigma(t) - t`.
    pub fn mu(&self, t: f64) -> Result<f64> {
        Ok(self.sigma(t)? - t)
    }

    /// Greatest member of the scale not exceeding `t` (any real `t`).
    pub fn sup_le(&self, t: f64) -> Result<f64> {
        let min = self.min();
        if t.is_nan() || t < min {
            return Err(Error::BelowScale { t, min });
        }
        let i = self.segments.partition_point(|&(a, _)| a <= t) - 1;
        Ok(t.min(self.segments[i].1))
    }

    /// Every gap of the scale, left to right.
    pub fn gaps(&self) -> impl Iterator<Item = GapInterval> + '_ {
        self.segments.windows(2).map(|w| GapInterval {
            s_minus: w[0].1,
            s_plus: w[1].0,
        })
    }

    /// Gaps lying inside `(t1, t2)` for members `t1 <= t2`.
    pub fn gaps_between(&self, t1: f64, t2: f64) -> Result<Vec<GapInterval>> {
        self.locate_member(t1)?;
        self.locate_member(t2)?;
        if t1 > t2 {
            return Err(Error::InvalidRange { t1, t2 });
        }
        Ok(self
            .gaps()
            .filter(|g| g.s_minus >= t1 && g.s_plus <= t2)
            .collect())
    }

    /// Builds the level-`n` working partition of `[t1, t2]`.
    ///
    /// Every gap endpoint in the window is kept. Each dense stretch of length
    /// `L` is cut into `ceil(L) * 2^n` equal steps, so steps never exceed
    /// `2^-n` and level `n + 1` contains every time of level `n` bitwise.
    pub fn partition(&self, t1: f64, t2: f64, level: u32) -> Result<WorkingPartition> {
        let first = self.locate_member(t1)?;
        let last = self.locate_member(t2)?;
        if t1 >= t2 {
            return Err(Error::InvalidRange { t1, t2 });
        }
        let per_unit = 2f64.powi(level as i32);

        let mut total: u64 = 1;
        for &(a, b) in &self.segments[first..=last] {
            let (lo, hi) = (a.max(t1), b.min(t2));
            total += 1 + dense_steps(hi - lo, per_unit);
        }
        if total > MAX_PARTITION_POINTS {
            return Err(Error::PartitionTooLarge(total, MAX_PARTITION_POINTS));
        }

        let mut times = Vec::with_capacity(total as usize);
        let mut labels = Vec::with_capacity(total as usize);
        for (idx, &(a, b)) in self.segments[first..=last].iter().enumerate() {
            let (lo, hi) = (a.max(t1), b.min(t2));
            if idx > 0 {
                labels.push(Class::Gap);
            }
            times.push(lo);
            let steps = dense_steps(hi - lo, per_unit);
            if steps > 0 {
                let len = hi - lo;
                let m = steps as f64;
                for j in 1..steps {
                    times.push(lo + len * (j as f64 / m));
                    labels.push(Class::Dense);
                }
                times.push(hi);
                labels.push(Class::Dense);
            }
        }
        Ok(WorkingPartition {
            times,
            labels,
            level,
        })
    }
}

fn dense_steps(len: f64, per_unit: f64) -> u64 {
    if len > 0.0 {
        (len.ceil() * per_unit) as u64
    } else {
        0
    }
}

fn check_coord(x: f64) -> Result<()> {
    if !x.is_finite() {
        Err(Error::NonFinite)
    } else if x < 0.0 {
        Err(Error::NegativeCoordinate(x))
    } else {
        Ok(())
    }
}

impl fmt::Display for TimeScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, &(a, b)) in self.segments.iter().enumerate() {
            if i > 0 {
                f.write_str(" U ")?;
            }
            if a == b {
                write!(f, "{{{a}}}")?;
            } else {
                write!(f, "[{a}, {b}]")?;
            }
        }
        Ok(())
    }
}

/// Subinterval class in a working partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Class {
    /// Class (a): inside a dense stretch, length at most `2^-n`.
    Dense,
    /// Class (b): exactly one gap of the scale.
    Gap,
}

/// Refinement grid over `[t1, t2]` with one class label per subinterval.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkingPartition {
    times: Vec<f64>,
    labels: Vec<Class>,
    level: u32,
}

impl WorkingPartition {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `labels()[i]` classifies `(times[i], times[i + 1])`.
    pub fn labels(&self) -> &[Class] {
        &self.labels
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Position of an exact partition time.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let i = self.times.partition_point(|&s| s < t);
        match self.times.get(i) {
            Some(&s) if s == t => Ok(i),
            _ => Err(Error::NotPartitionTime(t)),
        }
    }

    /// Index range of subintervals covering `[t1, t2]`.
    pub fn span(&self, t1: f64, t2: f64) -> Result<(usize, usize)> {
        let i = self.index_of(t1)?;
        let j = self.index_of(t2)?;
        if i > j {
            return Err(Error::InvalidRange { t1, t2 });
        }
        Ok((i, j))
    }

    /// Gap subintervals of the partition, as gaps of the scale.
    pub fn gaps(&self) -> impl Iterator<Item = (usize, GapInterval)> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == Class::Gap)
            .map(|(i, _)| {
                (
                    i,
                    GapInterval {
                        s_minus: self.times[i],
                        s_plus: self.times[i + 1],
                    },
                )
            })
    }
}
