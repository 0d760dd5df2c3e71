//! Brownian trajectories on working partitions.
//!
//! Draws come from a counter-based stream: ChaCha8 keyed by `seed`, with
//! `path_id` as the stream number and the step index fixing the word
//! position. Step `k` always consumes words `[4k, 4k + 4)`, so a path is a
//! pure function of `(seed, path_id)` no matter which thread produces it.
//!
//! Path values live on the dyadic lattice `LATTICE * Z`. Sums and
//! differences of lattice values below `2^12` in magnitude are exact in
//! `f64`, which makes telescoping sums of increments bit-exact and lets
//! coarse paths reuse the fine values without any rounding drift.

use std::sync::Arc;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timescale::{Class, WorkingPartition};

/// Spacing of the value lattice, `2^-40`.
pub const LATTICE: f64 = 1.0 / (1u64 << 40) as f64;

const WORDS_PER_STEP: u128 = 4;

/// Provenance of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngConfig {
    pub seed: u64,
    pub path_id: u64,
}

impl RngConfig {
    pub fn new(seed: u64, path_id: u64) -> Self {
        Self { seed, path_id }
    }

    fn stream(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.path_id);
        rng
    }

    /// The standard normal used at step `step`, by random access.
    pub fn normal_at(&self, step: u64) -> f64 {
        let mut rng = self.stream();
        rng.set_word_pos(step as u128 * WORDS_PER_STEP);
        box_muller(&mut rng)
    }

    /// Standard normals for steps `0..count`, sequentially.
    pub fn normals(&self, count: usize) -> impl Iterator<Item = f64> {
        let mut rng = self.stream();
        (0..count).map(move |_| box_muller(&mut rng))
    }
}

fn box_muller(rng: &mut ChaCha8Rng) -> f64 {
    let scale = 1.0 / (1u64 << 53) as f64;
    // u1 in (0, 1], u2 in [0, 1)
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * scale;
    let u2 = (rng.next_u64() >> 11) as f64 * scale;
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Rounds to the nearest lattice point.
#[inline]
pub fn snap(x: f64) -> f64 {
    (x / LATTICE).round() * LATTICE
}

/// Brownian values at the times of a working partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    partition: Arc<WorkingPartition>,
    values: Vec<f64>,
    rng: RngConfig,
}

impl PathSample {
    /// Builds a path from explicit values (tests, replay of dumped paths).
    pub fn from_values(
        partition: Arc<WorkingPartition>,
        values: Vec<f64>,
        rng: RngConfig,
    ) -> Result<Self> {
        if values.len() != partition.len() {
            return Err(Error::TableLength {
                expected: partition.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            partition,
            values,
            rng,
        })
    }

    pub fn partition(&self) -> &WorkingPartition {
        &self.partition
    }

    pub fn shared_partition(&self) -> &Arc<WorkingPartition> {
        &self.partition
    }

    pub fn times(&self) -> &[f64] {
        self.partition.times()
    }

    pub fn labels(&self) -> &[Class] {
        self.partition.labels()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rng(&self) -> RngConfig {
        self.rng
    }

    pub fn value_at(&self, t: f64) -> Result<f64> {
        Ok(self.values[self.partition.index_of(t)?])
    }

    /// `W(s_{i+1}) - W(s_i)`.
    pub fn increment(&self, i: usize) -> f64 {
        self.values[i + 1] - self.values[i]
    }

    /// The same trajectory observed on a coarser partition.
    ///
    /// Every time of `coarse` must be a time of this path; values are
    /// copied, so coarse increments are exact sums of fine increments.
    pub fn restrict(&self, coarse: Arc<WorkingPartition>) -> Result<Self> {
        let values = coarse
            .times()
            .iter()
            .map(|&t| self.value_at(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            partition: coarse,
            values,
            rng: self.rng,
        })
    }
}

/// Samples Brownian motion on `partition`.
///
/// `W(s_0)` is an `N(0, s_0)` draw (zero when `s_0 = 0`), standing for the
/// increment from time 0; step `i >= 1` adds an `N(0, s_i - s_{i-1})` draw.
pub fn sample_path(partition: Arc<WorkingPartition>, rng: RngConfig) -> PathSample {
    let times = partition.times();
    let mut values = Vec::with_capacity(times.len());
    let mut normals = rng.normals(times.len());
    let mut prev_t = 0.0;
    let mut w = 0.0;
    for &t in times {
        let z = normals.next().unwrap_or(0.0);
        let dt = t - prev_t;
        if dt > 0.0 {
            w += snap(z * dt.sqrt());
        }
        values.push(w);
        prev_t = t;
    }
    PathSample {
        partition,
        values,
        rng,
    }
}
