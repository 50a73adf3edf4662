//! Streaming moments and deterministic parallel reduction.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Running count, mean and centered second moment (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    /// Chan et al. pairwise combination.
    pub fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let w = other.count as f64 / count as f64;
        Moments {
            count,
            mean: self.mean + delta * w,
            m2: self.m2 + other.m2 + delta * delta * self.count as f64 * w,
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero below two samples.
    pub fn variance(&self) -> f64 {
        if self.count > 1 {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        } else {
            0.0
        }
    }

    pub fn estimate(&self) -> MCEstimate {
        MCEstimate {
            mean: self.mean,
            se: if self.count > 1 {
                (self.variance() / self.count as f64).sqrt()
            } else {
                0.0
            },
            count: self.count,
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::new();
        for v in iter {
            m.push(v);
        }
        m
    }
}

/// A Monte Carlo statistic: sample mean, its standard error and sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub se: f64,
    pub count: u64,
}

impl MCEstimate {
    pub fn exact(value: f64, count: u64) -> Self {
        MCEstimate {
            mean: value,
            se: 0.0,
            count,
        }
    }

    pub fn scale(self, factor: f64) -> Self {
        MCEstimate {
            mean: self.mean * factor,
            se: self.se * factor.abs(),
            count: self.count,
        }
    }

    /// `sqrt(se_a^2 + se_b^2)`, the standard error of a difference of
    /// independent estimates.
    pub fn combined_se(&self, other: &MCEstimate) -> f64 {
        self.se.hypot(other.se)
    }

    /// `|self - target| <= k * se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }
}

pub trait Merge {
    fn merge(self, other: Self) -> Self;
}

impl Merge for Moments {
    fn merge(self, other: Self) -> Self {
        Moments::merge(self, other)
    }
}

impl<T: Merge> Merge for Vec<T> {
    fn merge(self, other: Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        self.into_iter()
            .zip(other)
            .map(|(a, b)| a.merge(b))
            .collect()
    }
}

/// Reduces `items` by merging adjacent pairs level by level. The shape of
/// the tree depends only on `items.len()`.
pub fn tree_reduce<T: Merge>(mut items: Vec<T>) -> Option<T> {
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a.merge(b),
                None => a,
            });
        }
        items = next;
    }
    items.pop()
}

/// Number of work items handled by one task in [`chunked_reduce`]. Part of
/// the reproducibility contract: changing it changes the reduction tree.
pub const CHUNK: u64 = 4096;

/// Splits `0..total` into fixed chunks of [`CHUNK`] items, runs `work` on
/// each chunk in parallel and tree-reduces the results in chunk order.
///
/// The output is bit-identical for any thread count.
pub fn chunked_reduce<T, F>(total: u64, work: F) -> Option<T>
where
    T: Merge + Send,
    F: Fn(u64, Range<u64>) -> T + Sync,
{
    let chunks = total.div_ceil(CHUNK);
    let parts: Vec<T> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            work(c, start..(start + CHUNK).min(total))
        })
        .collect();
    tree_reduce(parts)
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
