use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::Compensated;

/// Uniform binning of [lo, hi).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Binning {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Binning {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 bins, got {bins}")));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidArgument(format!("bad histogram range [{lo}, {hi})")));
        }
        Ok(Self { lo, hi, bins })
    }

    /// 100 bins on [−1, 1).
    pub fn fluctuations() -> Self {
        Self { lo: -1.0, hi: 1.0, bins: 100 }
    }

    /// 100 bins on [0, 4) mean spacings.
    pub fn spacings() -> Self {
        Self { lo: 0.0, hi: 4.0, bins: 100 }
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn edge(&self, i: usize) -> f64 {
        if i == self.bins {
            self.hi
        } else {
            self.lo + i as f64 * self.width()
        }
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.width()
    }

    /// Bin of `x`, or Err(false) below range, Err(true) at or above.
    fn locate(&self, x: f64) -> std::result::Result<usize, bool> {
        if x < self.lo {
            return Err(false);
        }
        if !(x < self.hi) {
            return Err(true);
        }
        let i = ((x - self.lo) / self.width()) as usize;
        Ok(i.min(self.bins - 1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistributionHistogram {
    pub binning: Binning,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    /// Including out-of-range samples.
    pub samples: u64,
    pub mean: f64,
    pub variance: f64,
}

impl DistributionHistogram {
    pub fn empty(binning: Binning) -> Self {
        Self {
            binning,
            counts: vec![0; binning.bins],
            underflow: 0,
            overflow: 0,
            samples: 0,
            mean: 0.0,
            variance: 0.0,
        }
    }

    /// Mean and variance are taken over all values, in range or not.
    pub fn from_values(values: &[f64], binning: Binning) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("no values to histogram".into()));
        }
        let mut h = Self::empty(binning);
        for &x in values {
            match binning.locate(x) {
                Ok(i) => h.counts[i] += 1,
                Err(false) => h.underflow += 1,
                Err(true) => h.overflow += 1,
            }
        }
        h.samples = values.len() as u64;
        let (mean, variance) = mean_variance(values);
        h.mean = mean;
        h.variance = variance;
        Ok(h)
    }

    pub fn density(&self) -> Vec<f64> {
        let norm = self.samples.max(1) as f64 * self.binning.width();
        self.counts.iter().map(|&c| c as f64 / norm).collect()
    }

    pub fn in_range_fraction(&self) -> f64 {
        if self.samples == 0 {
            return 0.0;
        }
        self.counts.iter().sum::<u64>() as f64 / self.samples as f64
    }

    /// Binomial standard error of each bin's density.
    pub fn density_error(&self) -> Vec<f64> {
        let n = self.samples.max(1) as f64;
        let w = self.binning.width();
        self.counts
            .iter()
            .map(|&c| {
                let p = c as f64 / n;
                (p * (1.0 - p) / n).sqrt() / w
            })
            .collect()
    }

    /// ∫|p − q| over the shared bins.
    pub fn l1_distance(&self, other: &Self) -> Result<f64> {
        if self.binning != other.binning {
            return Err(Error::InvalidArgument("histograms use different binnings".into()));
        }
        let w = self.binning.width();
        Ok(self
            .density()
            .iter()
            .zip(other.density())
            .map(|(p, q)| (p - q).abs() * w)
            .sum())
    }

    /// ∫|p − f| using f at bin centres.
    pub fn l1_to_curve(&self, f: impl Fn(f64) -> f64) -> f64 {
        let w = self.binning.width();
        self.density()
            .iter()
            .enumerate()
            .map(|(i, p)| (p - f(self.binning.center(i))).abs() * w)
            .sum()
    }

    /// Rows (bin_lo, bin_hi, density, count).
    pub fn rows(&self) -> Vec<(f64, f64, f64, u64)> {
        let d = self.density();
        (0..self.binning.bins)
            .map(|i| (self.binning.edge(i), self.binning.edge(i + 1), d[i], self.counts[i]))
            .collect()
    }

    /// Draw from the piecewise-uniform density; `u`, `v` uniform on [0, 1).
    pub fn quantile(&self, u: f64, v: f64) -> Result<f64> {
        let total: u64 = self.counts.iter().sum();
        if total == 0 {
            return Err(Error::Empty("histogram has no in-range counts".into()));
        }
        let target = u * total as f64;
        let mut acc = 0.0;
        for (i, &c) in self.counts.iter().enumerate() {
            acc += c as f64;
            if target < acc {
                return Ok(self.binning.edge(i) + v * self.binning.width());
            }
        }
        let last = (0..self.binning.bins).rev().find(|&i| self.counts[i] > 0).unwrap_or(0);
        Ok(self.binning.edge(last) + v * self.binning.width())
    }
}

/// Compensated mean and population variance.
pub fn mean_variance(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mut s = Compensated::new();
    for &x in values {
        s.add(x);
    }
    let mean = s.value() / n;
    let mut q = Compensated::new();
    for &x in values {
        q.add((x - mean) * (x - mean));
    }
    (mean, q.value() / n)
}
