use serde::{Deserialize, Serialize};

use crate::monoid::{MergeError, Monoid};

/// One histogram bucket: a representative value and how many observations
/// it stands for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub value: f64,
    pub count: u64,
}

/// Streaming histogram with a bounded number of bins.
///
/// When the bin budget is exceeded, the two adjacent bins whose values are
/// closest are replaced by one bin at their count-weighted mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamingHistogram {
    max_bins: usize,
    bins: Vec<Bin>,
    total: u64,
}

impl StreamingHistogram {
    pub fn new(max_bins: usize) -> StreamingHistogram {
        assert!(max_bins >= 1, "histogram needs at least one bin");
        StreamingHistogram { max_bins, bins: Vec::new(), total: 0 }
    }

    pub fn from_values(max_bins: usize, values: impl IntoIterator<Item = f64>) -> StreamingHistogram {
        let mut h = StreamingHistogram::new(max_bins);
        for v in values {
            h.add(v);
        }
        h
    }

    pub fn max_bins(&self) -> usize {
        self.max_bins
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Adds one observation. Non-finite values are ignored.
    pub fn add(&mut self, value: f64) {
        if !value.is_finite() {
            return;
        }
        self.total += 1;
        match self.bins.binary_search_by(|b| b.value.total_cmp(&value)) {
            Ok(i) => self.bins[i].count += 1,
            Err(i) => {
                self.bins.insert(i, Bin { value, count: 1 });
                self.shrink();
            }
        }
    }

    fn shrink(&mut self) {
        while self.bins.len() > self.max_bins {
            let mut best = 0;
            let mut best_gap = f64::INFINITY;
            for i in 0..self.bins.len() - 1 {
                let gap = self.bins[i + 1].value - self.bins[i].value;
                if gap < best_gap {
                    best_gap = gap;
                    best = i;
                }
            }
            let (a, b) = (self.bins[best], self.bins[best + 1]);
            let count = a.count + b.count;
            let value = (a.value * a.count as f64 + b.value * b.count as f64) / count as f64;
            self.bins[best] = Bin { value, count };
            self.bins.remove(best + 1);
        }
    }

    /// Estimated `q`-quantile, interpolating linearly between bin values with
    /// each bin's mass centred on its value. `None` when empty.
    pub fn quantile(&self, q: f64) -> Option<f64> {
        let first = self.bins.first()?;
        let last = self.bins.last()?;
        let q = q.clamp(0.0, 1.0);
        if self.bins.len() == 1 {
            return Some(first.value);
        }
        let target = q * self.total as f64;
        let mut before = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for bin in &self.bins {
            let centre = before + bin.count as f64 / 2.0;
            if target <= centre {
                return Some(match prev {
                    None => bin.value,
                    Some((pv, pc)) => pv + (bin.value - pv) * (target - pc) / (centre - pc),
                });
            }
            prev = Some((bin.value, centre));
            before += bin.count as f64;
        }
        Some(last.value)
    }

    /// Fraction of observations at or below `x`, treating each bin as a
    /// point mass at its value.
    pub fn cdf(&self, x: f64) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let below: u64 = self.bins.iter().take_while(|b| b.value <= x).map(|b| b.count).sum();
        below as f64 / self.total as f64
    }
}

impl Monoid for StreamingHistogram {
    fn identity_like(&self) -> Self {
        StreamingHistogram::new(self.max_bins)
    }

    fn merge_from(&mut self, other: &Self) -> Result<(), MergeError> {
        if self.max_bins != other.max_bins {
            return Err(MergeError::new("histogram", format!("max_bins {} vs {}", self.max_bins, other.max_bins)));
        }
        let mut merged: Vec<Bin> = Vec::with_capacity(self.bins.len() + other.bins.len());
        let (mut i, mut j) = (0, 0);
        while i < self.bins.len() || j < other.bins.len() {
            let take_left = match (self.bins.get(i), other.bins.get(j)) {
                (Some(a), Some(b)) => a.value <= b.value,
                (Some(_), None) => true,
                _ => false,
            };
            let next = if take_left {
                i += 1;
                self.bins[i - 1]
            } else {
                j += 1;
                other.bins[j - 1]
            };
            match merged.last_mut() {
                Some(last) if last.value == next.value => last.count += next.count,
                _ => merged.push(next),
            }
        }
        self.bins = merged;
        self.total += other.total;
        self.shrink();
        Ok(())
    }
}
