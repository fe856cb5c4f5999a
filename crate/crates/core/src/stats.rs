//! Mergeable central moments.

use serde::{Deserialize, Serialize};

use crate::monoid::{MergeError, Monoid};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("non-finite value {0} cannot be accumulated")]
pub struct NonFiniteValue(pub f64);

/// Count, mean and the second to fourth central-moment sums of a sample.
///
/// Partial accumulators combine with the pairwise update of Chan et al. and
/// Pébay, written so that swapping the operands yields bit-identical results.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

/// Summary statistics. Variance is the population variance and kurtosis is
/// excess kurtosis; statistics that are undefined for the sample are `None`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentsReport {
    pub count: u64,
    pub mean: Option<f64>,
    pub stddev: Option<f64>,
    pub skewness: Option<f64>,
    pub kurtosis: Option<f64>,
}

impl Moments {
    pub fn new() -> Moments {
        Moments::default()
    }

    pub fn of(value: f64) -> Result<Moments, NonFiniteValue> {
        if !value.is_finite() {
            return Err(NonFiniteValue(value));
        }
        Ok(Moments { n: 1, mean: value, ..Moments::default() })
    }

    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Result<Moments, NonFiniteValue> {
        let mut acc = Moments::new();
        for v in values {
            acc.add(v)?;
        }
        Ok(acc)
    }

    pub fn add(&mut self, value: f64) -> Result<(), NonFiniteValue> {
        let one = Moments::of(value)?;
        *self = self.merged(&one);
        Ok(())
    }

    pub fn merged(&self, other: &Moments) -> Moments {
        if other.n == 0 {
            return *self;
        }
        if self.n == 0 {
            return *other;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        let d2 = delta * delta;
        let nab = na * nb;

        let mean = (na * self.mean + nb * other.mean) / n;
        let m2 = (self.m2 + other.m2) + d2 * nab / n;
        let m3 = (self.m3 + other.m3)
            + (d2 * delta * nab * (na - nb) / (n * n) + 3.0 * delta * (na * other.m2 - nb * self.m2) / n);
        let m4 = (self.m4 + other.m4)
            + (d2 * d2 * nab * ((na * na + nb * nb) - nab) / (n * n * n)
                + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
                + 4.0 * delta * (na * other.m3 - nb * self.m3) / n);
        Moments { n: self.n + other.n, mean, m2, m3, m4 }
    }

    pub fn variance(&self) -> Option<f64> {
        (self.n >= 1).then(|| self.m2.max(0.0) / self.n as f64)
    }

    pub fn report(&self) -> MomentsReport {
        let n = self.n as f64;
        let spread = self.n >= 2 && self.m2 > 0.0;
        MomentsReport {
            count: self.n,
            mean: (self.n >= 1).then_some(self.mean),
            stddev: (self.n >= 2).then(|| (self.m2.max(0.0) / n).sqrt()),
            skewness: spread.then(|| n.sqrt() * self.m3 / self.m2.powf(1.5)),
            kurtosis: spread.then(|| n * self.m4 / (self.m2 * self.m2) - 3.0),
        }
    }
}

impl Monoid for Moments {
    fn identity_like(&self) -> Self {
        Moments::new()
    }

    fn merge_from(&mut self, other: &Self) -> Result<(), MergeError> {
        *self = self.merged(other);
        Ok(())
    }
}
