use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{decode_u8s, encode_u8s, SketchValue};
use crate::monoid::{MergeError, Monoid};

const SPARSE_LIMIT: usize = 128;

/// HyperLogLog distinct-count sketch with `2^p` registers.
///
/// The register index is the top `p` bits of the value's 64-bit hash and the
/// register value is the position of the first set bit in the remainder.
#[derive(Clone, Debug)]
pub struct HyperLogLog {
    precision: u8,
    repr: Repr,
}

#[derive(Clone, Debug)]
enum Repr {
    /// Sorted by register index; only non-zero registers.
    Sparse(Vec<(u32, u8)>),
    Dense(Vec<u8>),
}

impl HyperLogLog {
    pub fn new(precision: u8) -> HyperLogLog {
        assert!((4..=18).contains(&precision), "HyperLogLog precision must be in 4..=18");
        HyperLogLog { precision, repr: Repr::Sparse(Vec::new()) }
    }

    pub fn precision(&self) -> u8 {
        self.precision
    }

    fn register_count(&self) -> usize {
        1 << self.precision
    }

    /// Relative standard error of the estimator, `1.04 / sqrt(2^p)`.
    pub fn standard_error(&self) -> f64 {
        1.04 / (self.register_count() as f64).sqrt()
    }

    pub fn add<'a>(&mut self, value: impl Into<SketchValue<'a>>) {
        let (hash, _) = value.into().digest();
        let p = self.precision as u32;
        let idx = (hash >> (64 - p)) as u32;
        let rest = hash << p;
        let rank = (rest.leading_zeros().min(64 - p) + 1) as u8;
        self.update(idx, rank);
    }

    fn update(&mut self, idx: u32, rank: u8) {
        match &mut self.repr {
            Repr::Sparse(list) => match list.binary_search_by_key(&idx, |&(i, _)| i) {
                Ok(pos) => list[pos].1 = list[pos].1.max(rank),
                Err(pos) => {
                    list.insert(pos, (idx, rank));
                    if list.len() > SPARSE_LIMIT {
                        self.densify();
                    }
                }
            },
            Repr::Dense(regs) => {
                let r = &mut regs[idx as usize];
                *r = (*r).max(rank);
            }
        }
    }

    fn densify(&mut self) {
        if let Repr::Sparse(list) = &self.repr {
            let mut regs = vec![0u8; self.register_count()];
            for &(i, r) in list {
                regs[i as usize] = r;
            }
            self.repr = Repr::Dense(regs);
        }
    }

    pub fn registers(&self) -> Vec<u8> {
        match &self.repr {
            Repr::Dense(regs) => regs.clone(),
            Repr::Sparse(list) => {
                let mut regs = vec![0u8; self.register_count()];
                for &(i, r) in list {
                    regs[i as usize] = r;
                }
                regs
            }
        }
    }

    /// Estimated number of distinct values added, with linear counting in
    /// the small range and the 64-bit large-range correction.
    pub fn estimate(&self) -> f64 {
        let regs = self.registers();
        let m = regs.len() as f64;
        let alpha = match regs.len() {
            16 => 0.673,
            32 => 0.697,
            64 => 0.709,
            _ => 0.7213 / (1.0 + 1.079 / m),
        };
        let sum: f64 = regs.iter().map(|&r| 2f64.powi(-(r as i32))).sum();
        let raw = alpha * m * m / sum;
        let zeros = regs.iter().filter(|&&r| r == 0).count();
        if raw <= 2.5 * m && zeros > 0 {
            m * (m / zeros as f64).ln()
        } else {
            let two64 = 2f64.powi(64);
            if raw > two64 / 30.0 {
                -two64 * (1.0 - raw / two64).ln()
            } else {
                raw
            }
        }
    }
}

impl PartialEq for HyperLogLog {
    fn eq(&self, other: &Self) -> bool {
        self.precision == other.precision && self.registers() == other.registers()
    }
}

impl Monoid for HyperLogLog {
    fn identity_like(&self) -> Self {
        HyperLogLog::new(self.precision)
    }

    fn merge_from(&mut self, other: &Self) -> Result<(), MergeError> {
        if self.precision != other.precision {
            return Err(MergeError::new("hll", format!("p={} vs p={}", self.precision, other.precision)));
        }
        match &other.repr {
            Repr::Sparse(list) => {
                for &(i, r) in list {
                    self.update(i, r);
                }
            }
            Repr::Dense(theirs) => {
                self.densify();
                if let Repr::Dense(regs) = &mut self.repr {
                    for (a, b) in regs.iter_mut().zip(theirs) {
                        *a = (*a).max(*b);
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct HllWire {
    p: u8,
    registers: String,
}

impl Serialize for HyperLogLog {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        HllWire { p: self.precision, registers: encode_u8s(&self.registers()) }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HyperLogLog {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = HllWire::deserialize(deserializer)?;
        let regs = decode_u8s(&wire.registers).map_err(serde::de::Error::custom)?;
        if !(4..=18).contains(&wire.p) || regs.len() != 1 << wire.p {
            return Err(serde::de::Error::custom("HyperLogLog payload does not match precision"));
        }
        Ok(HyperLogLog { precision: wire.p, repr: Repr::Dense(regs) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_estimates_zero() {
        assert_eq!(HyperLogLog::new(12).estimate(), 0.0);
    }

    #[test]
    fn idempotent_merge() {
        let mut h = HyperLogLog::new(12);
        for i in 0..5_000 {
            h.add(i);
        }
        assert_eq!(h.combine(&h).unwrap(), h);
        assert_eq!(h.combine(&h.identity_like()).unwrap(), h);
    }

    #[test]
    fn duplicates_do_not_count() {
        let mut h = HyperLogLog::new(12);
        for _ in 0..100 {
            h.add("same");
        }
        assert!((h.estimate() - 1.0).abs() < 0.01);
    }

    #[test]
    fn small_range_accuracy() {
        let mut h = HyperLogLog::new(12);
        for i in 0..1_000 {
            h.add(format!("k{i}").as_str());
        }
        let est = h.estimate();
        assert!((est - 1_000.0).abs() / 1_000.0 < 0.05, "estimate {est}");
    }

    #[test]
    fn precision_mismatch() {
        assert!(HyperLogLog::new(10).combine(&HyperLogLog::new(12)).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let mut h = HyperLogLog::new(8);
        h.add("a");
        h.add(3);
        let back: HyperLogLog = serde_json::from_str(&serde_json::to_string(&h).unwrap()).unwrap();
        assert_eq!(back, h);
    }
}
