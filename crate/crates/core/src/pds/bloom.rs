use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{decode_u64s, encode_u64s, SketchValue};
use crate::monoid::{MergeError, Monoid};

/// Filters holding fewer set bits than this stay as a sorted index list.
const SPARSE_LIMIT: usize = 512;

/// Bloom filter over `m` bits with `k` probes per value.
///
/// Probe `i` of a value lands on `(h1 + i * h2) mod m`, where `h1`/`h2` are
/// the halves of the value's 128-bit digest. Small filters are stored as a
/// sorted list of set bit indices; equality is on the logical bit set.
#[derive(Clone, Debug)]
pub struct BloomFilter {
    bits: usize,
    hashes: u32,
    repr: Repr,
}

#[derive(Clone, Debug)]
enum Repr {
    Sparse(Vec<u32>),
    Dense(Vec<u64>),
}

impl BloomFilter {
    pub fn new(bits: usize, hashes: u32) -> BloomFilter {
        assert!(bits > 0 && bits <= u32::MAX as usize, "bloom filter size out of range");
        assert!(hashes > 0, "bloom filter needs at least one hash");
        BloomFilter { bits, hashes, repr: Repr::Sparse(Vec::new()) }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn hashes(&self) -> u32 {
        self.hashes
    }

    fn probes(&self, value: &SketchValue<'_>) -> impl Iterator<Item = u32> {
        let (h1, h2) = value.digest();
        let m = self.bits as u64;
        (0..self.hashes as u64).map(move |i| (h1.wrapping_add(i.wrapping_mul(h2)) % m) as u32)
    }

    pub fn insert<'a>(&mut self, value: impl Into<SketchValue<'a>>) {
        let value = value.into();
        let probes: Vec<u32> = self.probes(&value).collect();
        for idx in probes {
            self.set(idx);
        }
    }

    pub fn contains<'a>(&self, value: impl Into<SketchValue<'a>>) -> bool {
        let value = value.into();
        self.probes(&value).all(|idx| self.get(idx))
    }

    fn set(&mut self, idx: u32) {
        match &mut self.repr {
            Repr::Sparse(list) => {
                if let Err(pos) = list.binary_search(&idx) {
                    list.insert(pos, idx);
                    if list.len() > SPARSE_LIMIT {
                        self.densify();
                    }
                }
            }
            Repr::Dense(words) => words[idx as usize / 64] |= 1 << (idx % 64),
        }
    }

    fn get(&self, idx: u32) -> bool {
        match &self.repr {
            Repr::Sparse(list) => list.binary_search(&idx).is_ok(),
            Repr::Dense(words) => words[idx as usize / 64] & (1 << (idx % 64)) != 0,
        }
    }

    fn densify(&mut self) {
        if let Repr::Sparse(list) = &self.repr {
            let mut words = vec![0u64; self.bits.div_ceil(64)];
            for &idx in list {
                words[idx as usize / 64] |= 1 << (idx % 64);
            }
            self.repr = Repr::Dense(words);
        }
    }

    /// The filter's bit array as 64-bit words.
    pub fn words(&self) -> Vec<u64> {
        match &self.repr {
            Repr::Dense(words) => words.clone(),
            Repr::Sparse(_) => {
                let mut copy = self.clone();
                copy.densify();
                copy.words()
            }
        }
    }

    pub fn count_ones(&self) -> usize {
        match &self.repr {
            Repr::Sparse(list) => list.len(),
            Repr::Dense(words) => words.iter().map(|w| w.count_ones() as usize).sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.count_ones() == 0
    }

    /// Fraction of bits set.
    pub fn fill_ratio(&self) -> f64 {
        self.count_ones() as f64 / self.bits as f64
    }

    fn check_params(&self, other: &BloomFilter) -> Result<(), MergeError> {
        if self.bits != other.bits || self.hashes != other.hashes {
            return Err(MergeError::new(
                "bloom",
                format!("m={},k={} vs m={},k={}", self.bits, self.hashes, other.bits, other.hashes),
            ));
        }
        Ok(())
    }

    /// True when every bit set in `self` is also set in `other`, i.e. the set
    /// summarized by `self` is likely a subset of the one behind `other`.
    pub fn is_subset_of(&self, other: &BloomFilter) -> Result<bool, MergeError> {
        self.check_params(other)?;
        Ok(match &self.repr {
            Repr::Sparse(list) => list.iter().all(|&idx| other.get(idx)),
            Repr::Dense(words) => {
                let theirs = other.words();
                words.iter().zip(&theirs).all(|(a, b)| a & b == *a)
            }
        })
    }

    /// Expected false-positive rate after `n` distinct insertions.
    pub fn analytic_fpr(bits: usize, hashes: u32, n: usize) -> f64 {
        let k = hashes as f64;
        (1.0 - (-k * n as f64 / bits as f64).exp()).powf(k)
    }
}

impl PartialEq for BloomFilter {
    fn eq(&self, other: &Self) -> bool {
        if self.bits != other.bits || self.hashes != other.hashes {
            return false;
        }
        match (&self.repr, &other.repr) {
            (Repr::Sparse(a), Repr::Sparse(b)) => a == b,
            _ => self.words() == other.words(),
        }
    }
}

impl Monoid for BloomFilter {
    fn identity_like(&self) -> Self {
        BloomFilter::new(self.bits, self.hashes)
    }

    fn merge_from(&mut self, other: &Self) -> Result<(), MergeError> {
        self.check_params(other)?;
        match &other.repr {
            Repr::Sparse(list) => {
                for &idx in list {
                    self.set(idx);
                }
            }
            Repr::Dense(theirs) => {
                self.densify();
                if let Repr::Dense(words) = &mut self.repr {
                    for (a, b) in words.iter_mut().zip(theirs) {
                        *a |= *b;
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct BloomWire {
    m: usize,
    k: u32,
    bits: String,
}

impl Serialize for BloomFilter {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        BloomWire { m: self.bits, k: self.hashes, bits: encode_u64s(&self.words()) }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for BloomFilter {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let wire = BloomWire::deserialize(deserializer)?;
        let words = decode_u64s(&wire.bits).map_err(serde::de::Error::custom)?;
        if wire.m == 0 || wire.k == 0 || words.len() != wire.m.div_ceil(64) {
            return Err(serde::de::Error::custom("bloom filter payload does not match m"));
        }
        Ok(BloomFilter { bits: wire.m, hashes: wire.k, repr: Repr::Dense(words) })
    }
}
