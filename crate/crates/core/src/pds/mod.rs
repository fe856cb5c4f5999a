//! Probabilistic sketches used as facets.
//!
//! All sketches hash a canonical byte encoding of the observed value with
//! XXH3-128. The 128-bit digest is split into two 64-bit halves: the low half
//! feeds HyperLogLog directly and both halves drive Bloom double hashing.

mod bloom;
mod histogram;
mod hll;

pub use bloom::BloomFilter;
pub use histogram::{Bin, StreamingHistogram};
pub use hll::HyperLogLog;

use base64::Engine as _;

use crate::json::Number;

/// Byte encoding of a sketched value. Strings hash as their UTF-8 bytes and
/// numbers as their shortest round-trip decimal text.
#[derive(Clone, Debug, PartialEq)]
pub enum SketchValue<'a> {
    Str(&'a str),
    Num(Number),
}

impl SketchValue<'_> {
    pub fn digest(&self) -> (u64, u64) {
        let h = match self {
            SketchValue::Str(s) => xxhash_rust::xxh3::xxh3_128(s.as_bytes()),
            SketchValue::Num(n) => xxhash_rust::xxh3::xxh3_128(n.to_string().as_bytes()),
        };
        (h as u64, (h >> 64) as u64)
    }
}

impl<'a> From<&'a str> for SketchValue<'a> {
    fn from(s: &'a str) -> Self {
        SketchValue::Str(s)
    }
}

impl From<Number> for SketchValue<'_> {
    fn from(n: Number) -> Self {
        SketchValue::Num(n)
    }
}

impl From<i64> for SketchValue<'_> {
    fn from(n: i64) -> Self {
        SketchValue::Num(Number::Int(n))
    }
}

// Payload framing: u32 element count, then the elements, all little-endian.

pub(crate) fn encode_u64s(words: &[u64]) -> String {
    let mut bytes = Vec::with_capacity(4 + words.len() * 8);
    bytes.extend_from_slice(&(words.len() as u32).to_le_bytes());
    for w in words {
        bytes.extend_from_slice(&w.to_le_bytes());
    }
    base64::engine::general_purpose::STANDARD.encode(bytes)
}

pub(crate) fn decode_u64s(text: &str) -> Result<Vec<u64>, String> {
    let bytes = decode_framed(text, 8)?;
    Ok(bytes.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect())
}

pub(crate) fn encode_u8s(values: &[u8]) -> String {
    let mut bytes = Vec::with_capacity(4 + values.len());
    bytes.extend_from_slice(&(values.len() as u32).to_le_bytes());
    bytes.extend_from_slice(values);
    base64::engine::general_purpose::STANDARD.encode(bytes)
}

pub(crate) fn decode_u8s(text: &str) -> Result<Vec<u8>, String> {
    decode_framed(text, 1)
}

fn decode_framed(text: &str, width: usize) -> Result<Vec<u8>, String> {
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(text)
        .map_err(|e| format!("bad sketch payload: {e}"))?;
    if bytes.len() < 4 {
        return Err("sketch payload missing length prefix".into());
    }
    let len = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
    let body = &bytes[4..];
    if body.len() != len * width {
        return Err(format!("sketch payload length {} does not match prefix {len}", body.len() / width));
    }
    Ok(body.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn framing_round_trip() {
        let words = vec![0, 1, u64::MAX, 0xdead_beef];
        assert_eq!(decode_u64s(&encode_u64s(&words)).unwrap(), words);
        let bytes = vec![3u8, 0, 9];
        assert_eq!(decode_u8s(&encode_u8s(&bytes)).unwrap(), bytes);
        assert!(decode_u8s("AAAA").is_err());
    }

    #[test]
    fn numbers_hash_by_text() {
        assert_eq!(SketchValue::from(5).digest(), SketchValue::Num(Number::from_f64(5.0)).digest());
        assert_eq!(SketchValue::from(5).digest(), SketchValue::Str("5").digest());
        assert_ne!(SketchValue::from(5).digest(), SketchValue::from(6).digest());
    }
}
