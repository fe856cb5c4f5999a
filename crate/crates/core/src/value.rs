//! Value-restriction and sampling facets.

use std::cmp::Ordering;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::formats::StringFormat;
use crate::json::Number;
use crate::monoid::{MergeError, Monoid};

/// Types that a [`MaxMin`] facet can bound.
pub trait Bounded: Clone + PartialEq {
    fn compare(&self, other: &Self) -> Ordering;
}

impl Bounded for Number {
    fn compare(&self, other: &Self) -> Ordering {
        self.total_cmp(other)
    }
}

impl Bounded for u64 {
    fn compare(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }
}

/// Observed minimum and maximum. Used for numeric values (over [`Number`])
/// and for string and array lengths (over `u64`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxMin<T> {
    range: Option<(T, T)>,
}

impl<T: Bounded> MaxMin<T> {
    pub fn identity() -> Self {
        MaxMin { range: None }
    }

    pub fn of(value: T) -> Self {
        MaxMin { range: Some((value.clone(), value)) }
    }

    pub fn min(&self) -> Option<&T> {
        self.range.as_ref().map(|r| &r.0)
    }

    pub fn max(&self) -> Option<&T> {
        self.range.as_ref().map(|r| &r.1)
    }

    pub fn contains(&self, value: &T) -> bool {
        match &self.range {
            None => false,
            Some((lo, hi)) => lo.compare(value) != Ordering::Greater && hi.compare(value) != Ordering::Less,
        }
    }
}

impl<T: Bounded> Monoid for MaxMin<T> {
    fn identity_like(&self) -> Self {
        Self::identity()
    }

    fn merge_from(&mut self, other: &Self) -> Result<(), MergeError> {
        let Some((olo, ohi)) = &other.range else { return Ok(()) };
        match &mut self.range {
            None => self.range = other.range.clone(),
            Some((lo, hi)) => {
                if olo.compare(lo) == Ordering::Less {
                    *lo = olo.clone();
                }
                if ohi.compare(hi) == Ordering::Greater {
                    *hi = ohi.clone();
                }
            }
        }
        Ok(())
    }
}

/// Greatest common divisor of the observed integers.
///
/// `Gcd(0)` is the identity. Any non-integral (or out-of-range) observation
/// disables the facet for good.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Multiple {
    Gcd(u64),
    Disabled,
}

impl Multiple {
    pub fn of(value: Number) -> Multiple {
        match value {
            Number::Int(i) => Multiple::Gcd(i.unsigned_abs()),
            Number::Float(_) => Multiple::Disabled,
        }
    }

    /// The `multipleOf` value to emit, if any (only when the GCD exceeds 1).
    pub fn emitted(&self) -> Option<u64> {
        match *self {
            Multiple::Gcd(g) if g > 1 => Some(g),
            _ => None,
        }
    }
}

impl Default for Multiple {
    fn default() -> Self {
        Multiple::Gcd(0)
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Monoid for Multiple {
    fn identity_like(&self) -> Self {
        Multiple::Gcd(0)
    }

    fn merge_from(&mut self, other: &Self) -> Result<(), MergeError> {
        *self = match (*self, *other) {
            (Multiple::Gcd(a), Multiple::Gcd(b)) => Multiple::Gcd(gcd(a, b)),
            _ => Multiple::Disabled,
        };
        Ok(())
    }
}

/// Longest common prefix and suffix of the observed strings, measured in
/// Unicode scalar values.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    affixes: Option<(String, String)>,
}

impl Pattern {
    pub fn of(s: &str) -> Pattern {
        Pattern { affixes: Some((s.to_owned(), s.to_owned())) }
    }

    pub fn prefix(&self) -> Option<&str> {
        self.affixes.as_ref().map(|a| a.0.as_str())
    }

    pub fn suffix(&self) -> Option<&str> {
        self.affixes.as_ref().map(|a| a.1.as_str())
    }

    /// Anchored regular expression for the affixes that are at least
    /// `min_len` characters long, or `None` if neither qualifies.
    ///
    /// When both qualify the prefix and suffix may overlap inside short
    /// strings, so the overlapping spellings are listed as alternatives.
    pub fn regex(&self, min_len: usize) -> Option<String> {
        let (prefix, suffix) = self.affixes.as_ref()?;
        let min_len = min_len.max(1);
        let use_prefix = prefix.chars().count() >= min_len;
        let use_suffix = suffix.chars().count() >= min_len;
        match (use_prefix, use_suffix) {
            (false, false) => None,
            (true, false) => Some(format!("^{}", escape_regex(prefix))),
            (false, true) => Some(format!("{}$", escape_regex(suffix))),
            (true, true) => {
                let mut alternatives = vec![format!("{}[\\s\\S]*{}", escape_regex(prefix), escape_regex(suffix))];
                for joined in overlaps(prefix, suffix) {
                    alternatives.push(escape_regex(&joined));
                }
                Some(format!("^(?:{})$", alternatives.join("|")))
            }
        }
    }
}

/// Strings shorter than `prefix + suffix` that start with `prefix` and end
/// with `suffix`.
fn overlaps(prefix: &str, suffix: &str) -> Vec<String> {
    let p: Vec<char> = prefix.chars().collect();
    let s: Vec<char> = suffix.chars().collect();
    let mut out = Vec::new();
    for overlap in 1..=p.len().min(s.len()) {
        if p[p.len() - overlap..] == s[..overlap] {
            let joined: String = p.iter().chain(&s[overlap..]).collect();
            out.push(joined);
        }
    }
    if s.len() > p.len() {
        // The suffix alone may already start with the prefix.
        if s.starts_with(&p) {
            out.push(suffix.to_owned());
        }
    }
    if p.len() > s.len() && p.ends_with(&s) {
        out.push(prefix.to_owned());
    }
    out.sort();
    out.dedup();
    out
}

/// Escapes regex metacharacters; the output is valid in both ECMA-262 and
/// Rust regex syntax.
pub fn escape_regex(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if "\\^$.|?*+()[]{}/".contains(c) {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

fn common_prefix(a: &str, b: &str) -> String {
    a.chars().zip(b.chars()).take_while(|(x, y)| x == y).map(|(x, _)| x).collect()
}

fn common_suffix(a: &str, b: &str) -> String {
    let mut rev: Vec<char> = a.chars().rev().zip(b.chars().rev()).take_while(|(x, y)| x == y).map(|(x, _)| x).collect();
    rev.reverse();
    rev.into_iter().collect()
}

impl Monoid for Pattern {
    fn identity_like(&self) -> Self {
        Pattern::default()
    }

    fn merge_from(&mut self, other: &Self) -> Result<(), MergeError> {
        let Some((op, os)) = &other.affixes else { return Ok(()) };
        match &mut self.affixes {
            None => self.affixes = other.affixes.clone(),
            Some((p, s)) => {
                *p = common_prefix(p, op);
                *s = common_suffix(s, os);
            }
        }
        Ok(())
    }
}

/// The single format shared by every observed string.
///
/// A string matching no detector initializes to `Conflict`, so one
/// unformatted value suppresses the keyword.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatFacet {
    #[default]
    Unset,
    Is(StringFormat),
    Conflict,
}

impl FormatFacet {
    pub fn of(s: &str) -> FormatFacet {
        StringFormat::detect(s).map_or(FormatFacet::Conflict, FormatFacet::Is)
    }

    pub fn format(&self) -> Option<StringFormat> {
        match *self {
            FormatFacet::Is(f) => Some(f),
            _ => None,
        }
    }
}

impl Monoid for FormatFacet {
    fn identity_like(&self) -> Self {
        FormatFacet::Unset
    }

    fn merge_from(&mut self, other: &Self) -> Result<(), MergeError> {
        *self = match (*self, *other) {
            (FormatFacet::Unset, x) | (x, FormatFacet::Unset) => x,
            (FormatFacet::Is(a), FormatFacet::Is(b)) if a == b => FormatFacet::Is(a),
            _ => FormatFacet::Conflict,
        };
        Ok(())
    }
}

/// Bounded random sample of observed values plus the number of values it
/// was drawn from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reservoir<T> {
    capacity: usize,
    total: u64,
    items: Vec<T>,
}

impl<T: Clone> Reservoir<T> {
    pub fn new(capacity: usize) -> Reservoir<T> {
        Reservoir { capacity, total: 0, items: Vec::new() }
    }

    pub fn of(capacity: usize, value: T) -> Reservoir<T> {
        let items = if capacity > 0 { vec![value] } else { Vec::new() };
        Reservoir { capacity, total: 1, items }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn items(&self) -> &[T] {
        &self.items
    }

    /// Weighted merge: every kept slot comes from `self` with probability
    /// `total_self / (total_self + total_other)`, falling back to the other
    /// side once one sample is exhausted.
    pub fn merge_with<R: Rng + ?Sized>(&mut self, other: &Reservoir<T>, rng: &mut R) -> Result<(), MergeError> {
        if self.capacity != other.capacity {
            return Err(MergeError::new(
                "examples",
                format!("capacity {} vs {}", self.capacity, other.capacity),
            ));
        }
        let combined_total = self.total + other.total;
        if self.items.len() + other.items.len() <= self.capacity {
            self.items.extend(other.items.iter().cloned());
            self.total = combined_total;
            return Ok(());
        }
        let cap = self.capacity;
        let p_other = other.total as f64 / combined_total as f64;
        let drawn = Binomial::new(cap as u64, p_other.clamp(0.0, 1.0)).map(|b| b.sample(rng) as usize).unwrap_or(0);
        let mut from_other = drawn.min(other.items.len());
        let from_self = (cap - from_other).min(self.items.len());
        from_other = (cap - from_self).min(other.items.len());

        let mine = index::sample(rng, self.items.len(), from_self);
        let theirs = index::sample(rng, other.items.len(), from_other);
        let mut kept: Vec<T> = mine.iter().map(|i| self.items[i].clone()).collect();
        kept.extend(theirs.iter().map(|i| other.items[i].clone()));
        self.items = kept;
        self.total = combined_total;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fold_maxmin(values: &[i64]) -> MaxMin<Number> {
        let mut acc = MaxMin::identity();
        for &v in values {
            acc.merge_from(&MaxMin::of(Number::Int(v))).unwrap();
        }
        acc
    }

    #[test]
    fn maxmin_observed_range() {
        let m = fold_maxmin(&[40, 3, 95, 17]);
        assert_eq!(m.min(), Some(&Number::Int(3)));
        assert_eq!(m.max(), Some(&Number::Int(95)));
        let a = fold_maxmin(&[1, 5]);
        let b = fold_maxmin(&[2, 9]);
        let c = a.combine(&b).unwrap();
        assert_eq!((c.min(), c.max()), (Some(&Number::Int(1)), Some(&Number::Int(9))));
        assert_eq!(MaxMin::of(7u64), MaxMin { range: Some((7, 7)) });
    }

    #[test]
    fn multiple_euclid() {
        let m = |v: i64| Multiple::of(Number::Int(v));
        assert_eq!(m(12).combine(&m(8)).unwrap(), Multiple::Gcd(4));
        let coprime = m(7).combine(&m(13)).unwrap();
        assert_eq!(coprime, Multiple::Gcd(1));
        assert_eq!(coprime.emitted(), None);
        assert_eq!(m(-6).combine(&m(0)).unwrap(), Multiple::Gcd(6));
        assert_eq!(m(6).combine(&Multiple::of(Number::Float(1.5))).unwrap(), Multiple::Disabled);
    }

    #[test]
    fn multiple_of_four_values() {
        // Brute-force oracle: largest d dividing every value.
        let values = [10u64, 20, 30, 45];
        let oracle = (1..=45).rev().find(|d| values.iter().all(|v| v % d == 0)).unwrap();
        assert_eq!(oracle, 5);
        let mut acc = Multiple::default();
        for v in values {
            acc.merge_from(&Multiple::of(Number::Int(v as i64))).unwrap();
        }
        assert_eq!(acc.emitted(), Some(oracle));
    }

    #[test]
    fn pattern_affixes() {
        let p = Pattern::of("https://a.com/x.jpg").combine(&Pattern::of("https://b.org/y.jpg")).unwrap();
        assert_eq!(p.prefix(), Some("https://"));
        assert_eq!(p.suffix(), Some(".jpg"));
        assert_eq!(p.regex(3).unwrap(), r"^(?:https:\/\/[\s\S]*\.jpg)$");

        let same = Pattern::of("abc").combine(&Pattern::of("abc")).unwrap();
        assert_eq!((same.prefix(), same.suffix()), (Some("abc"), Some("abc")));

        let none = Pattern::of("abc").combine(&Pattern::of("xyz")).unwrap();
        assert_eq!((none.prefix(), none.suffix()), (Some(""), Some("")));
        assert_eq!(none.regex(1), None);
    }

    #[test]
    fn pattern_regex_accepts_overlapping_strings() {
        for words in [vec!["abc"], vec!["abab", "ab"], vec!["aXa", "aa"], vec!["abcd", "abcbcd"]] {
            let mut acc = Pattern::default();
            for w in &words {
                acc.merge_from(&Pattern::of(w)).unwrap();
            }
            let Some(re) = acc.regex(1) else { continue };
            let re = regex::Regex::new(&re).unwrap();
            for w in &words {
                assert!(re.is_match(w), "{re} rejects {w}");
            }
        }
    }

    #[test]
    fn pattern_short_affixes_not_emitted() {
        let p = Pattern::of("ab1").combine(&Pattern::of("ab2")).unwrap();
        assert_eq!(p.prefix(), Some("ab"));
        assert_eq!(p.regex(3), None);
        assert_eq!(p.regex(1).unwrap(), "^ab");
    }

    #[test]
    fn format_merge() {
        assert_eq!(FormatFacet::of("2024-01-31"), FormatFacet::Is(StringFormat::Date));
        let d = FormatFacet::of("2024-01-31");
        assert_eq!(d.combine(&FormatFacet::of("1999-12-01")).unwrap(), d);
        let uri = FormatFacet::of("https://example.com");
        assert_eq!(uri.combine(&FormatFacet::of("BF1gv")).unwrap(), FormatFacet::Conflict);
        assert_eq!(FormatFacet::Unset.combine(&uri).unwrap(), uri);
    }

    #[test]
    fn reservoir_under_capacity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut a = Reservoir::of(100, 1);
        a.merge_with(&Reservoir::of(100, 2), &mut rng).unwrap();
        assert_eq!(a.items(), &[1, 2]);
        assert_eq!(a.total(), 2);
        let mut id = Reservoir::new(100);
        id.merge_with(&a, &mut rng).unwrap();
        assert_eq!(id, a);
    }

    #[test]
    fn reservoir_weighted_merge() {
        // e1 saw 10 values, e2 saw 100; each kept slot should come from e2
        // with probability 100/110.
        let e1 = Reservoir { capacity: 100, total: 10, items: vec![false; 10] };
        let e2 = Reservoir { capacity: 100, total: 100, items: vec![true; 100] };
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let trials = 10_000;
        let mut from_e2 = 0usize;
        for _ in 0..trials {
            let mut m = e1.clone();
            m.merge_with(&e2, &mut rng).unwrap();
            assert_eq!(m.items().len(), 100);
            assert_eq!(m.total(), 110);
            from_e2 += m.items().iter().filter(|&&x| x).count();
        }
        let frac = from_e2 as f64 / (trials * 100) as f64;
        assert!((frac - 10.0 / 11.0).abs() < 0.02, "fraction {frac}");
    }
}
