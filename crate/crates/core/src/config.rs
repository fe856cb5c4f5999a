//! Discovery configuration: which facets to maintain and their parameters.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

bitflags::bitflags! {
    /// The set of facets maintained during discovery.
    #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
    pub struct FacetSet: u32 {
        const OBJECT_TYPES = 1 << 0;
        const ARRAY_TYPE = 1 << 1;
        const REQUIRED = 1 << 2;
        const ATTRIBUTE_COUNTS = 1 << 3;
        const DEPENDENCIES = 1 << 4;
        const UNIQUE = 1 << 5;
        const NUMBER_RANGE = 1 << 6;
        const STRING_LENGTH = 1 << 7;
        const ARRAY_LENGTH = 1 << 8;
        const MULTIPLE = 1 << 9;
        const PATTERN = 1 << 10;
        const FORMAT = 1 << 11;
        const EXAMPLES = 1 << 12;
        const BLOOM = 1 << 13;
        const HLL = 1 << 14;
        const HISTOGRAM = 1 << 15;
        const STATS = 1 << 16;

        const MAX_MIN = Self::NUMBER_RANGE.bits() | Self::STRING_LENGTH.bits() | Self::ARRAY_LENGTH.bits();
        /// Structure only.
        const MIN = Self::OBJECT_TYPES.bits() | Self::ARRAY_TYPE.bits();
        /// Facets expressible with standard JSON Schema keywords, plus examples.
        const SIMPLE = Self::MIN.bits() | Self::MAX_MIN.bits() | Self::MULTIPLE.bits() | Self::PATTERN.bits()
            | Self::FORMAT.bits() | Self::EXAMPLES.bits() | Self::REQUIRED.bits() | Self::DEPENDENCIES.bits()
            | Self::UNIQUE.bits();
        const ALL = Self::SIMPLE.bits() | Self::ATTRIBUTE_COUNTS.bits() | Self::BLOOM.bits() | Self::HLL.bits()
            | Self::HISTOGRAM.bits() | Self::STATS.bits();
        /// Facets whose merge involves randomness or floating-point order.
        const NONDETERMINISTIC = Self::EXAMPLES.bits() | Self::HISTOGRAM.bits() | Self::STATS.bits();
    }
}

const FACET_NAMES: &[(&str, FacetSet)] = &[
    ("objecttypes", FacetSet::OBJECT_TYPES),
    ("arraytype", FacetSet::ARRAY_TYPE),
    ("required", FacetSet::REQUIRED),
    ("attributecounts", FacetSet::ATTRIBUTE_COUNTS),
    ("dependencies", FacetSet::DEPENDENCIES),
    ("unique", FacetSet::UNIQUE),
    ("maxmin", FacetSet::MAX_MIN),
    ("maxmin-number", FacetSet::NUMBER_RANGE),
    ("maxmin-string-length", FacetSet::STRING_LENGTH),
    ("maxmin-array-length", FacetSet::ARRAY_LENGTH),
    ("multiple", FacetSet::MULTIPLE),
    ("pattern", FacetSet::PATTERN),
    ("format", FacetSet::FORMAT),
    ("examples", FacetSet::EXAMPLES),
    ("bloom", FacetSet::BLOOM),
    ("hll", FacetSet::HLL),
    ("histogram", FacetSet::HISTOGRAM),
    ("stats", FacetSet::STATS),
];

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown monoid {0:?}; expected min, simple, all, or a comma-separated list of facet names")]
pub struct UnknownFacet(pub String);

impl FromStr for FacetSet {
    type Err = UnknownFacet;

    /// Parses a comma-separated list of facet names and the named sets `min`,
    /// `simple` and `all`. Object and array typing are always included.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut set = FacetSet::MIN;
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let lower = part.to_ascii_lowercase();
            set |= match lower.as_str() {
                "min" | "minimum" => FacetSet::MIN,
                "simple" => FacetSet::SIMPLE,
                "all" => FacetSet::ALL,
                _ => FACET_NAMES.iter().find(|(name, _)| *name == lower).ok_or_else(|| UnknownFacet(part.to_owned()))?.1,
            };
        }
        Ok(set)
    }
}

impl FacetSet {
    /// `min`, `simple` or `all` when the set is one of those, else the
    /// comma-separated facet names.
    pub fn label(&self) -> String {
        if *self == FacetSet::MIN {
            return "min".into();
        }
        if *self == FacetSet::SIMPLE {
            return "simple".into();
        }
        if *self == FacetSet::ALL {
            return "all".into();
        }
        FACET_NAMES
            .iter()
            .filter(|(name, _)| !name.starts_with("maxmin-") || !self.contains(FacetSet::MAX_MIN))
            .filter(|(_, f)| f.bits().count_ones() == 1 || *f == FacetSet::MAX_MIN)
            .filter(|(_, f)| self.contains(*f))
            .map(|(name, _)| *name)
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// When two schemas of the same kind are merged rather than kept as
/// alternatives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equivalence {
    /// Same basic type.
    #[default]
    Kind,
    /// Same basic type and, for objects, the same key set.
    Label,
}

impl FromStr for Equivalence {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kind" => Ok(Equivalence::Kind),
            "label" => Ok(Equivalence::Label),
            other => Err(format!("unknown equivalence {other:?}; expected kind or label")),
        }
    }
}

impl fmt::Display for Equivalence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equivalence::Kind => "kind",
            Equivalence::Label => "label",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscoveryConfig {
    pub facets: FacetSet,
    pub equivalence: Equivalence,
    pub reservoir_capacity: usize,
    pub histogram_max_bins: usize,
    pub bloom_bits: usize,
    pub bloom_hashes: u32,
    pub hll_precision: u8,
    /// Shortest prefix/suffix worth emitting as a `pattern`.
    pub pattern_min_length: usize,
    pub seed: u64,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            facets: FacetSet::ALL,
            equivalence: Equivalence::Kind,
            reservoir_capacity: 100,
            histogram_max_bins: 100,
            bloom_bits: 65_536,
            bloom_hashes: 7,
            hll_precision: 12,
            pattern_min_length: 3,
            seed: 0,
        }
    }
}

impl DiscoveryConfig {
    pub fn with_facets(facets: FacetSet) -> DiscoveryConfig {
        DiscoveryConfig { facets, ..DiscoveryConfig::default() }
    }

    pub fn equivalence(mut self, equivalence: Equivalence) -> DiscoveryConfig {
        self.equivalence = equivalence;
        self
    }

    pub fn seed(mut self, seed: u64) -> DiscoveryConfig {
        self.seed = seed;
        self
    }

    pub fn has(&self, facet: FacetSet) -> bool {
        self.facets.contains(facet)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_sets_nest() {
        assert!(FacetSet::SIMPLE.contains(FacetSet::MIN));
        assert!(FacetSet::ALL.contains(FacetSet::SIMPLE));
        assert!(!FacetSet::SIMPLE.contains(FacetSet::ATTRIBUTE_COUNTS));
        assert_eq!((FacetSet::ALL - FacetSet::SIMPLE).bits().count_ones(), 5);
    }

    #[test]
    fn parse_sets() {
        assert_eq!("min".parse::<FacetSet>().unwrap(), FacetSet::MIN);
        assert_eq!("ALL".parse::<FacetSet>().unwrap(), FacetSet::ALL);
        let list: FacetSet = "required, maxmin-string-length".parse().unwrap();
        assert_eq!(list, FacetSet::MIN | FacetSet::REQUIRED | FacetSet::STRING_LENGTH);
        assert_eq!("min,required".parse::<FacetSet>().unwrap(), FacetSet::MIN | FacetSet::REQUIRED);
        assert_eq!("simple, hll".parse::<FacetSet>().unwrap(), FacetSet::SIMPLE | FacetSet::HLL);
        assert!("min,bogus".parse::<FacetSet>().is_err());
        assert!("bogus".parse::<FacetSet>().is_err());
    }

    #[test]
    fn labels_round_trip() {
        for set in [
            FacetSet::MIN,
            FacetSet::SIMPLE,
            FacetSet::ALL,
            FacetSet::MIN | FacetSet::HLL | FacetSet::BLOOM,
            FacetSet::MIN | FacetSet::MAX_MIN,
            FacetSet::MIN | FacetSet::STRING_LENGTH,
        ] {
            assert_eq!(set.label().parse::<FacetSet>().unwrap(), set, "{}", set.label());
        }
    }
}
