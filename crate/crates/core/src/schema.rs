//! The recursive schema model: construction from a single document and
//! merging under an equivalence relation.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{DiscoveryConfig, Equivalence, FacetSet};
use crate::json::{JsonValue, Number, MAX_DEPTH};
use crate::monoid::{merge_optional, MergeError};
use crate::pds::{BloomFilter, HyperLogLog, StreamingHistogram};
use crate::stats::Moments;
use crate::structural::{AttributeCounts, Dependencies, Required, Unique};
use crate::value::{FormatFacet, MaxMin, Multiple, Pattern, Reservoir};

#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("document nesting exceeds {MAX_DEPTH} levels")]
    DepthExceeded,
    #[error(transparent)]
    Merge(#[from] MergeError),
    #[error("discovery worker failed: {0}")]
    WorkerPanic(String),
}

/// Basic kind of a schema node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Any,
    Null,
    Boolean,
    Number,
    String,
    Array,
    Object,
    Product,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Any => "any",
            Kind::Null => "null",
            Kind::Boolean => "boolean",
            Kind::Number => "number",
            Kind::String => "string",
            Kind::Array => "array",
            Kind::Object => "object",
            Kind::Product => "product",
        }
    }
}

/// A schema node: a basic kind plus the facets enabled for it.
///
/// `Any` is the schema of nothing observed yet (for instance the items of
/// arrays that were always empty) and is the identity of [`SchemaNode::merge`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SchemaNode {
    Any,
    Null,
    Boolean,
    Number(NumberSchema),
    String(StringSchema),
    Array(ArraySchema),
    Object(ObjectSchema),
    /// Non-mergeable alternatives, none of which is itself a product.
    Product { branches: Vec<SchemaNode> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumberSchema {
    /// Every observed value was integral.
    pub integral: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<MaxMin<Number>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiple: Option<Multiple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub examples: Option<Reservoir<Number>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bloom: Option<BloomFilter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hll: Option<HyperLogLog>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub histogram: Option<StreamingHistogram>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<Moments>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StringSchema {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<MaxMin<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<Pattern>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<FormatFacet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub examples: Option<Reservoir<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bloom: Option<BloomFilter>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hll: Option<HyperLogLog>,
}

/// Element typing for arrays.
///
/// While every observed array had the same length the schema is kept per
/// position (`Tuple`); the first length disagreement collapses it to a
/// single item schema (`List`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Items {
    Unobserved,
    Tuple(Vec<SchemaNode>),
    List(Box<SchemaNode>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArraySchema {
    pub items: Items,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<MaxMin<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unique: Option<Unique>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectSchema {
    pub properties: BTreeMap<String, SchemaNode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub required: Option<Required>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<AttributeCounts>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dependencies: Option<Dependencies>,
}

/// State threaded through merges: the equivalence relation and the random
/// source used by sampling facets.
pub struct MergeContext {
    pub equivalence: Equivalence,
    rng: ChaCha8Rng,
}

impl MergeContext {
    pub fn new(equivalence: Equivalence, seed: u64) -> MergeContext {
        Self::with_stream(equivalence, seed, 0)
    }

    /// A context whose random stream is independent of every other
    /// `stream` value under the same seed.
    pub fn with_stream(equivalence: Equivalence, seed: u64, stream: u64) -> MergeContext {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        MergeContext { equivalence, rng }
    }

    pub fn for_config(cfg: &DiscoveryConfig) -> MergeContext {
        Self::new(cfg.equivalence, cfg.seed)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Builds the schema of a single document.
pub fn discover_document(doc: &JsonValue, cfg: &DiscoveryConfig) -> Result<SchemaNode, SchemaError> {
    let mut ctx = MergeContext::for_config(cfg);
    SchemaNode::discover(doc, cfg, &mut ctx)
}

/// Merges two schemas under `equivalence`. Sampling facets draw from a
/// generator seeded with `seed`.
pub fn merge_schemas(
    a: SchemaNode,
    b: SchemaNode,
    equivalence: Equivalence,
    seed: u64,
) -> Result<SchemaNode, SchemaError> {
    let mut ctx = MergeContext::new(equivalence, seed);
    Ok(a.merge(b, &mut ctx)?)
}

impl SchemaNode {
    pub fn kind(&self) -> Kind {
        match self {
            SchemaNode::Any => Kind::Any,
            SchemaNode::Null => Kind::Null,
            SchemaNode::Boolean => Kind::Boolean,
            SchemaNode::Number(_) => Kind::Number,
            SchemaNode::String(_) => Kind::String,
            SchemaNode::Array(_) => Kind::Array,
            SchemaNode::Object(_) => Kind::Object,
            SchemaNode::Product { .. } => Kind::Product,
        }
    }

    pub fn discover(doc: &JsonValue, cfg: &DiscoveryConfig, ctx: &mut MergeContext) -> Result<SchemaNode, SchemaError> {
        Self::discover_at(doc, cfg, ctx, 0)
    }

    fn discover_at(
        doc: &JsonValue,
        cfg: &DiscoveryConfig,
        ctx: &mut MergeContext,
        depth: usize,
    ) -> Result<SchemaNode, SchemaError> {
        if depth > MAX_DEPTH {
            return Err(SchemaError::DepthExceeded);
        }
        Ok(match doc {
            JsonValue::Null => SchemaNode::Null,
            JsonValue::Bool(_) => SchemaNode::Boolean,
            JsonValue::Number(n) => SchemaNode::Number(NumberSchema::of(*n, cfg)),
            JsonValue::Str(s) => SchemaNode::String(StringSchema::of(s, cfg)),
            JsonValue::Arr(values) => {
                let items = if values.is_empty() {
                    Items::List(Box::new(SchemaNode::Any))
                } else {
                    Items::Tuple(
                        values
                            .iter()
                            .map(|v| Self::discover_at(v, cfg, ctx, depth + 1))
                            .collect::<Result<_, _>>()?,
                    )
                };
                SchemaNode::Array(ArraySchema {
                    items,
                    length: cfg.has(FacetSet::ARRAY_LENGTH).then(|| MaxMin::of(values.len() as u64)),
                    unique: cfg.has(FacetSet::UNIQUE).then(|| Unique::of(values)),
                })
            }
            JsonValue::Obj(map) => {
                let mut properties = BTreeMap::new();
                for (k, v) in map {
                    properties.insert(k.clone(), Self::discover_at(v, cfg, ctx, depth + 1)?);
                }
                SchemaNode::Object(ObjectSchema {
                    required: cfg.has(FacetSet::REQUIRED).then(|| Required::of(map.keys())),
                    counts: cfg.has(FacetSet::ATTRIBUTE_COUNTS).then(|| AttributeCounts::of(map.keys())),
                    dependencies: cfg.has(FacetSet::DEPENDENCIES).then(|| Dependencies::of(map.keys())),
                    properties,
                })
            }
        })
    }

    /// Whether two non-product schemas merge into one node rather than
    /// forming a product.
    pub fn equivalent(&self, other: &SchemaNode, equivalence: Equivalence) -> bool {
        match (self, other) {
            (SchemaNode::Object(a), SchemaNode::Object(b)) => match equivalence {
                Equivalence::Kind => true,
                Equivalence::Label => a.properties.keys().eq(b.properties.keys()),
            },
            (a, b) => a.kind() == b.kind() && a.kind() != Kind::Product,
        }
    }

    /// Merges two schemas built under the same configuration.
    ///
    /// Equivalent schemas combine facet by facet; otherwise the result is a
    /// product. A schema merged into a product joins the first equivalent
    /// branch or becomes a new one.
    pub fn merge(self, other: SchemaNode, ctx: &mut MergeContext) -> Result<SchemaNode, MergeError> {
        match (self, other) {
            (SchemaNode::Any, x) | (x, SchemaNode::Any) => Ok(x),
            (SchemaNode::Product { mut branches }, SchemaNode::Product { branches: theirs }) => {
                for b in theirs {
                    insert_branch(&mut branches, b, ctx)?;
                }
                Ok(SchemaNode::Product { branches })
            }
            (SchemaNode::Product { mut branches }, x) | (x, SchemaNode::Product { mut branches }) => {
                insert_branch(&mut branches, x, ctx)?;
                Ok(SchemaNode::Product { branches })
            }
            (a, b) if a.equivalent(&b, ctx.equivalence) => a.merge_equivalent(b, ctx),
            (a, b) => Ok(SchemaNode::Product { branches: vec![a, b] }),
        }
    }

    fn merge_equivalent(self, other: SchemaNode, ctx: &mut MergeContext) -> Result<SchemaNode, MergeError> {
        Ok(match (self, other) {
            (SchemaNode::Null, SchemaNode::Null) => SchemaNode::Null,
            (SchemaNode::Boolean, SchemaNode::Boolean) => SchemaNode::Boolean,
            (SchemaNode::Number(mut a), SchemaNode::Number(b)) => {
                a.merge_from(&b, ctx)?;
                SchemaNode::Number(a)
            }
            (SchemaNode::String(mut a), SchemaNode::String(b)) => {
                a.merge_from(&b, ctx)?;
                SchemaNode::String(a)
            }
            (SchemaNode::Array(a), SchemaNode::Array(b)) => SchemaNode::Array(a.merge(b, ctx)?),
            (SchemaNode::Object(a), SchemaNode::Object(b)) => SchemaNode::Object(a.merge(b, ctx)?),
            (a, b) => {
                return Err(MergeError::new("schema", format!("{} and {} are not equivalent", a.kind().name(), b.kind().name())))
            }
        })
    }

    /// Sorts product branches by kind name and then by emitted bytes.
    /// Object properties are already kept in key order.
    pub fn canonicalize(self) -> SchemaNode {
        match self {
            SchemaNode::Product { branches } => {
                let mut keyed: Vec<(&'static str, String, SchemaNode)> = branches
                    .into_iter()
                    .map(SchemaNode::canonicalize)
                    .map(|b| (b.kind().name(), crate::emit::fragment_bytes(&b), b))
                    .collect();
                keyed.sort_by(|x, y| (x.0, &x.1).cmp(&(y.0, &y.1)));
                SchemaNode::Product { branches: keyed.into_iter().map(|(_, _, b)| b).collect() }
            }
            SchemaNode::Array(mut a) => {
                a.items = match a.items {
                    Items::Tuple(nodes) => Items::Tuple(nodes.into_iter().map(SchemaNode::canonicalize).collect()),
                    Items::List(node) => Items::List(Box::new(node.canonicalize())),
                    Items::Unobserved => Items::Unobserved,
                };
                SchemaNode::Array(a)
            }
            SchemaNode::Object(mut o) => {
                o.properties = o.properties.into_iter().map(|(k, v)| (k, v.canonicalize())).collect();
                SchemaNode::Object(o)
            }
            other => other,
        }
    }

    /// Branches of a product, or the node itself.
    pub fn alternatives(&self) -> &[SchemaNode] {
        match self {
            SchemaNode::Product { branches } => branches,
            other => std::slice::from_ref(other),
        }
    }
}

fn insert_branch(branches: &mut Vec<SchemaNode>, node: SchemaNode, ctx: &mut MergeContext) -> Result<(), MergeError> {
    if let SchemaNode::Any = node {
        return Ok(());
    }
    match branches.iter().position(|b| b.equivalent(&node, ctx.equivalence)) {
        Some(i) => {
            let existing = std::mem::replace(&mut branches[i], SchemaNode::Any);
            branches[i] = existing.merge_equivalent(node, ctx)?;
        }
        None => branches.push(node),
    }
    Ok(())
}

fn merge_examples<T: Clone>(
    into: &mut Option<Reservoir<T>>,
    other: &Option<Reservoir<T>>,
    ctx: &mut MergeContext,
) -> Result<(), MergeError> {
    match (into.as_mut(), other) {
        (Some(a), Some(b)) => a.merge_with(b, ctx.rng()),
        (None, None) => Ok(()),
        _ => Err(MergeError::new("examples", "facet enabled on only one side")),
    }
}

impl NumberSchema {
    pub fn of(n: Number, cfg: &DiscoveryConfig) -> NumberSchema {
        let x = n.as_f64();
        NumberSchema {
            integral: n.is_integral(),
            range: cfg.has(FacetSet::NUMBER_RANGE).then(|| MaxMin::of(n)),
            multiple: cfg.has(FacetSet::MULTIPLE).then(|| Multiple::of(n)),
            examples: cfg.has(FacetSet::EXAMPLES).then(|| Reservoir::of(cfg.reservoir_capacity, n)),
            bloom: cfg.has(FacetSet::BLOOM).then(|| {
                let mut f = BloomFilter::new(cfg.bloom_bits, cfg.bloom_hashes);
                f.insert(n);
                f
            }),
            hll: cfg.has(FacetSet::HLL).then(|| {
                let mut h = HyperLogLog::new(cfg.hll_precision);
                h.add(n);
                h
            }),
            histogram: cfg.has(FacetSet::HISTOGRAM).then(|| {
                let mut h = StreamingHistogram::new(cfg.histogram_max_bins);
                h.add(x);
                h
            }),
            stats: if cfg.has(FacetSet::STATS) { Some(Moments::of(x).unwrap_or_default()) } else { None },
        }
    }

    fn merge_from(&mut self, other: &NumberSchema, ctx: &mut MergeContext) -> Result<(), MergeError> {
        self.integral &= other.integral;
        merge_optional(&mut self.range, &other.range, "maxmin")?;
        merge_optional(&mut self.multiple, &other.multiple, "multiple")?;
        merge_examples(&mut self.examples, &other.examples, ctx)?;
        merge_optional(&mut self.bloom, &other.bloom, "bloom")?;
        merge_optional(&mut self.hll, &other.hll, "hll")?;
        merge_optional(&mut self.histogram, &other.histogram, "histogram")?;
        merge_optional(&mut self.stats, &other.stats, "stats")?;
        Ok(())
    }
}

impl StringSchema {
    pub fn of(s: &str, cfg: &DiscoveryConfig) -> StringSchema {
        StringSchema {
            length: cfg.has(FacetSet::STRING_LENGTH).then(|| MaxMin::of(s.chars().count() as u64)),
            pattern: cfg.has(FacetSet::PATTERN).then(|| Pattern::of(s)),
            format: cfg.has(FacetSet::FORMAT).then(|| FormatFacet::of(s)),
            examples: cfg.has(FacetSet::EXAMPLES).then(|| Reservoir::of(cfg.reservoir_capacity, s.to_owned())),
            bloom: cfg.has(FacetSet::BLOOM).then(|| {
                let mut f = BloomFilter::new(cfg.bloom_bits, cfg.bloom_hashes);
                f.insert(s);
                f
            }),
            hll: cfg.has(FacetSet::HLL).then(|| {
                let mut h = HyperLogLog::new(cfg.hll_precision);
                h.add(s);
                h
            }),
        }
    }

    fn merge_from(&mut self, other: &StringSchema, ctx: &mut MergeContext) -> Result<(), MergeError> {
        merge_optional(&mut self.length, &other.length, "maxmin")?;
        merge_optional(&mut self.pattern, &other.pattern, "pattern")?;
        merge_optional(&mut self.format, &other.format, "format")?;
        merge_examples(&mut self.examples, &other.examples, ctx)?;
        merge_optional(&mut self.bloom, &other.bloom, "bloom")?;
        merge_optional(&mut self.hll, &other.hll, "hll")?;
        Ok(())
    }
}

impl Items {
    pub fn merge(self, other: Items, ctx: &mut MergeContext) -> Result<Items, MergeError> {
        Ok(match (self, other) {
            (Items::Unobserved, x) | (x, Items::Unobserved) => x,
            (Items::Tuple(a), Items::Tuple(b)) if a.len() == b.len() => Items::Tuple(
                a.into_iter().zip(b).map(|(x, y)| x.merge(y, ctx)).collect::<Result<_, _>>()?,
            ),
            (Items::List(a), Items::List(b)) => Items::List(Box::new(a.merge(*b, ctx)?)),
            (a, b) => {
                let mut item = SchemaNode::Any;
                for node in a.into_nodes().into_iter().chain(b.into_nodes()) {
                    item = item.merge(node, ctx)?;
                }
                Items::List(Box::new(item))
            }
        })
    }

    fn into_nodes(self) -> Vec<SchemaNode> {
        match self {
            Items::Unobserved => Vec::new(),
            Items::Tuple(nodes) => nodes,
            Items::List(node) => vec![*node],
        }
    }
}

impl ArraySchema {
    fn merge(self, other: ArraySchema, ctx: &mut MergeContext) -> Result<ArraySchema, MergeError> {
        let ArraySchema { items, mut length, mut unique } = self;
        merge_optional(&mut length, &other.length, "maxmin")?;
        merge_optional(&mut unique, &other.unique, "unique")?;
        Ok(ArraySchema { items: items.merge(other.items, ctx)?, length, unique })
    }
}

impl ObjectSchema {
    fn merge(mut self, other: ObjectSchema, ctx: &mut MergeContext) -> Result<ObjectSchema, MergeError> {
        merge_optional(&mut self.required, &other.required, "required")?;
        merge_optional(&mut self.counts, &other.counts, "attributecounts")?;
        merge_optional(&mut self.dependencies, &other.dependencies, "dependencies")?;
        for (key, theirs) in other.properties {
            let merged = match self.properties.remove(&key) {
                Some(mine) => mine.merge(theirs, ctx)?,
                None => theirs,
            };
            self.properties.insert(key, merged);
        }
        Ok(self)
    }
}
