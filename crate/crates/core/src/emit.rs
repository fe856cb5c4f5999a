//! JSON Schema (draft 2019-09) emission.
//!
//! Standard keywords carry the constraints; everything else a facet knows
//! (samples, counts, sketches, moments) goes under `x-jsonoid-*` keys, which
//! validators ignore.

use serde_json::{json, Map, Value};

use crate::config::{DiscoveryConfig, Equivalence};
use crate::json::Number;
use crate::schema::{ArraySchema, Items, NumberSchema, ObjectSchema, SchemaNode, StringSchema};

pub const SCHEMA_URI: &str = "https://json-schema.org/draft/2019-09/schema";
pub const ANNOTATION_PREFIX: &str = "x-jsonoid-";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmitOptions {
    /// Emit `additionalProperties: false` on objects.
    pub closed: bool,
    /// List every property as required. Under label equivalence each object
    /// node only ever saw one key set, so this is exact and keeps `oneOf`
    /// branches disjoint.
    pub all_required: bool,
    pub pattern_min_length: usize,
    /// Include `x-jsonoid-*` annotations.
    pub annotations: bool,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions { closed: true, all_required: false, pattern_min_length: 3, annotations: true }
    }
}

impl EmitOptions {
    pub fn for_config(cfg: &DiscoveryConfig) -> EmitOptions {
        EmitOptions {
            all_required: cfg.equivalence == Equivalence::Label,
            pattern_min_length: cfg.pattern_min_length,
            ..EmitOptions::default()
        }
    }

    pub fn open(mut self) -> EmitOptions {
        self.closed = false;
        self
    }
}

/// The complete schema document, with the `$schema` header.
pub fn emit_json_schema(node: &SchemaNode, opts: &EmitOptions) -> Value {
    let mut root = fragment(node, opts);
    root.insert("$schema".into(), Value::String(SCHEMA_URI.into()));
    Value::Object(root)
}

/// Pretty-printed emission with two-space indentation and a trailing newline.
pub fn to_pretty_string(schema: &Value) -> String {
    let mut out = serde_json::to_string_pretty(schema).expect("schema values always serialize");
    out.push('\n');
    out
}

/// Compact bytes of a node's emitted fragment under default options; the
/// tie-breaker in canonical branch order.
pub(crate) fn fragment_bytes(node: &SchemaNode) -> String {
    Value::Object(fragment(node, &EmitOptions::default())).to_string()
}

fn fragment(node: &SchemaNode, opts: &EmitOptions) -> Map<String, Value> {
    let mut out = Map::new();
    match node {
        SchemaNode::Any => {}
        SchemaNode::Null => {
            out.insert("type".into(), "null".into());
        }
        SchemaNode::Boolean => {
            out.insert("type".into(), "boolean".into());
        }
        SchemaNode::Number(n) => number(n, opts, &mut out),
        SchemaNode::String(s) => string(s, opts, &mut out),
        SchemaNode::Array(a) => array(a, opts, &mut out),
        SchemaNode::Object(o) => object(o, opts, &mut out),
        SchemaNode::Product { branches } => {
            let keyword = if opts.closed { "oneOf" } else { "anyOf" };
            let alts = branches.iter().map(|b| Value::Object(fragment(b, opts))).collect();
            out.insert(keyword.into(), Value::Array(alts));
        }
    }
    out
}

fn annotate(out: &mut Map<String, Value>, opts: &EmitOptions, name: &str, value: Value) {
    if opts.annotations {
        out.insert(format!("{ANNOTATION_PREFIX}{name}"), value);
    }
}

fn number(n: &NumberSchema, opts: &EmitOptions, out: &mut Map<String, Value>) {
    out.insert("type".into(), if n.integral { "integer" } else { "number" }.into());
    if let Some(range) = &n.range {
        if let (Some(lo), Some(hi)) = (range.min(), range.max()) {
            out.insert("minimum".into(), lo.to_serde());
            out.insert("maximum".into(), hi.to_serde());
        }
    }
    if let Some(g) = n.multiple.as_ref().and_then(|m| m.emitted()) {
        out.insert("multipleOf".into(), g.into());
    }
    if let Some(ex) = &n.examples {
        let mut values: Vec<Number> = ex.items().to_vec();
        values.sort_by(|a, b| a.total_cmp(b));
        let values: Vec<Value> = values.iter().map(Number::to_serde).collect();
        annotate(out, opts, "examples", json!({ "total": ex.total(), "values": values }));
    }
    if let Some(h) = &n.histogram {
        let bins: Vec<Value> = h.bins().iter().map(|b| json!([b.value, b.count])).collect();
        annotate(out, opts, "histogram", json!({ "total": h.total(), "max_bins": h.max_bins(), "bins": bins }));
    }
    if let Some(stats) = &n.stats {
        annotate(out, opts, "stats", serde_json::to_value(stats.report()).expect("report serializes"));
    }
    sketches(&n.bloom, &n.hll, opts, out);
}

fn string(s: &StringSchema, opts: &EmitOptions, out: &mut Map<String, Value>) {
    out.insert("type".into(), "string".into());
    if let Some(len) = &s.length {
        if let (Some(lo), Some(hi)) = (len.min(), len.max()) {
            out.insert("minLength".into(), (*lo).into());
            out.insert("maxLength".into(), (*hi).into());
        }
    }
    if let Some(re) = s.pattern.as_ref().and_then(|p| p.regex(opts.pattern_min_length)) {
        out.insert("pattern".into(), re.into());
    }
    if let Some(f) = s.format.as_ref().and_then(|f| f.format()) {
        out.insert("format".into(), f.name().into());
    }
    if let Some(ex) = &s.examples {
        let mut values: Vec<String> = ex.items().to_vec();
        values.sort();
        annotate(out, opts, "examples", json!({ "total": ex.total(), "values": values }));
    }
    sketches(&s.bloom, &s.hll, opts, out);
}

fn sketches(
    bloom: &Option<crate::pds::BloomFilter>,
    hll: &Option<crate::pds::HyperLogLog>,
    opts: &EmitOptions,
    out: &mut Map<String, Value>,
) {
    if let Some(b) = bloom {
        annotate(out, opts, "bloom", serde_json::to_value(b).expect("bloom serializes"));
    }
    if let Some(h) = hll {
        let mut v = serde_json::to_value(h).expect("hll serializes");
        v["estimate"] = json!(h.estimate());
        annotate(out, opts, "hll", v);
    }
}

fn array(a: &ArraySchema, opts: &EmitOptions, out: &mut Map<String, Value>) {
    out.insert("type".into(), "array".into());
    match &a.items {
        Items::Unobserved => {}
        Items::List(item) => {
            out.insert("items".into(), Value::Object(fragment(item, opts)));
        }
        Items::Tuple(positions) => {
            let items = positions.iter().map(|p| Value::Object(fragment(p, opts))).collect();
            out.insert("items".into(), Value::Array(items));
            out.insert("additionalItems".into(), false.into());
        }
    }
    if let Some(len) = &a.length {
        if let (Some(lo), Some(hi)) = (len.min(), len.max()) {
            out.insert("minItems".into(), (*lo).into());
            out.insert("maxItems".into(), (*hi).into());
        }
    }
    if a.unique.is_some_and(|u| u.is_unique) {
        out.insert("uniqueItems".into(), true.into());
    }
}

fn object(o: &ObjectSchema, opts: &EmitOptions, out: &mut Map<String, Value>) {
    out.insert("type".into(), "object".into());
    let props: Map<String, Value> =
        o.properties.iter().map(|(k, v)| (k.clone(), Value::Object(fragment(v, opts)))).collect();
    out.insert("properties".into(), Value::Object(props));
    let required: Vec<Value> = if opts.all_required {
        o.properties.keys().map(|k| Value::String(k.clone())).collect()
    } else {
        o.required
            .as_ref()
            .and_then(|r| r.keys())
            .map(|keys| keys.iter().filter(|k| o.properties.contains_key(*k)).map(|k| Value::String(k.clone())).collect())
            .unwrap_or_default()
    };
    if !required.is_empty() {
        out.insert("required".into(), Value::Array(required));
    }
    if opts.closed {
        out.insert("additionalProperties".into(), false.into());
    }
    if let Some(deps) = &o.dependencies {
        let groups = deps.dependents();
        if !groups.is_empty() {
            let map: Map<String, Value> = groups.into_iter().map(|(k, v)| (k, json!(v))).collect();
            out.insert("dependentRequired".into(), Value::Object(map));
        }
    }
    if let Some(counts) = &o.counts {
        annotate(out, opts, "attribute-counts", json!({ "total": counts.total, "counts": counts.counts }));
    }
}
