//! Analyses over a discovered schema: key suggestions from sketches,
//! per-value outlier detection, and histogram distance.

use serde::Serialize;
use serde_json::{json, Value};

use crate::json::{escape_pointer_token, JsonValue};
use crate::pds::{BloomFilter, HyperLogLog, StreamingHistogram};
use crate::schema::{Items, SchemaNode};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AnalysisError {
    #[error("analysis unavailable: schema was discovered without the {0} facet")]
    MissingFacet(&'static str),
    #[error("histogram is empty")]
    EmptyHistogram,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    PrimaryKey,
    ForeignKey,
}

/// One suggested key constraint, serialized as `{path, category, detail}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintSuggestion {
    pub path: String,
    pub category: ConstraintKind,
    pub detail: Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutlierCategory {
    NumericZscore,
    LengthBound,
    FormatMismatch,
    UnknownAttribute,
    RareAttribute,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutlierReport {
    pub path: String,
    pub category: OutlierCategory,
    pub detail: Value,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutlierThresholds {
    pub z_max: f64,
    pub f_min: f64,
}

impl Default for OutlierThresholds {
    fn default() -> Self {
        OutlierThresholds { z_max: 3.0, f_min: 0.01 }
    }
}

/// Standard errors of slack allowed between an HLL estimate and the
/// document count.
pub const PK_TOLERANCE_SIGMAS: f64 = 2.0;

struct Leaf<'a> {
    path: String,
    bloom: Option<&'a BloomFilter>,
    hll: Option<&'a HyperLogLog>,
    /// Present in every document, at most once.
    always_present: bool,
}

/// Collects string and number leaves. `always` tracks whether the node
/// occurs exactly once in every document.
fn leaves<'a>(node: &'a SchemaNode, path: String, always: bool, out: &mut Vec<Leaf<'a>>) {
    match node {
        SchemaNode::Number(n) => out.push(Leaf { path, bloom: n.bloom.as_ref(), hll: n.hll.as_ref(), always_present: always }),
        SchemaNode::String(s) => out.push(Leaf { path, bloom: s.bloom.as_ref(), hll: s.hll.as_ref(), always_present: always }),
        SchemaNode::Product { branches } => {
            for b in branches {
                leaves(b, path.clone(), false, out);
            }
        }
        SchemaNode::Array(a) => match &a.items {
            Items::List(item) => leaves(item, format!("{path}/*"), false, out),
            Items::Tuple(items) => {
                for (i, item) in items.iter().enumerate() {
                    leaves(item, format!("{path}/{i}"), false, out);
                }
            }
            Items::Unobserved => {}
        },
        SchemaNode::Object(o) => {
            for (key, child) in &o.properties {
                let present = always
                    && match (&o.counts, &o.required) {
                        (Some(c), _) => c.count(key) == c.total,
                        (None, Some(r)) => r.contains(key),
                        (None, None) => false,
                    };
                leaves(child, format!("{path}/{}", escape_pointer_token(key)), present, out);
            }
        }
        SchemaNode::Any | SchemaNode::Null | SchemaNode::Boolean => {}
    }
}

/// Suggests attributes whose estimated distinct count matches the number of
/// documents, among attributes present in every document.
///
/// A path qualifies when `|estimate - total_docs| <= 2 * (1.04 / sqrt(2^p)) * total_docs`.
/// Suggestions are ranked by relative gap, smallest first.
pub fn suggest_primary_keys(schema: &SchemaNode, total_docs: u64) -> Result<Vec<ConstraintSuggestion>, AnalysisError> {
    let mut found = Vec::new();
    leaves(schema, String::new(), true, &mut found);
    if found.iter().any(|l| l.hll.is_none()) {
        return Err(AnalysisError::MissingFacet("hll"));
    }
    if total_docs == 0 {
        return Ok(Vec::new());
    }
    let n = total_docs as f64;
    let mut ranked: Vec<(f64, ConstraintSuggestion)> = found
        .iter()
        .filter(|l| l.always_present)
        .filter_map(|l| {
            let hll = l.hll?;
            let estimate = hll.estimate();
            let tolerance = PK_TOLERANCE_SIGMAS * hll.standard_error() * n;
            let gap = (estimate - n).abs();
            (gap <= tolerance).then(|| {
                let detail = json!({ "estimate": estimate, "total": total_docs, "tolerance": tolerance });
                (gap / n, ConstraintSuggestion { path: l.path.clone(), category: ConstraintKind::PrimaryKey, detail })
            })
        })
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.path.cmp(&b.1.path)));
    Ok(ranked.into_iter().map(|(_, s)| s).collect())
}

/// Suggests inclusion dependencies `A -> B` between value paths whose Bloom
/// filter bits are a subset. Empty filters are skipped. Ranked by the ratio
/// of fill ratios, largest first.
pub fn suggest_foreign_keys(schema: &SchemaNode) -> Result<Vec<ConstraintSuggestion>, AnalysisError> {
    let mut found = Vec::new();
    leaves(schema, String::new(), true, &mut found);
    if found.iter().any(|l| l.bloom.is_none()) {
        return Err(AnalysisError::MissingFacet("bloom"));
    }
    let filters: Vec<(&str, &BloomFilter)> =
        found.iter().filter_map(|l| Some((l.path.as_str(), l.bloom?))).filter(|(_, b)| !b.is_empty()).collect();
    let mut ranked: Vec<(f64, ConstraintSuggestion)> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (a_path, a) in &filters {
        for (b_path, b) in &filters {
            if a_path == b_path || !a.is_subset_of(b).unwrap_or(false) || !seen.insert((*a_path, *b_path)) {
                continue;
            }
            let (fa, fb) = (a.fill_ratio(), b.fill_ratio());
            let ratio = if fb > 0.0 { fa / fb } else { 0.0 };
            let detail = json!({
                "target": b_path,
                "subset_bits": true,
                "fill_ratio": fa,
                "target_fill_ratio": fb,
            });
            ranked.push((ratio, ConstraintSuggestion { path: (*a_path).to_owned(), category: ConstraintKind::ForeignKey, detail }));
        }
    }
    ranked.sort_by(|x, y| {
        y.0.total_cmp(&x.0)
            .then_with(|| x.1.path.cmp(&y.1.path))
            .then_with(|| x.1.detail["target"].as_str().cmp(&y.1.detail["target"].as_str()))
    });
    Ok(ranked.into_iter().map(|(_, s)| s).collect())
}

/// Walks `doc` against `schema` and reports unusual values and attributes.
///
/// A numeric value is reported when its z-score exceeds `z_max` and it also
/// lies outside the observed range (when that range is known), so values
/// that were part of the training data are never flagged.
pub fn detect_outliers(schema: &SchemaNode, doc: &JsonValue, thresholds: &OutlierThresholds) -> Vec<OutlierReport> {
    let mut out = Vec::new();
    walk(schema, doc, &mut String::new(), thresholds, &mut out);
    out
}

fn report(out: &mut Vec<OutlierReport>, path: &str, category: OutlierCategory, detail: Value) {
    out.push(OutlierReport { path: path.to_owned(), category, detail });
}

/// The product branch a value would be checked against.
fn pick_branch<'a>(branches: &'a [SchemaNode], doc: &JsonValue) -> Option<&'a SchemaNode> {
    let same_kind = |b: &&SchemaNode| match (b, doc) {
        (SchemaNode::Null, JsonValue::Null)
        | (SchemaNode::Boolean, JsonValue::Bool(_))
        | (SchemaNode::Number(_), JsonValue::Number(_))
        | (SchemaNode::String(_), JsonValue::Str(_))
        | (SchemaNode::Array(_), JsonValue::Arr(_))
        | (SchemaNode::Object(_), JsonValue::Obj(_)) => true,
        _ => false,
    };
    if let JsonValue::Obj(map) = doc {
        let exact = branches.iter().find(|b| match b {
            SchemaNode::Object(o) => o.properties.len() == map.len() && map.keys().all(|k| o.properties.contains_key(k)),
            _ => false,
        });
        if exact.is_some() {
            return exact;
        }
    }
    branches.iter().find(same_kind)
}

fn walk(node: &SchemaNode, doc: &JsonValue, path: &mut String, t: &OutlierThresholds, out: &mut Vec<OutlierReport>) {
    match (node, doc) {
        (SchemaNode::Product { branches }, _) => {
            if let Some(b) = pick_branch(branches, doc) {
                walk(b, doc, path, t, out);
            }
        }
        (SchemaNode::Number(n), JsonValue::Number(v)) => {
            let Some(report_stats) = n.stats.map(|s| s.report()) else { return };
            let (Some(mean), Some(sd)) = (report_stats.mean, report_stats.stddev) else { return };
            if sd <= 0.0 {
                return;
            }
            let z = (v.as_f64() - mean) / sd;
            let outside = n.range.as_ref().is_none_or(|r| !r.contains(v));
            if z.abs() > t.z_max && outside {
                report(out, path, OutlierCategory::NumericZscore, json!({ "value": v.to_serde(), "z": z, "z_max": t.z_max, "mean": mean, "stddev": sd }));
            }
        }
        (SchemaNode::String(s), JsonValue::Str(v)) => {
            if let Some(len) = &s.length {
                let l = v.chars().count() as u64;
                if !len.contains(&l) {
                    report(out, path, OutlierCategory::LengthBound, json!({ "length": l, "min": len.min(), "max": len.max() }));
                }
            }
            if let Some(f) = s.format.as_ref().and_then(|f| f.format()) {
                if !f.matches(v) {
                    report(out, path, OutlierCategory::FormatMismatch, json!({ "value": v, "format": f.name() }));
                }
            }
        }
        (SchemaNode::Array(a), JsonValue::Arr(items)) => {
            if let Some(len) = &a.length {
                let l = items.len() as u64;
                if !len.contains(&l) {
                    report(out, path, OutlierCategory::LengthBound, json!({ "length": l, "min": len.min(), "max": len.max() }));
                }
            }
            for (i, item) in items.iter().enumerate() {
                let sub = match &a.items {
                    Items::List(node) => Some(&**node),
                    Items::Tuple(nodes) => nodes.get(i),
                    Items::Unobserved => None,
                };
                if let Some(sub) = sub {
                    let base = path.len();
                    path.push('/');
                    path.push_str(&i.to_string());
                    walk(sub, item, path, t, out);
                    path.truncate(base);
                }
            }
        }
        (SchemaNode::Object(o), JsonValue::Obj(map)) => {
            for (key, value) in map {
                let base = path.len();
                path.push('/');
                path.push_str(&escape_pointer_token(key));
                match o.properties.get(key) {
                    None => report(out, path, OutlierCategory::UnknownAttribute, json!({ "attribute": key })),
                    Some(child) => {
                        if let Some(freq) = o.counts.as_ref().and_then(|c| c.frequency(key)) {
                            if freq < t.f_min {
                                report(out, path, OutlierCategory::RareAttribute, json!({ "frequency": freq, "f_min": t.f_min }));
                            }
                        }
                        walk(child, value, path, t, out);
                    }
                }
                path.truncate(base);
            }
        }
        _ => {}
    }
}

/// Kolmogorov-Smirnov statistic between two histograms, treating each bin
/// as a point mass at its value.
pub fn histogram_ks(h1: &StreamingHistogram, h2: &StreamingHistogram) -> Result<f64, AnalysisError> {
    if h1.is_empty() || h2.is_empty() {
        return Err(AnalysisError::EmptyHistogram);
    }
    let (n1, n2) = (h1.total() as f64, h2.total() as f64);
    let (b1, b2) = (h1.bins(), h2.bins());
    let (mut i, mut j) = (0, 0);
    let (mut c1, mut c2) = (0u64, 0u64);
    let mut d: f64 = 0.0;
    while i < b1.len() || j < b2.len() {
        let x = match (b1.get(i), b2.get(j)) {
            (Some(a), Some(b)) => a.value.min(b.value),
            (Some(a), None) => a.value,
            (None, Some(b)) => b.value,
            (None, None) => break,
        };
        while i < b1.len() && b1[i].value <= x {
            c1 += b1[i].count;
            i += 1;
        }
        while j < b2.len() && b2[j].value <= x {
            c2 += b2[j].count;
            j += 1;
        }
        d = d.max((c1 as f64 / n1 - c2 as f64 / n2).abs());
    }
    Ok(d.min(1.0))
}
