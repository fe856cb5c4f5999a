//! Validation against the keyword subset produced by [`crate::emit`].
//!
//! This is deliberately not a general JSON Schema validator: any keyword
//! outside the emitted subset is rejected when the schema is compiled, so a
//! constraint can never be ignored silently. `x-jsonoid-*` annotations are
//! skipped.

use std::collections::{BTreeMap, HashSet};

use regex::Regex;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::emit::ANNOTATION_PREFIX;
use crate::formats::StringFormat;
use crate::json::{escape_pointer_token, JsonValue, Number};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SchemaCompileError {
    #[error("unsupported keyword {keyword:?} at {path}")]
    UnknownKeyword { path: String, keyword: String },
    #[error("invalid value for {keyword:?} at {path}: {message}")]
    InvalidKeyword { path: String, keyword: String, message: String },
    #[error("schema at {path} must be an object or boolean")]
    NotASchema { path: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// JSON pointer into the instance.
    pub path: String,
    pub keyword: &'static str,
    pub message: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationOutcome {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum TypeName {
    Null,
    Boolean,
    Integer,
    Number,
    String,
    Array,
    Object,
}

impl TypeName {
    fn parse(s: &str) -> Option<TypeName> {
        Some(match s {
            "null" => TypeName::Null,
            "boolean" => TypeName::Boolean,
            "integer" => TypeName::Integer,
            "number" => TypeName::Number,
            "string" => TypeName::String,
            "array" => TypeName::Array,
            "object" => TypeName::Object,
            _ => return None,
        })
    }

    fn accepts(self, v: &JsonValue) -> bool {
        match (self, v) {
            (TypeName::Null, JsonValue::Null) => true,
            (TypeName::Boolean, JsonValue::Bool(_)) => true,
            (TypeName::Integer, JsonValue::Number(n)) => n.is_integral(),
            (TypeName::Number, JsonValue::Number(_)) => true,
            (TypeName::String, JsonValue::Str(_)) => true,
            (TypeName::Array, JsonValue::Arr(_)) => true,
            (TypeName::Object, JsonValue::Obj(_)) => true,
            _ => false,
        }
    }
}

#[derive(Debug)]
enum Items {
    Single(Box<Node>),
    Tuple(Vec<Node>),
}

#[derive(Debug, Default)]
struct Keywords {
    types: Option<Vec<TypeName>>,
    properties: BTreeMap<String, Node>,
    required: Vec<String>,
    additional_properties: Option<bool>,
    dependent_required: BTreeMap<String, Vec<String>>,
    items: Option<Items>,
    additional_items: Option<bool>,
    min_items: Option<u64>,
    max_items: Option<u64>,
    unique_items: bool,
    min_length: Option<u64>,
    max_length: Option<u64>,
    pattern: Option<Regex>,
    format: Option<StringFormat>,
    minimum: Option<Number>,
    maximum: Option<Number>,
    multiple_of: Option<Number>,
    one_of: Option<Vec<Node>>,
    any_of: Option<Vec<Node>>,
}

#[derive(Debug)]
enum Node {
    Bool(bool),
    Schema(Box<Keywords>),
}

/// A compiled schema, reusable across documents and threads.
#[derive(Debug)]
pub struct Validator {
    root: Node,
}

impl Validator {
    pub fn new(schema: &Value) -> Result<Validator, SchemaCompileError> {
        Ok(Validator { root: compile(schema, "#", true)? })
    }

    pub fn validate(&self, doc: &JsonValue) -> ValidationOutcome {
        let mut violations = Vec::new();
        check(&self.root, doc, &mut String::new(), &mut violations);
        ValidationOutcome { valid: violations.is_empty(), violations }
    }

    pub fn is_valid(&self, doc: &JsonValue) -> bool {
        let mut violations = Vec::new();
        check(&self.root, doc, &mut String::new(), &mut violations);
        violations.is_empty()
    }
}

/// Compiles `schema` and validates one document.
pub fn validate(schema: &Value, doc: &JsonValue) -> Result<ValidationOutcome, SchemaCompileError> {
    Ok(Validator::new(schema)?.validate(doc))
}

/// Removes every `x-jsonoid-*` key from schema positions. Property names
/// that merely look like annotations are left alone.
pub fn strip_annotations(schema: &Value) -> Value {
    match schema {
        Value::Object(map) => {
            let mut out = Map::new();
            for (k, v) in map {
                if k.starts_with(ANNOTATION_PREFIX) {
                    continue;
                }
                let v = match k.as_str() {
                    "properties" => match v {
                        Value::Object(props) => {
                            Value::Object(props.iter().map(|(name, s)| (name.clone(), strip_annotations(s))).collect())
                        }
                        other => other.clone(),
                    },
                    "items" | "oneOf" | "anyOf" => match v {
                        Value::Array(list) => Value::Array(list.iter().map(strip_annotations).collect()),
                        other => strip_annotations(other),
                    },
                    _ => v.clone(),
                };
                out.insert(k.clone(), v);
            }
            Value::Object(out)
        }
        other => other.clone(),
    }
}

fn invalid(path: &str, keyword: &str, message: impl Into<String>) -> SchemaCompileError {
    SchemaCompileError::InvalidKeyword { path: path.into(), keyword: keyword.into(), message: message.into() }
}

fn as_count(v: &Value, path: &str, keyword: &str) -> Result<u64, SchemaCompileError> {
    v.as_u64().ok_or_else(|| invalid(path, keyword, "expected a non-negative integer"))
}

fn as_bool(v: &Value, path: &str, keyword: &str) -> Result<bool, SchemaCompileError> {
    v.as_bool().ok_or_else(|| invalid(path, keyword, "expected a boolean"))
}

fn as_number(v: &Value, path: &str, keyword: &str) -> Result<Number, SchemaCompileError> {
    match v {
        Value::Number(n) => Ok(Number::from_serde(n)),
        _ => Err(invalid(path, keyword, "expected a number")),
    }
}

fn as_names(v: &Value, path: &str, keyword: &str) -> Result<Vec<String>, SchemaCompileError> {
    v.as_array()
        .and_then(|a| a.iter().map(|x| x.as_str().map(str::to_owned)).collect::<Option<Vec<_>>>())
        .ok_or_else(|| invalid(path, keyword, "expected an array of strings"))
}

fn compile_list(v: &Value, path: &str, keyword: &str) -> Result<Vec<Node>, SchemaCompileError> {
    let list = v.as_array().ok_or_else(|| invalid(path, keyword, "expected an array of schemas"))?;
    list.iter().enumerate().map(|(i, s)| compile(s, &format!("{path}/{keyword}/{i}"), false)).collect()
}

fn compile(schema: &Value, path: &str, root: bool) -> Result<Node, SchemaCompileError> {
    let map = match schema {
        Value::Bool(b) => return Ok(Node::Bool(*b)),
        Value::Object(map) => map,
        _ => return Err(SchemaCompileError::NotASchema { path: path.into() }),
    };
    let mut kw = Keywords::default();
    for (key, v) in map {
        let key = key.as_str();
        match key {
            _ if key.starts_with(ANNOTATION_PREFIX) => {}
            "$schema" if root => {}
            "type" => {
                let names: Vec<&str> = match v {
                    Value::String(s) => vec![s.as_str()],
                    Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
                    _ => Vec::new(),
                };
                let types = names
                    .iter()
                    .map(|n| TypeName::parse(n))
                    .collect::<Option<Vec<_>>>()
                    .filter(|t| !t.is_empty())
                    .ok_or_else(|| invalid(path, key, "expected a type name or list of type names"))?;
                kw.types = Some(types);
            }
            "properties" => {
                let props = v.as_object().ok_or_else(|| invalid(path, key, "expected an object"))?;
                for (name, s) in props {
                    let sub = format!("{path}/properties/{}", escape_pointer_token(name));
                    kw.properties.insert(name.clone(), compile(s, &sub, false)?);
                }
            }
            "required" => kw.required = as_names(v, path, key)?,
            "additionalProperties" => kw.additional_properties = Some(as_bool(v, path, key)?),
            "dependentRequired" => {
                let deps = v.as_object().ok_or_else(|| invalid(path, key, "expected an object"))?;
                for (name, list) in deps {
                    kw.dependent_required.insert(name.clone(), as_names(list, path, key)?);
                }
            }
            "items" => {
                kw.items = Some(match v {
                    Value::Array(_) => Items::Tuple(compile_list(v, path, key)?),
                    other => Items::Single(Box::new(compile(other, &format!("{path}/items"), false)?)),
                })
            }
            "additionalItems" => kw.additional_items = Some(as_bool(v, path, key)?),
            "minItems" => kw.min_items = Some(as_count(v, path, key)?),
            "maxItems" => kw.max_items = Some(as_count(v, path, key)?),
            "uniqueItems" => kw.unique_items = as_bool(v, path, key)?,
            "minLength" => kw.min_length = Some(as_count(v, path, key)?),
            "maxLength" => kw.max_length = Some(as_count(v, path, key)?),
            "pattern" => {
                let text = v.as_str().ok_or_else(|| invalid(path, key, "expected a string"))?;
                kw.pattern = Some(Regex::new(text).map_err(|e| invalid(path, key, e.to_string()))?);
            }
            "format" => {
                let name = v.as_str().ok_or_else(|| invalid(path, key, "expected a string"))?;
                kw.format =
                    Some(StringFormat::from_name(name).ok_or_else(|| invalid(path, key, format!("unknown format {name:?}")))?);
            }
            "minimum" => kw.minimum = Some(as_number(v, path, key)?),
            "maximum" => kw.maximum = Some(as_number(v, path, key)?),
            "multipleOf" => {
                let n = as_number(v, path, key)?;
                if n.as_f64() <= 0.0 {
                    return Err(invalid(path, key, "must be positive"));
                }
                kw.multiple_of = Some(n);
            }
            "oneOf" => kw.one_of = Some(compile_list(v, path, key)?),
            "anyOf" => kw.any_of = Some(compile_list(v, path, key)?),
            other => return Err(SchemaCompileError::UnknownKeyword { path: path.into(), keyword: other.into() }),
        }
    }
    Ok(Node::Schema(Box::new(kw)))
}

fn push(out: &mut Vec<Violation>, path: &str, keyword: &'static str, message: String) {
    out.push(Violation { path: if path.is_empty() { String::new() } else { path.to_owned() }, keyword, message });
}

fn check(node: &Node, doc: &JsonValue, path: &mut String, out: &mut Vec<Violation>) {
    let kw = match node {
        Node::Bool(true) => return,
        Node::Bool(false) => return push(out, path, "false", "no value is allowed here".into()),
        Node::Schema(kw) => kw,
    };
    if let Some(types) = &kw.types {
        if !types.iter().any(|t| t.accepts(doc)) {
            return push(out, path, "type", format!("{} is not an allowed type", doc.kind_name()));
        }
    }
    match doc {
        JsonValue::Number(n) => check_number(kw, *n, path, out),
        JsonValue::Str(s) => check_string(kw, s, path, out),
        JsonValue::Arr(items) => check_array(kw, items, path, out),
        JsonValue::Obj(map) => {
            for name in &kw.required {
                if !map.contains_key(name) {
                    push(out, path, "required", format!("missing required property {name:?}"));
                }
            }
            for (name, deps) in &kw.dependent_required {
                if map.contains_key(name) {
                    for d in deps {
                        if !map.contains_key(d) {
                            push(out, path, "dependentRequired", format!("{name:?} requires {d:?}"));
                        }
                    }
                }
            }
            for (key, value) in map {
                let len = path.len();
                path.push('/');
                path.push_str(&escape_pointer_token(key));
                match kw.properties.get(key) {
                    Some(sub) => check(sub, value, path, out),
                    None if kw.additional_properties == Some(false) => {
                        push(out, path, "additionalProperties", format!("property {key:?} is not allowed"))
                    }
                    None => {}
                }
                path.truncate(len);
            }
        }
        JsonValue::Null | JsonValue::Bool(_) => {}
    }
    if let Some(branches) = &kw.one_of {
        check_alternatives(branches, doc, path, out, true);
    }
    if let Some(branches) = &kw.any_of {
        check_alternatives(branches, doc, path, out, false);
    }
}

fn check_number(kw: &Keywords, n: Number, path: &str, out: &mut Vec<Violation>) {
    if let Some(min) = &kw.minimum {
        if n.total_cmp(min).is_lt() {
            push(out, path, "minimum", format!("{n} is below {min}"));
        }
    }
    if let Some(max) = &kw.maximum {
        if n.total_cmp(max).is_gt() {
            push(out, path, "maximum", format!("{n} is above {max}"));
        }
    }
    if let Some(m) = &kw.multiple_of {
        let ok = match (n, m) {
            (Number::Int(v), Number::Int(d)) => v % d == 0,
            _ => {
                let q = n.as_f64() / m.as_f64();
                q.is_finite() && q == q.trunc()
            }
        };
        if !ok {
            push(out, path, "multipleOf", format!("{n} is not a multiple of {m}"));
        }
    }
}

fn check_string(kw: &Keywords, s: &str, path: &str, out: &mut Vec<Violation>) {
    if kw.min_length.is_some() || kw.max_length.is_some() {
        let len = s.chars().count() as u64;
        if kw.min_length.is_some_and(|m| len < m) {
            push(out, path, "minLength", format!("length {len} is below {}", kw.min_length.unwrap_or(0)));
        }
        if kw.max_length.is_some_and(|m| len > m) {
            push(out, path, "maxLength", format!("length {len} is above {}", kw.max_length.unwrap_or(0)));
        }
    }
    if let Some(re) = &kw.pattern {
        if !re.is_match(s) {
            push(out, path, "pattern", format!("{s:?} does not match {}", re.as_str()));
        }
    }
    if let Some(f) = kw.format {
        if !f.matches(s) {
            push(out, path, "format", format!("{s:?} is not a valid {}", f.name()));
        }
    }
}

fn check_array(kw: &Keywords, items: &[JsonValue], path: &mut String, out: &mut Vec<Violation>) {
    let len = items.len() as u64;
    if kw.min_items.is_some_and(|m| len < m) {
        push(out, path, "minItems", format!("{len} items, fewer than {}", kw.min_items.unwrap_or(0)));
    }
    if kw.max_items.is_some_and(|m| len > m) {
        push(out, path, "maxItems", format!("{len} items, more than {}", kw.max_items.unwrap_or(0)));
    }
    if kw.unique_items {
        let mut seen = HashSet::with_capacity(items.len());
        if !items.iter().all(|v| seen.insert(v.canonical_json())) {
            push(out, path, "uniqueItems", "items are not unique".into());
        }
    }
    for (i, item) in items.iter().enumerate() {
        let sub = match &kw.items {
            None => None,
            Some(Items::Single(s)) => Some(&**s),
            Some(Items::Tuple(list)) => list.get(i),
        };
        let base = path.len();
        path.push('/');
        path.push_str(&i.to_string());
        match sub {
            Some(s) => check(s, item, path, out),
            None if matches!(kw.items, Some(Items::Tuple(_))) && kw.additional_items == Some(false) => {
                push(out, path, "additionalItems", "no schema for this position".into())
            }
            None => {}
        }
        path.truncate(base);
    }
}

fn check_alternatives(branches: &[Node], doc: &JsonValue, path: &mut String, out: &mut Vec<Violation>, exclusive: bool) {
    let mut results: Vec<Vec<Violation>> = Vec::with_capacity(branches.len());
    for b in branches {
        let mut v = Vec::new();
        check(b, doc, path, &mut v);
        results.push(v);
    }
    let passing = results.iter().filter(|r| r.is_empty()).count();
    let keyword = if exclusive { "oneOf" } else { "anyOf" };
    if passing == 0 {
        push(out, path, keyword, "no alternative matches".into());
        // Report the closest branch's own failures: the first one that got
        // past the type check, so the pointer lands on the actual problem.
        if let Some(best) = results.into_iter().filter(|r| r.iter().all(|v| v.keyword != "type" || v.path != *path)).min_by_key(Vec::len) {
            out.extend(best);
        }
    } else if exclusive && passing > 1 {
        push(out, path, keyword, format!("{passing} alternatives match, expected exactly one"));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn doc(text: &str) -> JsonValue {
        JsonValue::from_str_lossy(text).unwrap()
    }

    #[test]
    fn closed_objects_reject_extra_keys() {
        let schema = json!({"type":"object","properties":{"a":{"type":"integer"}},"additionalProperties":false});
        assert!(validate(&schema, &doc(r#"{"a":1}"#)).unwrap().valid);
        let out = validate(&schema, &doc(r#"{"a":1,"b":2}"#)).unwrap();
        assert!(!out.valid);
        assert_eq!(out.violations[0].path, "/b");
        assert_eq!(out.violations[0].keyword, "additionalProperties");
    }

    #[test]
    fn unknown_keyword_is_an_error() {
        let schema = json!({"type":"string","contentEncoding":"base64"});
        assert!(matches!(Validator::new(&schema), Err(SchemaCompileError::UnknownKeyword { .. })));
        let nested = json!({"properties":{"a":{"$ref":"#"}}});
        assert!(Validator::new(&nested).is_err());
        assert!(Validator::new(&json!({"x-jsonoid-anything": [1, 2]})).is_ok());
    }

    #[test]
    fn format_violation_pointer() {
        let schema = json!({
            "type":"object",
            "properties":{"funding":{"type":"object","properties":{"url":{"type":"string","format":"uri"}}}}
        });
        let out = validate(&schema, &doc(r#"{"funding":{"url":"BF1gv"}}"#)).unwrap();
        assert!(!out.valid);
        assert_eq!(out.violations.len(), 1);
        assert_eq!((out.violations[0].path.as_str(), out.violations[0].keyword), ("/funding/url", "format"));
    }

    #[test]
    fn integer_and_numeric_keywords() {
        let schema = json!({"type":"integer","minimum":10,"maximum":45,"multipleOf":5});
        let v = Validator::new(&schema).unwrap();
        assert!(v.is_valid(&doc("15")));
        assert!(v.is_valid(&doc("15.0")));
        assert!(!v.is_valid(&doc("15.5")));
        assert!(!v.is_valid(&doc("16")));
        assert!(!v.is_valid(&doc("50")));
        assert!(!v.is_valid(&doc("5")));
    }

    #[test]
    fn tuple_items() {
        let schema = json!({"type":"array","items":[{"type":"integer"},{"type":"string"}],"additionalItems":false});
        let v = Validator::new(&schema).unwrap();
        assert!(v.is_valid(&doc(r#"[1,"a"]"#)));
        assert!(v.is_valid(&doc("[1]")));
        assert!(!v.is_valid(&doc(r#"[1,"a",2]"#)));
        assert!(!v.is_valid(&doc(r#"["a",1]"#)));
    }

    #[test]
    fn one_of_is_exclusive() {
        let schema = json!({"oneOf":[{"type":"number"},{"type":"integer"}]});
        let v = Validator::new(&schema).unwrap();
        assert!(!v.is_valid(&doc("1")));
        assert!(v.is_valid(&doc("1.5")));
        let any = json!({"anyOf":[{"type":"number"},{"type":"integer"}]});
        assert!(Validator::new(&any).unwrap().is_valid(&doc("1")));
    }

    #[test]
    fn one_of_reports_inner_failure() {
        let schema = json!({"oneOf":[{"type":"string","maxLength":2},{"type":"null"}]});
        let out = validate(&schema, &doc(r#""abc""#)).unwrap();
        let keywords: Vec<_> = out.violations.iter().map(|v| v.keyword).collect();
        assert_eq!(keywords, vec!["oneOf", "maxLength"]);
    }

    #[test]
    fn string_keywords_count_characters() {
        let schema = json!({"type":"string","minLength":2,"maxLength":3,"pattern":"^h"});
        let v = Validator::new(&schema).unwrap();
        assert!(v.is_valid(&doc(r#""hé""#)));
        assert!(!v.is_valid(&doc(r#""h""#)));
        assert!(!v.is_valid(&doc(r#""xé""#)));
    }

    #[test]
    fn required_dependencies_unique() {
        let schema = json!({
            "type":"object",
            "required":["state"],
            "dependentRequired":{"city":["state"]},
            "properties":{"tags":{"type":"array","uniqueItems":true}}
        });
        let v = Validator::new(&schema).unwrap();
        assert!(v.is_valid(&doc(r#"{"state":"X","city":"A"}"#)));
        assert!(!v.is_valid(&doc(r#"{"city":"A"}"#)));
        assert!(!v.is_valid(&doc(r#"{"state":"X","tags":[1,1]}"#)));
    }

    #[test]
    fn strip_only_touches_schema_positions() {
        let schema = json!({
            "type":"object",
            "x-jsonoid-attribute-counts": {"total": 1},
            "properties":{"x-jsonoid-real":{"type":"integer","x-jsonoid-stats":{}}},
            "required":["x-jsonoid-real"]
        });
        let stripped = strip_annotations(&schema);
        assert_eq!(
            stripped,
            json!({"type":"object","properties":{"x-jsonoid-real":{"type":"integer"}},"required":["x-jsonoid-real"]})
        );
        assert_eq!(strip_annotations(&stripped), stripped);
        for text in [r#"{"x-jsonoid-real":1}"#, "{}", r#"{"x-jsonoid-real":"s"}"#] {
            let d = doc(text);
            assert_eq!(validate(&schema, &d).unwrap().valid, validate(&stripped, &d).unwrap().valid);
        }
    }
}
