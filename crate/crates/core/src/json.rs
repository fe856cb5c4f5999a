//! In-memory JSON document model.
//!
//! Documents are parsed into [`JsonValue`] rather than `serde_json::Value` so
//! that numbers carry an integral flag, object keys keep their source order,
//! and duplicate keys and nesting depth can be policed during parsing.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt::{self, Write as _};

use indexmap::IndexMap;
use serde::de::{self, DeserializeSeed, MapAccess, SeqAccess, Visitor};
use serde::ser::{SerializeMap, SerializeSeq};
use serde::{Serialize, Serializer};

/// Deepest nesting of arrays/objects accepted by the parser.
pub const MAX_DEPTH: usize = 1000;

/// A JSON number.
///
/// Integral values that fit in an `i64` are always stored as `Int`, so `1.0`
/// and `1` are the same number.
#[derive(Clone, Copy, Debug)]
pub enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    pub fn from_f64(value: f64) -> Number {
        if value.fract() == 0.0 && value >= i64::MIN as f64 && value < i64::MAX as f64 {
            Number::Int(value as i64)
        } else {
            Number::Float(value)
        }
    }

    pub fn is_integral(&self) -> bool {
        match *self {
            Number::Int(_) => true,
            Number::Float(f) => f.is_finite() && f.fract() == 0.0,
        }
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            Number::Int(i) => i as f64,
            Number::Float(f) => f,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            Number::Int(i) => Some(i),
            Number::Float(_) => None,
        }
    }

    /// Exact numeric comparison, also between integers and floats.
    pub fn total_cmp(&self, other: &Number) -> Ordering {
        match (*self, *other) {
            (Number::Int(a), Number::Int(b)) => a.cmp(&b),
            (Number::Float(a), Number::Float(b)) => a.total_cmp(&b),
            (Number::Int(a), Number::Float(b)) => cmp_int_float(a, b),
            (Number::Float(a), Number::Int(b)) => cmp_int_float(b, a).reverse(),
        }
    }

    pub fn to_serde(&self) -> serde_json::Value {
        match *self {
            Number::Int(i) => serde_json::Value::from(i),
            Number::Float(f) => serde_json::Number::from_f64(f)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
        }
    }

    pub fn from_serde(n: &serde_json::Number) -> Number {
        if let Some(i) = n.as_i64() {
            Number::Int(i)
        } else {
            Number::from_f64(n.as_f64().unwrap_or(f64::NAN))
        }
    }
}

fn cmp_int_float(i: i64, f: f64) -> Ordering {
    const TWO_63: f64 = 9_223_372_036_854_775_808.0;
    if f.is_nan() {
        return Ordering::Less;
    }
    if f >= TWO_63 {
        return Ordering::Less;
    }
    if f < -TWO_63 {
        return Ordering::Greater;
    }
    let whole = f.trunc();
    match i.cmp(&(whole as i64)) {
        Ordering::Equal if f > whole => Ordering::Less,
        Ordering::Equal if f < whole => Ordering::Greater,
        other => other,
    }
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        self.total_cmp(other) == Ordering::Equal
    }
}

impl fmt::Display for Number {
    /// Shortest round-trip decimal text. This is also the byte encoding fed
    /// to sketch hashes.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Number::Int(i) => write!(f, "{i}"),
            Number::Float(v) => match serde_json::Number::from_f64(v) {
                Some(n) => write!(f, "{n}"),
                None => write!(f, "{v}"),
            },
        }
    }
}

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match *self {
            Number::Int(i) => serializer.serialize_i64(i),
            Number::Float(f) => serializer.serialize_f64(f),
        }
    }
}

impl<'de> serde::Deserialize<'de> for Number {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let n = serde_json::Number::deserialize(deserializer)?;
        Ok(Number::from_serde(&n))
    }
}

/// A parsed JSON document.
#[derive(Clone, Debug, PartialEq)]
pub enum JsonValue {
    Null,
    Bool(bool),
    Number(Number),
    Str(String),
    Arr(Vec<JsonValue>),
    Obj(IndexMap<String, JsonValue>),
}

/// Error raised while parsing a single document.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message}")]
pub struct ParseError {
    pub message: String,
}

impl JsonValue {
    /// Parses one document, returning the value and any duplicate-key
    /// warnings.
    pub fn parse(text: &str) -> Result<(JsonValue, Vec<String>), ParseError> {
        let warnings = RefCell::new(Vec::new());
        let mut de = serde_json::Deserializer::from_str(text);
        de.disable_recursion_limit();
        let value = ValueSeed { depth: 0, warnings: &warnings, pointer: String::new() }
            .deserialize(&mut de)
            .and_then(|v| de.end().map(|_| v))
            .map_err(|e| ParseError { message: e.to_string() })?;
        Ok((value, warnings.into_inner()))
    }

    /// Parses one document, discarding warnings.
    pub fn from_str_lossy(text: &str) -> Result<JsonValue, ParseError> {
        Self::parse(text).map(|(v, _)| v)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            JsonValue::Null => "null",
            JsonValue::Bool(_) => "boolean",
            JsonValue::Number(_) => "number",
            JsonValue::Str(_) => "string",
            JsonValue::Arr(_) => "array",
            JsonValue::Obj(_) => "object",
        }
    }

    pub fn as_object(&self) -> Option<&IndexMap<String, JsonValue>> {
        match self {
            JsonValue::Obj(map) => Some(map),
            _ => None,
        }
    }

    /// Serializes with object keys sorted; used for value equality checks
    /// such as array uniqueness.
    pub fn canonical_json(&self) -> String {
        let mut out = String::new();
        self.write_canonical(&mut out);
        out
    }

    fn write_canonical(&self, out: &mut String) {
        match self {
            JsonValue::Null => out.push_str("null"),
            JsonValue::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            JsonValue::Number(n) => {
                let _ = write!(out, "{n}");
            }
            JsonValue::Str(s) => out.push_str(&serde_json::to_string(s).unwrap_or_default()),
            JsonValue::Arr(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write_canonical(out);
                }
                out.push(']');
            }
            JsonValue::Obj(map) => {
                let mut entries: Vec<_> = map.iter().collect();
                entries.sort_by(|a, b| a.0.cmp(b.0));
                out.push('{');
                for (i, (k, v)) in entries.into_iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&serde_json::to_string(k).unwrap_or_default());
                    out.push(':');
                    v.write_canonical(out);
                }
                out.push('}');
            }
        }
    }

    pub fn to_serde(&self) -> serde_json::Value {
        match self {
            JsonValue::Null => serde_json::Value::Null,
            JsonValue::Bool(b) => serde_json::Value::Bool(*b),
            JsonValue::Number(n) => n.to_serde(),
            JsonValue::Str(s) => serde_json::Value::String(s.clone()),
            JsonValue::Arr(items) => serde_json::Value::Array(items.iter().map(|v| v.to_serde()).collect()),
            JsonValue::Obj(map) => serde_json::Value::Object(
                map.iter().map(|(k, v)| (k.clone(), v.to_serde())).collect(),
            ),
        }
    }

    pub fn from_serde(value: &serde_json::Value) -> JsonValue {
        match value {
            serde_json::Value::Null => JsonValue::Null,
            serde_json::Value::Bool(b) => JsonValue::Bool(*b),
            serde_json::Value::Number(n) => JsonValue::Number(Number::from_serde(n)),
            serde_json::Value::String(s) => JsonValue::Str(s.clone()),
            serde_json::Value::Array(items) => JsonValue::Arr(items.iter().map(JsonValue::from_serde).collect()),
            serde_json::Value::Object(map) => JsonValue::Obj(
                map.iter().map(|(k, v)| (k.clone(), JsonValue::from_serde(v))).collect(),
            ),
        }
    }
}

impl Serialize for JsonValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            JsonValue::Null => serializer.serialize_unit(),
            JsonValue::Bool(b) => serializer.serialize_bool(*b),
            JsonValue::Number(n) => n.serialize(serializer),
            JsonValue::Str(s) => serializer.serialize_str(s),
            JsonValue::Arr(items) => {
                let mut seq = serializer.serialize_seq(Some(items.len()))?;
                for item in items {
                    seq.serialize_element(item)?;
                }
                seq.end()
            }
            JsonValue::Obj(entries) => {
                let mut map = serializer.serialize_map(Some(entries.len()))?;
                for (k, v) in entries {
                    map.serialize_entry(k, v)?;
                }
                map.end()
            }
        }
    }
}

impl fmt::Display for JsonValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = serde_json::to_string(self).map_err(|_| fmt::Error)?;
        f.write_str(&text)
    }
}

/// Escapes one JSON-pointer reference token.
pub fn escape_pointer_token(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

struct ValueSeed<'a> {
    depth: usize,
    warnings: &'a RefCell<Vec<String>>,
    pointer: String,
}

impl<'de> DeserializeSeed<'de> for ValueSeed<'_> {
    type Value = JsonValue;

    fn deserialize<D: de::Deserializer<'de>>(self, deserializer: D) -> Result<JsonValue, D::Error> {
        deserializer.deserialize_any(self)
    }
}

impl ValueSeed<'_> {
    fn child(&self, token: &str) -> Result<ValueSeed<'_>, String> {
        if self.depth + 1 > MAX_DEPTH {
            return Err(format!("nesting deeper than {MAX_DEPTH} levels"));
        }
        let mut pointer = self.pointer.clone();
        pointer.push('/');
        pointer.push_str(&escape_pointer_token(token));
        Ok(ValueSeed { depth: self.depth + 1, warnings: self.warnings, pointer })
    }
}

impl<'de> Visitor<'de> for ValueSeed<'_> {
    type Value = JsonValue;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a JSON value")
    }

    fn visit_bool<E>(self, v: bool) -> Result<JsonValue, E> {
        Ok(JsonValue::Bool(v))
    }

    fn visit_i64<E>(self, v: i64) -> Result<JsonValue, E> {
        Ok(JsonValue::Number(Number::Int(v)))
    }

    fn visit_u64<E>(self, v: u64) -> Result<JsonValue, E> {
        Ok(JsonValue::Number(match i64::try_from(v) {
            Ok(i) => Number::Int(i),
            Err(_) => Number::Float(v as f64),
        }))
    }

    fn visit_f64<E>(self, v: f64) -> Result<JsonValue, E> {
        Ok(JsonValue::Number(Number::from_f64(v)))
    }

    fn visit_str<E>(self, v: &str) -> Result<JsonValue, E> {
        Ok(JsonValue::Str(v.to_owned()))
    }

    fn visit_string<E>(self, v: String) -> Result<JsonValue, E> {
        Ok(JsonValue::Str(v))
    }

    fn visit_unit<E>(self) -> Result<JsonValue, E> {
        Ok(JsonValue::Null)
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<JsonValue, A::Error> {
        let mut items = Vec::with_capacity(seq.size_hint().unwrap_or(0));
        loop {
            let seed = self.child(&items.len().to_string()).map_err(de::Error::custom)?;
            match seq.next_element_seed(seed)? {
                Some(item) => items.push(item),
                None => break,
            }
        }
        Ok(JsonValue::Arr(items))
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<JsonValue, A::Error> {
        let mut entries: IndexMap<String, JsonValue> = IndexMap::new();
        while let Some(key) = map.next_key::<String>()? {
            let seed = self.child(&key).map_err(de::Error::custom)?;
            let value = map.next_value_seed(seed)?;
            if entries.insert(key.clone(), value).is_some() {
                self.warnings
                    .borrow_mut()
                    .push(format!("duplicate key {key:?} at {:?}; last occurrence kept", self.pointer));
            }
        }
        Ok(JsonValue::Obj(entries))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integral_flag() {
        let (v, _) = JsonValue::parse("[1, 1.0, 1.5, 2e3, -0.0, 18446744073709551615]").unwrap();
        let JsonValue::Arr(items) = v else { panic!() };
        let flags: Vec<bool> = items
            .iter()
            .map(|v| match v {
                JsonValue::Number(n) => n.is_integral(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(flags, vec![true, true, false, true, true, true]);
        assert_eq!(items[1], JsonValue::Number(Number::Int(1)));
    }

    #[test]
    fn duplicate_keys_last_wins() {
        let (v, warnings) = JsonValue::parse(r#"{"a":1,"b":2,"a":3}"#).unwrap();
        let obj = v.as_object().unwrap();
        assert_eq!(obj.len(), 2);
        assert_eq!(obj["a"], JsonValue::Number(Number::Int(3)));
        assert_eq!(obj.keys().collect::<Vec<_>>(), vec!["a", "b"]);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn depth_limit() {
        let ok = "[".repeat(MAX_DEPTH) + &"]".repeat(MAX_DEPTH);
        let too_deep = "[".repeat(MAX_DEPTH + 1) + &"]".repeat(MAX_DEPTH + 1);
        let handle = std::thread::Builder::new()
            .stack_size(64 << 20)
            .spawn(move || (JsonValue::parse(&ok).is_ok(), JsonValue::parse(&too_deep).is_err()))
            .unwrap();
        assert_eq!(handle.join().unwrap(), (true, true));
    }

    #[test]
    fn canonical_json_sorts_keys() {
        let a = JsonValue::from_str_lossy(r#"{"b":[1,{"y":1,"x":2}],"a":"s"}"#).unwrap();
        assert_eq!(a.canonical_json(), r#"{"a":"s","b":[1,{"x":2,"y":1}]}"#);
    }

    #[test]
    fn trailing_garbage_rejected() {
        assert!(JsonValue::parse("{} x").is_err());
        assert!(JsonValue::parse("{bad").is_err());
    }

    #[test]
    fn mixed_comparison_is_exact() {
        let big = Number::Int(i64::MAX);
        let float = Number::Float(9_223_372_036_854_775_808.0);
        assert_eq!(big.total_cmp(&float), Ordering::Less);
        assert_eq!(float.total_cmp(&big), Ordering::Greater);
        assert_eq!(Number::Int(2).total_cmp(&Number::Float(2.5)), Ordering::Less);
        assert_eq!(Number::Int(-2).total_cmp(&Number::Float(-2.5)), Ordering::Greater);
        assert_eq!(Number::Int(3).total_cmp(&Number::Float(2.5)), Ordering::Greater);
    }

    #[test]
    fn number_text() {
        assert_eq!(Number::Float(0.1).to_string(), "0.1");
        assert_eq!(Number::from_f64(42.0).to_string(), "42");
        assert_eq!(Number::Float(1e300).to_string(), "1e+300");
    }
}
