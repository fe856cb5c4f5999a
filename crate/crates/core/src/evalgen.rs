//! Synthetic document generation and schema-quality evaluation.

use indexmap::IndexMap;
use rand::distr::{Alphanumeric, Distribution};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Geometric;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{DiscoveryConfig, Equivalence};
use crate::emit::{emit_json_schema, EmitOptions};
use crate::fold::fold_streaming;
use crate::json::{JsonValue, Number};
use crate::schema::{Items, SchemaError, SchemaNode};
use crate::validate::{SchemaCompileError, Validator};

/// Documents generated per random stream.
const CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenerationMode {
    /// Leaf values drawn from the schema's example reservoirs.
    Sampled,
    /// Type-correct random leaf values.
    #[default]
    Random,
}

impl std::str::FromStr for GenerationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sampled" => Ok(GenerationMode::Sampled),
            "random" => Ok(GenerationMode::Random),
            other => Err(format!("unknown generation mode {other:?}; expected sampled or random")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorConfig {
    pub mode: GenerationMode,
    pub seed: u64,
    /// Probability of including each property. `None` uses the observed
    /// attribute frequency when counts are available, else 0.5.
    pub inclusion_probability: Option<f64>,
    pub max_array_length: usize,
    pub mean_string_length: f64,
    pub max_string_length: usize,
    /// Under label equivalence every object branch has a fixed key set, so
    /// all properties are always included.
    pub equivalence: Equivalence,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            mode: GenerationMode::Random,
            seed: 0,
            inclusion_probability: None,
            max_array_length: 8,
            mean_string_length: 8.0,
            max_string_length: 64,
            equivalence: Equivalence::Kind,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("sampled generation needs example reservoirs; discover with the examples facet")]
    MissingExamples,
    #[error("corpus has {0} documents; at least 10 are needed for a split")]
    CorpusTooSmall(usize),
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Compile(#[from] SchemaCompileError),
}

/// Generates `n` documents following the structure of `schema`.
///
/// Structure does not depend on the facet set, so a schema discovered with
/// examples serves both modes; random mode only reads kinds and the
/// integral flag.
pub fn generate_documents(schema: &SchemaNode, cfg: &GeneratorConfig, n: usize) -> Result<Vec<JsonValue>, EvalError> {
    let mut docs = Vec::with_capacity(n);
    for chunk in 0..n.div_ceil(CHUNK) {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(chunk as u64);
        let count = CHUNK.min(n - chunk * CHUNK);
        for _ in 0..count {
            docs.push(generate(schema, cfg, &mut rng)?);
        }
    }
    Ok(docs)
}

fn random_string(cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> String {
    // Geometric counts failures before the first success, so p = 1/(mean+1)
    // gives the requested mean.
    let p = 1.0 / (cfg.mean_string_length.max(0.0) + 1.0);
    let len = Geometric::new(p).map(|g| g.sample(rng) as usize).unwrap_or(0).min(cfg.max_string_length);
    (0..len).map(|_| Alphanumeric.sample(rng) as char).collect()
}

fn generate(node: &SchemaNode, cfg: &GeneratorConfig, rng: &mut ChaCha8Rng) -> Result<JsonValue, EvalError> {
    Ok(match node {
        SchemaNode::Any | SchemaNode::Null => JsonValue::Null,
        SchemaNode::Boolean => JsonValue::Bool(rng.random()),
        SchemaNode::Number(n) => match cfg.mode {
            GenerationMode::Random if n.integral => JsonValue::Number(Number::Int(rng.random_range(-1_000_000..=1_000_000))),
            GenerationMode::Random => JsonValue::Number(Number::from_f64(rng.random_range(-1e6..=1e6))),
            GenerationMode::Sampled => {
                let ex = n.examples.as_ref().ok_or(EvalError::MissingExamples)?;
                JsonValue::Number(*ex.items().choose(rng).ok_or(EvalError::MissingExamples)?)
            }
        },
        SchemaNode::String(s) => match cfg.mode {
            GenerationMode::Random => JsonValue::Str(random_string(cfg, rng)),
            GenerationMode::Sampled => {
                let ex = s.examples.as_ref().ok_or(EvalError::MissingExamples)?;
                JsonValue::Str(ex.items().choose(rng).ok_or(EvalError::MissingExamples)?.clone())
            }
        },
        SchemaNode::Array(a) => match &a.items {
            Items::Tuple(positions) => {
                JsonValue::Arr(positions.iter().map(|p| generate(p, cfg, rng)).collect::<Result<_, _>>()?)
            }
            Items::List(item) if matches!(**item, SchemaNode::Any) => JsonValue::Arr(Vec::new()),
            Items::List(item) => {
                let len = rng.random_range(0..=cfg.max_array_length);
                JsonValue::Arr((0..len).map(|_| generate(item, cfg, rng)).collect::<Result<_, _>>()?)
            }
            Items::Unobserved => JsonValue::Arr(Vec::new()),
        },
        SchemaNode::Object(o) => {
            let mut map = IndexMap::new();
            for (key, child) in &o.properties {
                let p = if cfg.equivalence == Equivalence::Label {
                    1.0
                } else {
                    cfg.inclusion_probability
                        .or_else(|| o.counts.as_ref().and_then(|c| c.frequency(key)))
                        .unwrap_or(0.5)
                };
                if rng.random_bool(p.clamp(0.0, 1.0)) {
                    map.insert(key.clone(), generate(child, cfg, rng)?);
                }
            }
            JsonValue::Obj(map)
        }
        SchemaNode::Product { branches } => {
            let b = branches.choose(rng).expect("products have branches");
            generate(b, cfg, rng)?
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub total: usize,
    pub valid: usize,
    pub invalid: usize,
    /// `valid / total`; absent when there were no documents.
    pub validity_fraction: Option<f64>,
    /// For held-out evaluation, `invalid / total`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overfit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
}

impl EvalReport {
    fn from_counts(total: usize, valid: usize) -> EvalReport {
        EvalReport {
            total,
            valid,
            invalid: total - valid,
            validity_fraction: (total > 0).then(|| valid as f64 / total as f64),
            overfit: None,
            split: None,
        }
    }
}

/// Counts how many documents validate against an emitted schema.
pub fn evaluate_validity<'a>(
    schema: &Value,
    docs: impl IntoIterator<Item = &'a JsonValue>,
) -> Result<EvalReport, SchemaCompileError> {
    let validator = Validator::new(schema)?;
    let (mut total, mut valid) = (0, 0);
    for d in docs {
        total += 1;
        valid += usize::from(validator.is_valid(d));
    }
    Ok(EvalReport::from_counts(total, valid))
}

/// Discovers on `train` and reports the fraction of `test` that the
/// emitted schema rejects.
pub fn overfit_holdout(train: &[JsonValue], test: &[JsonValue], cfg: &DiscoveryConfig) -> Result<EvalReport, EvalError> {
    let node = fold_streaming(train, cfg)?.canonicalize();
    let schema = emit_json_schema(&node, &EmitOptions::for_config(cfg));
    let mut report = evaluate_validity(&schema, test)?;
    report.overfit = (report.total > 0).then(|| report.invalid as f64 / report.total as f64);
    report.split = Some(format!("train {} / test {}", train.len(), test.len()));
    Ok(report)
}

/// Seeded shuffle, then [`overfit_holdout`] on a `train_fraction` split.
pub fn overfit_split(corpus: &[JsonValue], cfg: &DiscoveryConfig, train_fraction: f64, seed: u64) -> Result<EvalReport, EvalError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(EvalError::BadFraction(train_fraction));
    }
    if corpus.len() < 10 {
        return Err(EvalError::CorpusTooSmall(corpus.len()));
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = ((corpus.len() as f64 * train_fraction).round() as usize).clamp(1, corpus.len() - 1);
    let train: Vec<JsonValue> = order[..cut].iter().map(|&i| corpus[i].clone()).collect();
    let test: Vec<JsonValue> = order[cut..].iter().map(|&i| corpus[i].clone()).collect();
    overfit_holdout(&train, &test, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::FacetSet;

    fn docs(texts: &[&str]) -> Vec<JsonValue> {
        texts.iter().map(|t| JsonValue::from_str_lossy(t).unwrap()).collect()
    }

    #[test]
    fn random_documents_follow_structure() {
        let cfg = DiscoveryConfig::with_facets(FacetSet::MIN);
        let node = fold_streaming(&docs(&[r#"{"firstName":"Carla","lastName":"Singh","age":43}"#]), &cfg).unwrap();
        let generated = generate_documents(&node, &GeneratorConfig::default(), 200).unwrap();
        assert_eq!(generated.len(), 200);
        for d in &generated {
            let obj = d.as_object().unwrap();
            assert!(obj.keys().all(|k| ["firstName", "lastName", "age"].contains(&k.as_str())));
            if let Some(age) = obj.get("age") {
                assert!(matches!(age, JsonValue::Number(n) if n.is_integral()));
            }
        }
        let schema = emit_json_schema(&node.clone().canonicalize(), &EmitOptions::for_config(&cfg));
        assert_eq!(evaluate_validity(&schema, &generated).unwrap().validity_fraction, Some(1.0));
        assert!(generate_documents(&node, &GeneratorConfig::default(), 0).unwrap().is_empty());
    }

    #[test]
    fn generation_is_seeded() {
        let node = fold_streaming(&docs(&[r#"{"a":[1,2],"b":"x"}"#]), &DiscoveryConfig::with_facets(FacetSet::MIN)).unwrap();
        let cfg = GeneratorConfig { seed: 1, ..GeneratorConfig::default() };
        assert_eq!(generate_documents(&node, &cfg, 2000).unwrap(), generate_documents(&node, &cfg, 2000).unwrap());
        let other = GeneratorConfig { seed: 2, ..GeneratorConfig::default() };
        assert_ne!(generate_documents(&node, &cfg, 50).unwrap(), generate_documents(&node, &other, 50).unwrap());
    }

    #[test]
    fn sampled_mode_uses_examples() {
        let train = docs(&[r#"{"v":"alpha"}"#, r#"{"v":"beta"}"#]);
        let with = fold_streaming(&train, &DiscoveryConfig::default()).unwrap();
        let cfg = GeneratorConfig { mode: GenerationMode::Sampled, inclusion_probability: Some(1.0), ..GeneratorConfig::default() };
        for d in generate_documents(&with, &cfg, 50).unwrap() {
            let v = &d.as_object().unwrap()["v"];
            assert!(matches!(v, JsonValue::Str(s) if s == "alpha" || s == "beta"));
        }
        let without = fold_streaming(&train, &DiscoveryConfig::with_facets(FacetSet::MIN)).unwrap();
        assert!(matches!(generate_documents(&without, &cfg, 1), Err(EvalError::MissingExamples)));
    }

    #[test]
    fn validity_counts() {
        let schema = serde_json::json!({"type":"integer"});
        let mut set = docs(&["1"; 50]);
        set.extend(docs(&["\"x\""; 50]));
        let r = evaluate_validity(&schema, &set).unwrap();
        assert_eq!((r.total, r.valid, r.invalid, r.validity_fraction), (100, 50, 50, Some(0.5)));
        assert_eq!(evaluate_validity(&schema, &[]).unwrap().validity_fraction, None);
    }

    #[test]
    fn identical_documents_do_not_overfit() {
        let corpus = docs(&[r#"{"a":"same","b":[1,2]}"#; 40]);
        let r = overfit_split(&corpus, &DiscoveryConfig::with_facets(FacetSet::SIMPLE), 0.9, 3).unwrap();
        assert_eq!(r.overfit, Some(0.0));
        assert_eq!(r.total, 4);
        assert!(matches!(overfit_split(&corpus[..9], &DiscoveryConfig::default(), 0.9, 3), Err(EvalError::CorpusTooSmall(9))));
    }
}
