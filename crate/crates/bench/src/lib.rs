//! Seeded synthetic corpora for benchmarks and end-to-end checks.
//!
//! Every generator is deterministic in its seed.

use indexmap::IndexMap;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schemine_core::{JsonValue, Number};

const WORDS: &[&str] = &["alpha", "beta", "gamma", "delta", "omega", "kappa", "sigma", "zeta", "iota", "rho"];
const KEYS: &[&str] =
    &["id", "name", "tags", "meta", "value", "a/b", "til~de", "", "ünï", "count", "when", "link", "owner", "x"];

/// Shape of one field in a synthetic document family.
#[derive(Clone, Debug)]
enum Shape {
    Int { lo: i64, hi: i64 },
    Float,
    Word,
    Uri,
    Date,
    Email,
    Uuid,
    FreeText,
    Bool,
    Null,
    Array { item: Box<Shape>, max_len: usize },
    Tuple(Vec<Shape>),
    Object { fields: Vec<(String, Shape, f64)> },
    /// One of several shapes per value.
    Mixed(Vec<Shape>),
}

fn random_shape(rng: &mut ChaCha8Rng, depth: usize) -> Shape {
    let leaf_only = depth >= 3;
    let pick = rng.random_range(0..if leaf_only { 10 } else { 14 });
    match pick {
        0 => {
            let lo = rng.random_range(-1000..1000);
            Shape::Int { lo, hi: lo + rng.random_range(0..5000) }
        }
        1 => Shape::Float,
        2 => Shape::Word,
        3 => Shape::Uri,
        4 => Shape::Date,
        5 => Shape::Email,
        6 => Shape::Uuid,
        7 => Shape::FreeText,
        8 => Shape::Bool,
        9 => Shape::Null,
        10 => Shape::Array { item: Box::new(random_shape(rng, depth + 1)), max_len: rng.random_range(0..6) },
        11 => Shape::Tuple((0..rng.random_range(1..4)).map(|_| random_shape(rng, depth + 1)).collect()),
        12 => random_object(rng, depth + 1),
        _ => Shape::Mixed((0..rng.random_range(2..4)).map(|_| random_shape(rng, depth + 1)).collect()),
    }
}

fn random_object(rng: &mut ChaCha8Rng, depth: usize) -> Shape {
    let n = rng.random_range(1..7);
    let mut fields = Vec::new();
    for i in 0..n {
        let base = *KEYS.choose(rng).expect("keys");
        let name = if fields.iter().any(|(k, _, _): &(String, Shape, f64)| k == base) { format!("{base}{i}") } else { base.to_owned() };
        let presence = if rng.random_bool(0.7) { 1.0 } else { rng.random_range(0.1..0.9) };
        fields.push((name, random_shape(rng, depth), presence));
    }
    Shape::Object { fields }
}

fn random_string(rng: &mut ChaCha8Rng, max: usize) -> String {
    let len = rng.random_range(0..=max);
    (0..len)
        .map(|_| match rng.random_range(0..20) {
            0 => 'é',
            1 => ' ',
            2 => '"',
            3 => '\\',
            4 => '.',
            _ => rng.random_range(b'a'..=b'z') as char,
        })
        .collect()
}

fn instantiate(shape: &Shape, rng: &mut ChaCha8Rng) -> JsonValue {
    match shape {
        Shape::Int { lo, hi } => JsonValue::Number(Number::Int(rng.random_range(*lo..=*hi))),
        Shape::Float => JsonValue::Number(Number::from_f64((rng.random_range(-1e4..1e4f64) * 100.0).round() / 100.0 + 0.5)),
        Shape::Word => JsonValue::Str((*WORDS.choose(rng).expect("words")).to_owned()),
        Shape::Uri => JsonValue::Str(format!("https://{}.example.com/{}", WORDS.choose(rng).expect("words"), rng.random_range(0..1000))),
        Shape::Date => JsonValue::Str(format!(
            "20{:02}-{:02}-{:02}",
            rng.random_range(0..30),
            rng.random_range(1..=12),
            rng.random_range(1..=28)
        )),
        Shape::Email => JsonValue::Str(format!("{}{}@example.org", WORDS.choose(rng).expect("words"), rng.random_range(0..100))),
        Shape::Uuid => {
            let hex: String = (0..32).map(|_| char::from_digit(rng.random_range(0..16), 16).expect("hex digit")).collect();
            JsonValue::Str(format!("{}-{}-{}-{}-{}", &hex[..8], &hex[8..12], &hex[12..16], &hex[16..20], &hex[20..]))
        }
        Shape::FreeText => JsonValue::Str(random_string(rng, 12)),
        Shape::Bool => JsonValue::Bool(rng.random()),
        Shape::Null => JsonValue::Null,
        Shape::Array { item, max_len } => {
            let len = rng.random_range(0..=*max_len);
            JsonValue::Arr((0..len).map(|_| instantiate(item, rng)).collect())
        }
        Shape::Tuple(items) => JsonValue::Arr(items.iter().map(|s| instantiate(s, rng)).collect()),
        Shape::Object { fields } => {
            let mut map = IndexMap::new();
            for (name, s, presence) in fields {
                if rng.random_bool(*presence) {
                    map.insert(name.clone(), instantiate(s, rng));
                }
            }
            JsonValue::Obj(map)
        }
        Shape::Mixed(options) => instantiate(options.choose(rng).expect("options"), rng),
    }
}

/// `n` documents drawn from one to four random document families, mixing
/// nested objects, tuples, variable-length arrays, optional keys, string
/// formats, and fields whose type varies between documents.
pub fn mixed_corpus(seed: u64, n: usize) -> Vec<JsonValue> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let families: Vec<Shape> = (0..rng.random_range(1..=4))
        .map(|_| if rng.random_bool(0.9) { random_object(&mut rng, 0) } else { random_shape(&mut rng, 1) })
        .collect();
    (0..n).map(|_| instantiate(families.choose(&mut rng).expect("families"), &mut rng)).collect()
}

/// `n` documents sharing one fixed structure; only leaf values vary.
pub fn single_structure_corpus(seed: u64, n: usize) -> Vec<JsonValue> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let text = format!(
                r#"{{"id":{i},"name":"{}","score":{},"tags":["{}","{}"],"owner":{{"email":"{}@example.org","active":{}}}}}"#,
                WORDS.choose(&mut rng).expect("words"),
                rng.random_range(0..100),
                WORDS.choose(&mut rng).expect("words"),
                WORDS.choose(&mut rng).expect("words"),
                WORDS.choose(&mut rng).expect("words"),
                rng.random_bool(0.5),
            );
            JsonValue::from_str_lossy(&text).expect("generated JSON parses")
        })
        .collect()
}

/// Small flat documents, for throughput measurements.
pub fn small_docs(seed: u64, n: usize) -> Vec<JsonValue> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut map = IndexMap::new();
            map.insert("id".to_owned(), JsonValue::Number(Number::Int(i as i64)));
            map.insert("kind".to_owned(), JsonValue::Str((*WORDS.choose(&mut rng).expect("words")).to_owned()));
            map.insert("value".to_owned(), JsonValue::Number(Number::from_f64(rng.random_range(0.0..1000.0))));
            if rng.random_bool(0.3) {
                map.insert("flag".to_owned(), JsonValue::Bool(true));
            }
            JsonValue::Obj(map)
        })
        .collect()
}

fn asin(i: usize) -> String {
    format!("B{i:09}")
}

/// Product records shaped like a retail catalogue: a unique `asin`, related
/// product lists whose entries are drawn from the `asin` domain, and a
/// three-valued `main_cat`.
pub fn product_corpus(seed: u64, n: usize) -> Vec<JsonValue> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cats = ["Movies & TV", "Books", "Toys & Games"];
    (0..n)
        .map(|i| {
            let pick = |rng: &mut ChaCha8Rng, max: usize| -> Vec<JsonValue> {
                let len = rng.random_range(0..=max);
                (0..len).map(|_| JsonValue::Str(asin(rng.random_range(0..n)))).collect()
            };
            let cat = cats[rng.random_range(0..cats.len())];
            let mut related = IndexMap::new();
            related.insert("also_viewed".to_owned(), JsonValue::Arr(pick(&mut rng, 6)));
            related.insert("buy_after_viewing".to_owned(), JsonValue::Arr(pick(&mut rng, 4)));
            let mut rank = IndexMap::new();
            rank.insert(cat.to_owned(), JsonValue::Number(Number::Int(rng.random_range(1..1_000_000))));
            let mut doc = IndexMap::new();
            doc.insert("asin".to_owned(), JsonValue::Str(asin(i)));
            doc.insert("title".to_owned(), JsonValue::Str(format!("{} {i}", WORDS.choose(&mut rng).expect("words"))));
            doc.insert("related".to_owned(), JsonValue::Obj(related));
            doc.insert("price".to_owned(), JsonValue::Number(Number::from_f64(rng.random_range(100..10_000) as f64 / 100.0)));
            doc.insert("salesRank".to_owned(), JsonValue::Obj(rank));
            doc.insert("main_cat".to_owned(), JsonValue::Str(cat.to_owned()));
            doc.insert("imUrl".to_owned(), JsonValue::Str(format!("http://images.example.com/{i}.jpg")));
            JsonValue::Obj(doc)
        })
        .collect()
}

/// Number of string fields and of array fields in [`heavy_tailed_corpus`].
pub const HEAVY_TAILED_FIELDS: usize = 16;

/// Documents with [`HEAVY_TAILED_FIELDS`] string fields `text{i}` and as many
/// array fields `items{i}`, whose lengths follow a Pareto tail with shape 1.2.
///
/// For exchangeable samples a held-out document beats the training maximum
/// of one field with probability about `test / (train + test)`, so many
/// independent fields make a held-out length violation very likely.
pub fn heavy_tailed_corpus(seed: u64, n: usize) -> Vec<JsonValue> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pareto = move |cap: f64| -> usize {
        let u: f64 = rng.random_range(f64::EPSILON..1.0);
        u.powf(-1.0 / 1.2).floor().min(cap) as usize
    };
    (0..n)
        .map(|_| {
            let mut doc = IndexMap::new();
            for i in 0..HEAVY_TAILED_FIELDS {
                doc.insert(format!("text{i}"), JsonValue::Str("x".repeat(pareto(5000.0))));
            }
            for i in 0..HEAVY_TAILED_FIELDS {
                let len = pareto(500.0);
                doc.insert(format!("items{i}"), JsonValue::Arr(vec![JsonValue::Number(Number::Int(0)); len]));
            }
            JsonValue::Obj(doc)
        })
        .collect()
}

/// Renders documents as NDJSON text.
pub fn to_ndjson(docs: &[JsonValue]) -> String {
    let mut out = String::new();
    for d in docs {
        out.push_str(&d.to_string());
        out.push('\n');
    }
    out
}
