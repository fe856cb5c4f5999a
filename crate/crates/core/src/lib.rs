//! Schema discovery for collections of JSON documents.
//!
//! Every schema fragment is a mergeable summary with an identity, so a
//! collection can be summarized by a left fold over a stream or by merging
//! per-partition schemas in any tree shape. The crate covers ingestion,
//! the schema model and its facets, JSON Schema emission and validation,
//! post-discovery analyses, and synthetic evaluation.
//!
//! ```
//! use schemine_core::{discover_streaming, emit_json_schema, DiscoveryConfig, EmitOptions, JsonValue};
//!
//! let docs: Vec<JsonValue> = [r#"{"id": 1, "tags": ["a"]}"#, r#"{"id": 2, "tags": []}"#]
//!     .iter()
//!     .map(|t| JsonValue::from_str_lossy(t).unwrap())
//!     .collect();
//! let cfg = DiscoveryConfig::default();
//! let schema = discover_streaming(&docs, &cfg).unwrap().canonicalize();
//! let emitted = emit_json_schema(&schema, &EmitOptions::for_config(&cfg));
//! assert_eq!(emitted["properties"]["id"]["type"], "integer");
//! ```

pub mod analysis;
pub mod config;
pub mod emit;
pub mod evalgen;
pub mod fold;
pub mod formats;
pub mod ingest;
pub mod json;
pub mod monoid;
pub mod pds;
pub mod schema;
pub mod state;
pub mod stats;
pub mod structural;
pub mod validate;
pub mod value;

pub use analysis::{
    detect_outliers, histogram_ks, suggest_foreign_keys, suggest_primary_keys, AnalysisError, ConstraintSuggestion,
    OutlierReport, OutlierThresholds,
};
pub use config::{DiscoveryConfig, Equivalence, FacetSet};
pub use emit::{emit_json_schema, to_pretty_string, EmitOptions};
pub use evalgen::{
    evaluate_validity, generate_documents, overfit_holdout, overfit_split, EvalReport, GenerationMode, GeneratorConfig,
};
pub use fold::{fold_streaming as discover_streaming, fold_streaming, fold_tree, StreamingFold};
pub use formats::StringFormat;
pub use ingest::{partition, read_documents, DocumentStream, IngestError, InputFormat, Source};
pub use json::{JsonValue, Number};
pub use monoid::{MergeError, Monoid};
pub use schema::{discover_document, merge_schemas, Kind, SchemaError, SchemaNode};
pub use state::SchemaState;
pub use validate::{strip_annotations, validate, ValidationOutcome, Validator, Violation};

/// Discovers over `docs` split into `workers` contiguous batches with a
/// tree reduction. `workers == 0` uses the machine's parallelism.
pub fn discover_parallel(docs: Vec<JsonValue>, cfg: &DiscoveryConfig, workers: usize) -> Result<SchemaNode, SchemaError> {
    let workers = if workers == 0 {
        std::thread::available_parallelism().map(usize::from).unwrap_or(1)
    } else {
        workers
    };
    let batches = partition(docs, workers);
    fold_tree(&batches, cfg, workers)
}
