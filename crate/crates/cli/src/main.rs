use std::fs::File;
use std::io::{self, BufWriter, IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use schemine_core::analysis::OutlierThresholds;
use schemine_core::evalgen::EvalError;
use schemine_core::ingest::{read_documents, InputFormat, Source};
use schemine_core::{
    detect_outliers, discover_parallel, emit_json_schema, generate_documents, overfit_holdout,
    overfit_split, suggest_foreign_keys, suggest_primary_keys, to_pretty_string, AnalysisError, DiscoveryConfig,
    EmitOptions, Equivalence, FacetSet, GenerationMode, GeneratorConfig, JsonValue, SchemaNode, SchemaState,
    StreamingFold, Validator,
};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_UNAVAILABLE: u8 = 3;

#[derive(Parser)]
#[command(name = "schemine", version, about = "Discover JSON Schemas from collections of JSON documents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discover a schema from NDJSON input
    Discover(DiscoverArgs),
    /// Validate documents against an emitted schema
    Validate(ValidateArgs),
    /// Suggest primary and foreign keys from a saved state
    Constraints(ConstraintsArgs),
    /// Report outlying values and attributes
    Outliers(OutliersArgs),
    /// Generate synthetic documents following a discovered structure
    Generate(GenerateArgs),
    /// Measure overfitting with a train/test split
    Evaluate(EvaluateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Streaming,
    Tree,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Ndjson,
    Array,
}

#[derive(Args)]
struct InputArgs {
    /// Input files; NDJSON on stdin when none are given
    inputs: Vec<PathBuf>,

    /// Input format
    #[arg(long, value_enum, default_value_t = Format::Ndjson)]
    format: Format,
}

#[derive(Args)]
struct DiscoveryArgs {
    /// Facets to maintain: min, simple, all, or a comma-separated list
    #[arg(long, default_value = "all")]
    monoids: String,

    /// When same-kind schemas merge: kind, or label (objects also need equal key sets)
    #[arg(long, default_value = "kind")]
    equivalence: String,

    /// Seed for sampling facets
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl DiscoveryArgs {
    fn config(&self) -> Result<DiscoveryConfig, CliError> {
        let facets: FacetSet = self.monoids.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
        let equivalence: Equivalence = self.equivalence.parse().map_err(CliError::Usage)?;
        Ok(DiscoveryConfig::with_facets(facets).equivalence(equivalence).seed(self.seed))
    }
}

#[derive(Args)]
struct DiscoverArgs {
    #[command(flatten)]
    input: InputArgs,

    #[command(flatten)]
    discovery: DiscoveryArgs,

    /// Fold strategy
    #[arg(long, value_enum, default_value_t = Mode::Streaming)]
    mode: Mode,

    /// Worker threads for tree mode; 0 uses every available core
    #[arg(long, default_value_t = 0)]
    workers: usize,

    /// Write the schema here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,

    /// Also save the full discovery state (with sketches) for later analysis
    #[arg(long)]
    save_state: Option<PathBuf>,

    /// Allow properties not seen during discovery
    #[arg(long)]
    open: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// Emitted JSON Schema
    schema: PathBuf,

    #[command(flatten)]
    input: InputArgs,
}

#[derive(Args)]
struct ConstraintsArgs {
    /// State file written by `discover --save-state`
    state: PathBuf,
}

#[derive(Args)]
struct OutliersArgs {
    /// State file written by `discover --save-state`
    state: PathBuf,

    #[command(flatten)]
    input: InputArgs,

    /// Report numbers whose |z| exceeds this
    #[arg(long, default_value_t = 3.0)]
    z_max: f64,

    /// Report attributes seen in fewer than this fraction of objects
    #[arg(long, default_value_t = 0.01)]
    f_min: f64,
}

#[derive(Args)]
struct GenerateArgs {
    /// Documents to learn the structure from, when no state is given
    #[command(flatten)]
    input: InputArgs,

    /// Use the schema in this state file instead of discovering one
    #[arg(long)]
    state: Option<PathBuf>,

    /// Leaf values: sampled from observed examples, or random
    #[arg(long, default_value = "random")]
    mode: String,

    /// Number of documents
    #[arg(long, default_value_t = 100)]
    n: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Fixed property inclusion probability (default: observed frequency)
    #[arg(long)]
    inclusion_probability: Option<f64>,

    #[arg(long, default_value_t = 8)]
    max_array_length: usize,

    /// Drop generated documents that validate against this schema
    #[arg(long)]
    reference_schema: Option<PathBuf>,

    /// Write documents here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: InputArgs,

    #[command(flatten)]
    discovery: DiscoveryArgs,

    /// Fraction of the corpus used for discovery
    #[arg(long, default_value_t = 0.9)]
    split: f64,

    /// Evaluate on this file instead of a random split
    #[arg(long)]
    holdout: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(anyhow::Error),
    Unavailable(String),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Data(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    // Deeply nested documents recurse; give the worker a generous stack.
    let worker = std::thread::Builder::new().stack_size(256 << 20).spawn(move || run(cli));
    let result = match worker.map(|h| h.join()) {
        Ok(Ok(r)) => r,
        _ => Err(CliError::Data(anyhow::anyhow!("internal error"))),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_DATA)
        }
        Err(CliError::Unavailable(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_UNAVAILABLE)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Discover(args) => discover(args),
        Command::Validate(args) => validate(args),
        Command::Constraints(args) => constraints(args),
        Command::Outliers(args) => outliers(args),
        Command::Generate(args) => generate(args),
        Command::Evaluate(args) => evaluate(args),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn sources(input: &InputArgs) -> Result<Vec<Source>, CliError> {
    if input.inputs.is_empty() {
        if io::stdin().is_terminal() {
            return Err(CliError::Usage("no input files given and stdin is a terminal".into()));
        }
        return Ok(vec![Source::Stdin]);
    }
    Ok(input.inputs.iter().cloned().map(Source::Path).collect())
}

/// Calls `f` on every document of every input, in order. Unparseable lines
/// are reported on stderr and skipped.
fn for_each_document(input: &InputArgs, mut f: impl FnMut(JsonValue) -> Result<(), CliError>) -> Result<Counts, CliError> {
    let format = match input.format {
        Format::Ndjson => InputFormat::Ndjson,
        Format::Array => InputFormat::JsonArray,
    };
    let mut counts = Counts::default();
    for source in sources(input)? {
        let mut stream = read_documents(&source, format).map_err(|e| CliError::Data(e.into()))?;
        while let Some(item) = stream.next() {
            match item {
                Ok(doc) => {
                    counts.docs += 1;
                    f(doc)?;
                }
                Err(e) if e.is_fatal() => return Err(CliError::Data(e.into())),
                Err(e) => {
                    counts.failed += 1;
                    eprintln!("warning: skipping {e}");
                }
            }
            for w in stream.take_warnings() {
                eprintln!("warning: {w}");
            }
        }
    }
    if counts.docs == 0 && counts.failed > 0 {
        return Err(CliError::Data(anyhow::anyhow!("none of the {} input documents could be parsed", counts.failed)));
    }
    Ok(counts)
}

fn collect_documents(input: &InputArgs) -> Result<(Vec<JsonValue>, Counts), CliError> {
    let mut docs = Vec::new();
    let counts = for_each_document(input, |d| {
        docs.push(d);
        Ok(())
    })?;
    Ok((docs, counts))
}

#[derive(Default)]
struct Counts {
    docs: u64,
    failed: u64,
}

/// Peak resident set size in KiB, where the platform reports it.
fn peak_rss_kib() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn load_state(path: &Path) -> Result<SchemaState, CliError> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    SchemaState::read_from(io::BufReader::new(file))
        .with_context(|| format!("reading state {}", path.display()))
        .map_err(CliError::Data)
}

fn discover(args: DiscoverArgs) -> Result<(), CliError> {
    let cfg = args.discovery.config()?;
    let started = Instant::now();
    let workers = match args.workers {
        0 => std::thread::available_parallelism().map(usize::from).unwrap_or(1),
        n => n,
    };
    let (schema, counts) = match args.mode {
        Mode::Streaming => {
            let mut fold = StreamingFold::new(&cfg);
            let counts = for_each_document(&args.input, |doc| fold.push(&doc).map_err(|e| CliError::Data(e.into())))?;
            (fold.finish(), counts)
        }
        Mode::Tree => {
            let (docs, counts) = collect_documents(&args.input)?;
            (discover_parallel(docs, &cfg, workers).map_err(|e| CliError::Data(e.into()))?, counts)
        }
    };
    let schema = schema.canonicalize();
    let mut opts = EmitOptions::for_config(&cfg);
    if args.open {
        opts = opts.open();
    }
    let emitted = emit_json_schema(&schema, &opts);
    let mut out = output(args.out.as_deref())?;
    out.write_all(to_pretty_string(&emitted).as_bytes())?;
    out.flush()?;

    if let Some(path) = &args.save_state {
        let state = SchemaState { config: cfg.clone(), documents: counts.docs, schema };
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        state.write_to(BufWriter::new(file)).map_err(|e| CliError::Data(e.into()))?;
    }

    let secs = started.elapsed().as_secs_f64();
    let stats = json!({
        "docs": counts.docs,
        "failed": counts.failed,
        "runtime_secs": secs,
        "docs_per_sec": if secs > 0.0 { counts.docs as f64 / secs } else { 0.0 },
        "monoids": cfg.facets.label(),
        "mode": match args.mode { Mode::Streaming => "streaming", Mode::Tree => "tree" },
        "workers": if args.mode == Mode::Tree { workers } else { 1 },
        "peak_rss_kib": peak_rss_kib(),
    });
    eprintln!("{stats}");
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.schema).with_context(|| format!("reading {}", args.schema.display()))?;
    let schema: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", args.schema.display()))?;
    let validator = Validator::new(&schema).map_err(|e| CliError::Data(e.into()))?;
    let mut out = output(None)?;
    let (mut index, mut valid) = (0usize, 0usize);
    for_each_document(&args.input, |doc| {
        let outcome = validator.validate(&doc);
        valid += usize::from(outcome.valid);
        let line = json!({ "doc": index, "valid": outcome.valid, "violations": outcome.violations });
        writeln!(out, "{line}")?;
        index += 1;
        Ok(())
    })?;
    let summary = json!({
        "summary": {
            "total": index,
            "valid": valid,
            "invalid": index - valid,
            "validity_fraction": (index > 0).then(|| valid as f64 / index as f64),
        }
    });
    writeln!(out, "{summary}")?;
    out.flush()?;
    Ok(())
}

fn unavailable(e: AnalysisError) -> CliError {
    CliError::Unavailable(e.to_string())
}

fn constraints(args: ConstraintsArgs) -> Result<(), CliError> {
    let state = load_state(&args.state)?;
    let pks = suggest_primary_keys(&state.schema, state.documents).map_err(unavailable)?;
    let fks = suggest_foreign_keys(&state.schema).map_err(unavailable)?;
    let mut out = output(None)?;
    for s in pks.iter().chain(&fks) {
        writeln!(out, "{}", serde_json::to_string(s).map_err(anyhow::Error::from)?)?;
    }
    out.flush()?;
    Ok(())
}

fn outliers(args: OutliersArgs) -> Result<(), CliError> {
    let state = load_state(&args.state)?;
    let thresholds = OutlierThresholds { z_max: args.z_max, f_min: args.f_min };
    let mut out = output(None)?;
    let mut index = 0usize;
    for_each_document(&args.input, |doc| {
        for r in detect_outliers(&state.schema, &doc, &thresholds) {
            let line = json!({ "doc": index, "path": r.path, "category": r.category, "detail": r.detail });
            writeln!(out, "{line}")?;
        }
        index += 1;
        Ok(())
    })?;
    out.flush()?;
    Ok(())
}

fn generate(args: GenerateArgs) -> Result<(), CliError> {
    let mode: GenerationMode = args.mode.parse().map_err(CliError::Usage)?;
    let (schema, equivalence): (SchemaNode, Equivalence) = match &args.state {
        Some(path) => {
            let state = load_state(path)?;
            (state.schema, state.config.equivalence)
        }
        None => {
            let cfg = DiscoveryConfig::with_facets(FacetSet::MIN | FacetSet::EXAMPLES | FacetSet::ATTRIBUTE_COUNTS).seed(args.seed);
            let mut fold = StreamingFold::new(&cfg);
            for_each_document(&args.input, |doc| fold.push(&doc).map_err(|e| CliError::Data(e.into())))?;
            (fold.finish(), cfg.equivalence)
        }
    };
    let cfg = GeneratorConfig {
        mode,
        seed: args.seed,
        inclusion_probability: args.inclusion_probability,
        max_array_length: args.max_array_length,
        equivalence,
        ..GeneratorConfig::default()
    };
    let mut docs = generate_documents(&schema, &cfg, args.n).map_err(|e| match e {
        EvalError::MissingExamples => CliError::Unavailable(e.to_string()),
        other => CliError::Data(other.into()),
    })?;
    if let Some(path) = &args.reference_schema {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let reference: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let validator = Validator::new(&reference).map_err(|e| CliError::Data(e.into()))?;
        docs.retain(|d| !validator.is_valid(d));
    }
    let mut out = output(args.out.as_deref())?;
    for d in &docs {
        writeln!(out, "{d}")?;
    }
    out.flush()?;
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let cfg = args.discovery.config()?;
    let (docs, _) = collect_documents(&args.input)?;
    let report = match &args.holdout {
        Some(path) => {
            let holdout = InputArgs { inputs: vec![path.clone()], format: args.input.format };
            let (test, _) = collect_documents(&holdout)?;
            overfit_holdout(&docs, &test, &cfg)
        }
        None => overfit_split(&docs, &cfg, args.split, args.discovery.seed),
    };
    let report = report.map_err(|e| match e {
        EvalError::BadFraction(_) => CliError::Usage(e.to_string()),
        other => CliError::Data(other.into()),
    })?;
    let mut out = output(None)?;
    writeln!(out, "{}", serde_json::to_string(&report).map_err(anyhow::Error::from)?)?;
    out.flush()?;
    Ok(())
}
