use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use schemine_bench::{mixed_corpus, product_corpus, single_structure_corpus, small_docs, to_ndjson};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_schemine"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().args(args).current_dir(dir).stdin(Stdio::null()).output().expect("binary runs")
}

fn run_stdin(dir: &Path, args: &[&str], input: &str) -> Output {
    let mut child =
        bin().args(args).current_dir(dir).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn lines(o: &Output) -> Vec<Value> {
    stdout(o).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn stats_line(o: &Output) -> Value {
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    serde_json::from_str(err.lines().last().unwrap()).unwrap()
}

fn workspace(files: &[(&str, String)]) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in files {
        std::fs::write(dir.path().join(name), text).unwrap();
    }
    dir
}

#[test]
fn exit_codes() {
    let dir = workspace(&[("ok.ndjson", "{\"a\":1}\n".into()), ("bad.ndjson", "{oops\nnope\n".into())]);
    let d = dir.path();
    assert_eq!(run(d, &["discover", "ok.ndjson"]).status.code(), Some(0));
    assert_eq!(run(d, &["--help"]).status.code(), Some(0));
    assert_eq!(run(d, &["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(d, &["discover", "--monoids", "nosuch", "ok.ndjson"]).status.code(), Some(1));
    assert_eq!(run(d, &["discover", "--equivalence", "shape", "ok.ndjson"]).status.code(), Some(1));
    assert_eq!(run(d, &["discover", "missing.ndjson"]).status.code(), Some(2));
    assert_eq!(run(d, &["discover", "bad.ndjson"]).status.code(), Some(2));
    assert_eq!(run(d, &["evaluate", "--split", "1.5", "ok.ndjson"]).status.code(), Some(1));
    assert_eq!(run(d, &["evaluate", "ok.ndjson"]).status.code(), Some(2));

    assert_eq!(run(d, &["discover", "--monoids", "simple", "--save-state", "s.jz", "ok.ndjson"]).status.code(), Some(0));
    assert_eq!(run(d, &["constraints", "s.jz"]).status.code(), Some(3));
    assert_eq!(run(d, &["constraints", "ok.ndjson"]).status.code(), Some(2));
}

#[test]
fn bad_lines_are_skipped_and_counted() {
    let dir = workspace(&[("mixed.ndjson", "{\"a\":1}\n{broken\n{\"a\":2}\n".into())]);
    let out = run(dir.path(), &["discover", "mixed.ndjson"]);
    assert_eq!(out.status.code(), Some(0));
    let stats = stats_line(&out);
    assert_eq!((stats["docs"].as_u64(), stats["failed"].as_u64()), (Some(2), Some(1)));
}

#[test]
fn stdin_is_read_when_no_files_given() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_stdin(dir.path(), &["discover", "--monoids", "min"], "{\"a\":\"x\"}\n");
    assert_eq!(out.status.code(), Some(0));
    let schema: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(schema["properties"]["a"]["type"], "string");
    assert!(schema.get("required").is_none());
}

#[test]
fn array_input_format() {
    let dir = workspace(&[("arr.json", "[{\"a\":1},{\"a\":2.5}]".into())]);
    let out = run(dir.path(), &["discover", "--format", "array", "--monoids", "min", "arr.json"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stats_line(&out)["docs"], 2);
}

#[test]
fn discovery_is_deterministic() {
    let dir = workspace(&[("c.ndjson", to_ndjson(&mixed_corpus(1, 400)))]);
    let a = run(dir.path(), &["discover", "--monoids", "all", "--seed", "7", "c.ndjson"]);
    let b = run(dir.path(), &["discover", "--monoids", "all", "--seed", "7", "c.ndjson"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    let t1 = run(dir.path(), &["discover", "--mode", "tree", "--workers", "3", "--seed", "7", "c.ndjson"]);
    let t2 = run(dir.path(), &["discover", "--mode", "tree", "--workers", "3", "--seed", "7", "c.ndjson"]);
    assert_eq!(stdout(&t1), stdout(&t2));
    assert_eq!(stats_line(&t1)["mode"], "tree");
    assert_eq!(stats_line(&t1)["workers"], 3);
}

#[test]
fn tree_matches_streaming_for_deterministic_facets() {
    let dir = workspace(&[("c.ndjson", to_ndjson(&mixed_corpus(2, 600)))]);
    let monoids = "objecttypes,arraytype,required,attributecounts,dependencies,unique,maxmin,multiple,pattern,format,bloom,hll";
    for eq in ["kind", "label"] {
        let s = run(dir.path(), &["discover", "--monoids", monoids, "--equivalence", eq, "c.ndjson"]);
        for workers in ["1", "4", "0"] {
            let t = run(dir.path(), &["discover", "--mode", "tree", "--workers", workers, "--monoids", monoids, "--equivalence", eq, "c.ndjson"]);
            assert_eq!(stdout(&s), stdout(&t), "{eq} workers {workers}");
        }
    }
}

#[test]
fn open_schemas_use_any_of_and_allow_extra_keys() {
    let dir = workspace(&[("c.ndjson", "{\"a\":1}\n{\"a\":\"x\"}\n".into()), ("extra.ndjson", "{\"a\":2,\"z\":true}\n".into())]);
    let d = dir.path();
    let out = run(d, &["discover", "--open", "--monoids", "min", "--out", "open.json", "c.ndjson"]);
    assert_eq!(out.status.code(), Some(0));
    let schema: Value = serde_json::from_str(&std::fs::read_to_string(d.join("open.json")).unwrap()).unwrap();
    assert!(schema["properties"]["a"]["anyOf"].is_array());
    assert!(schema.get("additionalProperties").is_none());
    let verdicts = lines(&run(d, &["validate", "open.json", "extra.ndjson"]));
    assert_eq!(verdicts[0]["valid"], true);
}

#[test]
fn validate_reports_every_document_and_a_summary() {
    let train = mixed_corpus(3, 300);
    let mut probe = mixed_corpus(3, 400)[300..].to_vec();
    probe.extend(mixed_corpus(4, 100));
    let dir = workspace(&[("train.ndjson", to_ndjson(&train)), ("probe.ndjson", to_ndjson(&probe)), ("empty.ndjson", String::new())]);
    let d = dir.path();
    assert_eq!(run(d, &["discover", "--out", "schema.json", "train.ndjson"]).status.code(), Some(0));

    let own = lines(&run(d, &["validate", "schema.json", "train.ndjson"]));
    assert_eq!(own.last().unwrap()["summary"]["validity_fraction"], 1.0);

    let out = run(d, &["validate", "schema.json", "probe.ndjson"]);
    assert_eq!(out.status.code(), Some(0));
    let all = lines(&out);
    let (verdicts, summary) = all.split_at(all.len() - 1);
    assert_eq!(verdicts.len(), probe.len());
    let valid = verdicts.iter().filter(|v| v["valid"] == true).count();
    assert!(verdicts.iter().enumerate().all(|(i, v)| v["doc"] == i));
    assert!(verdicts.iter().filter(|v| v["valid"] == false).all(|v| !v["violations"].as_array().unwrap().is_empty()));
    assert_eq!(summary[0]["summary"]["valid"], valid);
    assert_eq!(summary[0]["summary"]["invalid"], probe.len() - valid);

    let out = run(d, &["validate", "schema.json", "empty.ndjson"]);
    assert_eq!(out.status.code(), Some(0));
    let empty = lines(&out);
    assert_eq!(empty.len(), 1);
    assert!(empty[0]["summary"]["validity_fraction"].is_null());
}

#[test]
fn validate_rejects_unknown_keywords() {
    let dir = workspace(&[("s.json", r#"{"type":"object","frobnicate":1}"#.into()), ("d.ndjson", "{}\n".into())]);
    assert_eq!(run(dir.path(), &["validate", "s.json", "d.ndjson"]).status.code(), Some(2));
}

#[test]
fn constraints_end_to_end() {
    let dir = workspace(&[("p.ndjson", to_ndjson(&product_corpus(3, 5000))), ("empty.ndjson", String::new())]);
    let d = dir.path();
    assert_eq!(run(d, &["discover", "--save-state", "p.jz", "--out", "p.json", "p.ndjson"]).status.code(), Some(0));
    let out = run(d, &["constraints", "p.jz"]);
    assert_eq!(out.status.code(), Some(0));
    let found = lines(&out);
    let first_fk = found.iter().position(|l| l["category"] == "foreign-key").unwrap();
    assert!(found[..first_fk].iter().all(|l| l["category"] == "primary-key"));
    assert!(found.iter().any(|l| l["category"] == "primary-key" && l["path"] == "/asin"));
    assert!(!found.iter().any(|l| l["category"] == "primary-key" && l["path"] == "/main_cat"));
    assert!(found.iter().any(|l| l["path"] == "/related/also_viewed/*" && l["detail"]["target"] == "/asin"));

    assert_eq!(run(d, &["discover", "--save-state", "e.jz", "--out", "e.json", "empty.ndjson"]).status.code(), Some(0));
    let out = run(d, &["constraints", "e.jz"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).is_empty());
}

#[test]
fn state_round_trip_reproduces_reports() {
    let docs = mixed_corpus(5, 500);
    let dir = workspace(&[("c.ndjson", to_ndjson(&docs)), ("probe.ndjson", to_ndjson(&mixed_corpus(6, 200)))]);
    let d = dir.path();
    assert_eq!(run(d, &["discover", "--seed", "3", "--save-state", "a.jz", "--out", "a.json", "c.ndjson"]).status.code(), Some(0));
    assert_eq!(run(d, &["discover", "--seed", "3", "--save-state", "b.jz", "--out", "b.json", "c.ndjson"]).status.code(), Some(0));
    assert_eq!(std::fs::read(d.join("a.jz")).unwrap(), std::fs::read(d.join("b.jz")).unwrap());
    assert!(std::fs::read(d.join("a.jz")).unwrap().starts_with(b"JZST1\n"));
    assert_eq!(stdout(&run(d, &["constraints", "a.jz"])), stdout(&run(d, &["constraints", "b.jz"])));
    let o1 = run(d, &["outliers", "a.jz", "probe.ndjson"]);
    let o2 = run(d, &["outliers", "b.jz", "probe.ndjson"]);
    assert_eq!(o1.status.code(), Some(0));
    assert_eq!(stdout(&o1), stdout(&o2));
}

#[test]
fn corrupt_state_is_a_data_error() {
    let dir = workspace(&[("x.jz", "JZST2\n{}".into()), ("y.jz", "JZST1\n{not json".into())]);
    assert_eq!(run(dir.path(), &["constraints", "x.jz"]).status.code(), Some(2));
    assert_eq!(run(dir.path(), &["constraints", "y.jz"]).status.code(), Some(2));
}

#[test]
fn outliers_on_training_data_report_no_values() {
    let dir = workspace(&[("c.ndjson", to_ndjson(&mixed_corpus(7, 800))), ("far.ndjson", "{\"id\":1e9}\n".into())]);
    let d = dir.path();
    assert_eq!(run(d, &["discover", "--save-state", "s.jz", "--out", "s.json", "c.ndjson"]).status.code(), Some(0));
    let out = run(d, &["outliers", "--z-max", "3", "s.jz", "c.ndjson"]);
    assert_eq!(out.status.code(), Some(0));
    for r in lines(&out) {
        assert_ne!(r["category"], "numeric-zscore", "{r}");
        assert_ne!(r["category"], "length-bound", "{r}");
    }

    let small = workspace(&[("s.ndjson", to_ndjson(&small_docs(1, 1000))), ("far.ndjson", "{\"id\":1e9,\"debugging\":1}\n".into())]);
    let d = small.path();
    assert_eq!(run(d, &["discover", "--save-state", "s.jz", "--out", "s.json", "s.ndjson"]).status.code(), Some(0));
    let reports = lines(&run(d, &["outliers", "s.jz", "far.ndjson"]));
    assert!(reports.iter().any(|r| r["path"] == "/id" && r["category"] == "numeric-zscore"));
    assert!(reports.iter().any(|r| r["path"] == "/debugging" && r["category"] == "unknown-attribute"));
}

#[test]
fn generate_is_seeded() {
    let dir = workspace(&[("c.ndjson", to_ndjson(&mixed_corpus(8, 300)))]);
    let d = dir.path();
    let a = run(d, &["generate", "--mode", "random", "--n", "100", "--seed", "1", "c.ndjson"]);
    let b = run(d, &["generate", "--mode", "random", "--n", "100", "--seed", "1", "c.ndjson"]);
    let c = run(d, &["generate", "--mode", "random", "--n", "100", "--seed", "2", "c.ndjson"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), stdout(&b));
    assert_ne!(stdout(&a), stdout(&c));
    assert_eq!(stdout(&a).lines().count(), 100);

    let s = run(d, &["generate", "--mode", "sampled", "--n", "50", "--seed", "1", "c.ndjson"]);
    assert_eq!(s.status.code(), Some(0));
    assert_eq!(stdout(&s).lines().count(), 50);

    assert_eq!(run(d, &["discover", "--monoids", "min", "--save-state", "m.jz", "--out", "m.json", "c.ndjson"]).status.code(), Some(0));
    assert_eq!(run(d, &["generate", "--mode", "sampled", "--state", "m.jz"]).status.code(), Some(3));
    assert_eq!(run(d, &["generate", "--mode", "bogus", "c.ndjson"]).status.code(), Some(1));

    let random = run(d, &["generate", "--mode", "random", "--n", "200", "--seed", "4", "--out", "g.ndjson", "c.ndjson"]);
    assert_eq!(random.status.code(), Some(0));
    let verdicts = lines(&run(d, &["validate", "m.json", "g.ndjson"]));
    assert_eq!(verdicts.last().unwrap()["summary"]["validity_fraction"], 1.0);

    let filtered = run(d, &["generate", "--n", "200", "--seed", "4", "--reference-schema", "m.json", "c.ndjson"]);
    assert_eq!(filtered.status.code(), Some(0));
    assert!(stdout(&filtered).is_empty());
}

#[test]
fn evaluate_reports_overfit() {
    let dir = workspace(&[
        ("single.ndjson", to_ndjson(&single_structure_corpus(9, 300))),
        ("train.ndjson", "{\"a\":1,\"b\":1}\n{\"a\":2,\"b\":2}\n".into()),
        ("test.ndjson", "{\"a\":3}\n{\"a\":4,\"b\":1}\n".into()),
    ]);
    let d = dir.path();
    let out = run(d, &["evaluate", "--split", "0.9", "--seed", "1", "--monoids", "min", "single.ndjson"]);
    assert_eq!(out.status.code(), Some(0));
    let report = &lines(&out)[0];
    assert_eq!(report["overfit"], 0.0);
    assert_eq!(report["total"], 30);

    let held = &lines(&run(d, &["evaluate", "--monoids", "min,required", "--holdout", "test.ndjson", "train.ndjson"]))[0];
    assert_eq!(held["overfit"], 0.5);
    assert_eq!(held["invalid"], 1);
}

#[test]
fn streaming_memory_is_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let big = small_docs(11, 100_000);
    std::fs::write(d.join("small.ndjson"), to_ndjson(&big[..10_000])).unwrap();
    std::fs::write(d.join("big.ndjson"), to_ndjson(&big)).unwrap();
    let peak = |file: &str| -> u64 {
        let out = run(d, &["discover", "--monoids", "all", "--out", "/dev/null", file]);
        assert_eq!(out.status.code(), Some(0));
        stats_line(&out)["peak_rss_kib"].as_u64().expect("peak RSS reported on Linux")
    };
    let (small, big) = (peak("small.ndjson"), peak("big.ndjson"));
    assert!((big as f64) < 2.0 * small as f64, "peak RSS {small} KiB -> {big} KiB");
}
