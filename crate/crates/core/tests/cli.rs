mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::fixture;
use serde_json::Value;

fn specrag(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specrag"))
        .args(args)
        .current_dir(dir)
        .env_remove("RUST_LOG")
        .env_remove("SPECRAG_API_KEY_OPENAI")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = specrag(dir, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Exit code and the single stderr line of a failing run.
fn fails(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = specrag(dir, args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    let stderr = String::from_utf8(out.stderr).unwrap();
    let lines: Vec<&str> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "expected one stderr line, got {stderr:?}");
    (out.status.code().unwrap(), lines[0].to_string())
}

fn f(name: &str) -> String {
    fixture(name).display().to_string()
}

/// Chunks and indexes the movie fixture with the default strategy.
fn indexed(dir: &Path) -> PathBuf {
    ok(dir, &["chunk", "--spec", &f("movies.json"), "--out", "chunks.json"]);
    ok(dir, &["index", "--chunks", "chunks.json", "--out", "movies.idx"]);
    dir.join("movies.idx")
}

#[test]
fn chunking_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "chunk",
            "--splitting",
            "json",
            "--refinement",
            "token-chunking",
            "--chunk-size",
            "128",
            "--overlap",
            "16",
            "--out",
            out,
        ]
    };
    let mut a = args("a.json");
    let spec = f("movies.json");
    a.extend(["--spec", &spec]);
    let stdout = ok(dir.path(), &a);
    assert!(stdout.contains("strategy: json+token-chunking.s128.l16"), "{stdout}");
    let mut b = args("b.json");
    b.extend(["--spec", &spec]);
    ok(dir.path(), &b);
    let first = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(first, std::fs::read(dir.path().join("b.json")).unwrap());
    let file: Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(file["format"], "specrag-chunks-v1");
    assert!(file["chunks"].as_array().unwrap().len() > 1);
}

#[test]
fn query_prints_k_results_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let idx = indexed(dir.path());
    let idx = idx.to_str().unwrap();

    let stdout = ok(dir.path(), &["--k", "1", "query", "--index", idx, "top rated movies"]);
    let hits: Vec<&str> = stdout.lines().filter(|l| l.contains('\t')).collect();
    assert_eq!(hits.len(), 1, "{stdout}");
    assert!(hits[0].ends_with("GET /movie/top_rated"), "{stdout}");

    let stdout = ok(dir.path(), &["--k", "3", "--json", "query", "--index", idx, "top rated movies"]);
    let result: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(result["scored_chunks"].as_array().unwrap().len(), 3);
    assert_eq!(result["endpoints"][0], "GET /movie/top_rated");
    assert!(result["retrieved_token_count"].as_u64().unwrap() > 0);
}

#[test]
fn retrieval_eval_reports_zero_completion_tokens() {
    let dir = tempfile::tempdir().unwrap();
    let idx = indexed(dir.path());
    let args = ["eval", "--index", idx.to_str().unwrap(), "--benchmark", &f("movies_bench.json"), "--format", "json"];
    let stdout = ok(dir.path(), &args);
    assert_eq!(stdout, ok(dir.path(), &args), "reports differ between runs");
    let report: Value = serde_json::from_str(&stdout).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!(r["usage"]["completion"], 0);
        assert_eq!(r["usage"]["total"], r["usage"]["prompt"]);
    }
    assert_eq!(report["metadata"]["mode"], "rag");
    assert!(report["metadata"]["started_unix"].is_null());
}

#[test]
fn scripted_summary_agent_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = f("movies.json");
    ok(
        d,
        &[
            "chunk",
            "--spec",
            &spec,
            "--refinement",
            "summary",
            "--scripted",
            &f("summaries_script.json"),
            "--out",
            "s.json",
        ],
    );
    let stdout = ok(d, &["index", "--chunks", "s.json", "--summary-mode", "--out", "s.idx"]);
    assert!(stdout.contains("entries: 10"), "{stdout}");
    let stdout = ok(
        d,
        &[
            "eval",
            "--index",
            "s.idx",
            "--benchmark",
            &f("movies_bench.json"),
            "--spec",
            &spec,
            "--agent",
            "summary",
            "--scripted",
            &f("agent_script.json"),
            "--max-steps",
            "3",
            "--format",
            "csv",
            "--traces-dir",
            "traces",
        ],
    );
    let mean = stdout.lines().last().unwrap();
    assert!(mean.contains(",mean,66.67,"), "{stdout}");
    let traces = std::fs::read_dir(d.join("traces")).unwrap().count();
    assert_eq!(traces, 3);
}

#[test]
fn exit_codes_follow_the_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let idx = indexed(d);
    let idx = idx.to_str().unwrap();
    let spec = f("movies.json");

    let (code, line) = fails(d, &["frobnicate"]);
    assert_eq!((code, line.starts_with("error[USAGE]")), (2, true), "{line}");

    let (code, line) = fails(
        d,
        &["chunk", "--spec", &spec, "--splitting", "json", "--refinement", "remove-examples", "--out", "x.json"],
    );
    assert_eq!(code, 4, "{line}");

    let (code, line) = fails(d, &["chunk", "--spec", &spec, "--refinement", "summary", "--out", "x.json"]);
    assert_eq!(code, 2, "{line}");

    let (code, line) = fails(d, &["--embedding", "local:64", "query", "--index", idx, "movies"]);
    assert_eq!(code, 6, "{line}");

    std::fs::write(d.join("broken.idx"), b"SRAGIDX\0garbage").unwrap();
    let (code, line) = fails(d, &["query", "--index", "broken.idx", "movies"]);
    assert_eq!(code, 7, "{line}");

    let (code, line) =
        fails(d, &["agent", "--index", idx, "--spec", "missing.json", "--scripted", &f("agent_script.json"), "q"]);
    assert_eq!(code, 2, "{line}");

    std::fs::write(d.join("bad.json"), b"{not json").unwrap();
    let (code, line) = fails(d, &["chunk", "--spec", "bad.json", "--out", "x.json"]);
    assert_eq!(code, 3, "{line}");
}

#[test]
fn credentials_in_config_files_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let spec = f("movies.json");
    for (name, body) in [
        ("top.toml", "api_key = \"sk-123\"\n"),
        ("nested.toml", "[embedding]\nprovider = \"openai\"\nmodel = \"m\"\nopenai_token = \"abc\"\n"),
        ("llm.toml", "[llm]\nmodel = \"gpt\"\nsecret = \"abc\"\n"),
    ] {
        std::fs::write(d.join(name), body).unwrap();
        let (code, line) = fails(d, &["--config", name, "chunk", "--spec", &spec, "--out", "x.json"]);
        assert_eq!(code, 2, "{line}");
        assert!(line.contains("SPECRAG_API_KEY_"), "{line}");
        assert!(!line.contains("sk-123") && !line.contains("abc"), "secret echoed: {line}");
    }
}

#[test]
fn remote_embedding_without_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["chunk", "--spec", &f("movies.json"), "--out", "c.json"]);
    let (code, line) =
        fails(d, &["--embedding", "openai:text-embedding-3-large", "index", "--chunks", "c.json", "--out", "r.idx"]);
    assert_eq!(code, 2, "{line}");
    assert!(line.contains("SPECRAG_API_KEY_OPENAI"), "{line}");
}

#[test]
fn grid_combines_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let idx = indexed(d);
    let bench = f("movies_bench.json");
    for k in ["1", "10"] {
        let out = format!("r{k}.json");
        ok(
            d,
            &[
                "--k",
                k,
                "eval",
                "--index",
                idx.to_str().unwrap(),
                "--benchmark",
                &bench,
                "--format",
                "json",
                "--out",
                &out,
            ],
        );
    }
    let grid = ok(d, &["grid", "r1.json", "r10.json"]);
    assert_eq!(grid.lines().filter(|l| l.starts_with("| rag")).count(), 2, "{grid}");
}
