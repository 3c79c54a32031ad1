//! Benchmark loading, endpoint-set metrics and report emission.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::agent::{run_agent, AgentConfig, AgentContext, AgentTrace, PROMPT_VERSION};
use crate::chunking::{prompts, ChunkingStrategy, Refinement};
use crate::error::{Error, Result};
use crate::index::VectorIndex;
use crate::openapi::{EndpointId, SpecDocument};
use crate::providers::{EmbeddingProvider, LlmProvider, TokenUsage};
use crate::retrieval::retrieve;
use crate::tokenizer::Tokenizer;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkQuery {
    pub query_id: String,
    pub text: String,
    /// Non-empty, without duplicates.
    pub gold: Vec<EndpointId>,
}

pub fn load_benchmark(path: impl AsRef<Path>) -> Result<Vec<BenchmarkQuery>> {
    let bytes = std::fs::read(path.as_ref())?;
    parse_benchmark(&bytes)
}

/// Parses a JSON or YAML array of `{query, solution: ["VERB /path", ...]}`
/// records. `solutions` and `gold` are accepted for the endpoint list, an
/// `id` field overrides the default zero-padded position.
pub fn parse_benchmark(bytes: &[u8]) -> Result<Vec<BenchmarkQuery>> {
    let value: Value = match serde_json::from_slice(bytes) {
        Ok(v) => v,
        Err(json_err) => serde_yaml::from_slice(bytes)
            .map_err(|_| Error::MalformedBenchmark(format!("neither JSON nor YAML: {json_err}")))?,
    };
    let records = match &value {
        Value::Array(items) => items,
        Value::Object(map) => match map.get("queries") {
            Some(Value::Array(items)) => items,
            _ => return Err(Error::MalformedBenchmark("expected an array of queries".into())),
        },
        _ => return Err(Error::MalformedBenchmark("expected an array of queries".into())),
    };
    let mut seen_ids = HashSet::new();
    records
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let q = parse_record(i, rec)?;
            if !seen_ids.insert(q.query_id.clone()) {
                return Err(Error::MalformedBenchmark(format!("duplicate query id `{}`", q.query_id)));
            }
            Ok(q)
        })
        .collect()
}

fn parse_record(i: usize, rec: &Value) -> Result<BenchmarkQuery> {
    let bad = |msg: String| Error::MalformedBenchmark(format!("record {i}: {msg}"));
    let obj = rec.as_object().ok_or_else(|| bad("not an object".into()))?;
    let text = obj
        .get("query")
        .and_then(Value::as_str)
        .filter(|s| !s.trim().is_empty())
        .ok_or_else(|| bad("missing `query` text".into()))?;
    let solution = ["solution", "solutions", "gold"]
        .iter()
        .find_map(|k| obj.get(*k))
        .and_then(Value::as_array)
        .ok_or_else(|| bad("missing `solution` list".into()))?;
    let mut gold = Vec::new();
    for s in solution {
        let s = s.as_str().ok_or_else(|| bad("solution entries must be strings".into()))?;
        let id = parse_solution_entry(s).map_err(|e| bad(e.to_string()))?;
        if !gold.contains(&id) {
            gold.push(id);
        }
    }
    if gold.is_empty() {
        return Err(bad("empty solution".into()));
    }
    let query_id = match obj.get("id") {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Number(n)) => n.to_string(),
        _ => format!("{i:03}"),
    };
    Ok(BenchmarkQuery { query_id, text: text.to_string(), gold })
}

/// `"GET /path"`, ignoring a trailing query string.
fn parse_solution_entry(s: &str) -> Result<EndpointId> {
    let s = s.trim();
    let (verb, path) = s.split_once(char::is_whitespace).ok_or_else(|| Error::InvalidEndpointId(s.into()))?;
    let path = path.trim();
    let path = path.split_once('?').map_or(path, |(p, _)| p);
    EndpointId::parse_parts(verb, path)
}

/// Gold endpoints missing from `doc`, each also logged as a warning.
pub fn check_gold_against_spec(bench: &[BenchmarkQuery], doc: &SpecDocument) -> Vec<(String, EndpointId)> {
    let mut missing = Vec::new();
    for q in bench {
        for id in &q.gold {
            if !doc.contains(id) {
                tracing::warn!(query = %q.query_id, endpoint = %id, "gold endpoint not in {}", doc.source_name);
                missing.push((q.query_id.clone(), id.clone()));
            }
        }
    }
    missing
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub recall: f64,
    pub precision: f64,
    pub f1: f64,
}

impl Metrics {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Metrics {
        let recall = ratio(tp, tp + fn_);
        let precision = ratio(tp, tp + fp);
        Metrics {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            recall,
            precision,
            f1: f1(recall, precision),
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1(recall: f64, precision: f64) -> f64 {
    if recall + precision == 0.0 {
        0.0
    } else {
        2.0 * recall * precision / (recall + precision)
    }
}

/// Set-based recall, precision and F1. Duplicates in either list are
/// collapsed; precision is 0 for an empty prediction.
pub fn compute_metrics(predicted: &[EndpointId], gold: &[EndpointId]) -> Result<Metrics> {
    let gold: HashSet<&EndpointId> = gold.iter().collect();
    if gold.is_empty() {
        return Err(Error::EmptyGold);
    }
    let predicted: HashSet<&EndpointId> = predicted.iter().collect();
    let tp = predicted.intersection(&gold).count();
    Ok(Metrics::from_counts(tp, predicted.len() - tp, gold.len() - tp))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub query_id: String,
    pub metrics: Metrics,
    /// For retrieval runs `prompt` is the retrieved token count and
    /// `completion` is 0.
    pub usage: TokenUsage,
    pub predicted: Vec<EndpointId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Mean of per-query values.
    #[default]
    Macro,
    /// Metrics from the summed TP/FP/FN counts.
    Micro,
}

impl FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "macro" => Ok(Averaging::Macro),
            "micro" => Ok(Averaging::Micro),
            _ => Err(Error::InvalidInput(format!("unknown averaging `{s}` (macro, micro)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    /// `rag`, `agent-query` or `agent-summary`.
    pub mode: String,
    pub splitting: String,
    pub refinement: String,
    pub chunk_size: Option<usize>,
    pub overlap: Option<usize>,
    pub embedding_model: String,
    pub k: usize,
    pub tokenizer: String,
    #[serde(default)]
    pub llm: Option<String>,
    pub prompt_versions: String,
    #[serde(default)]
    pub benchmark: String,
    #[serde(default)]
    pub averaging: Averaging,
    /// Unix seconds; only recorded on request so reports stay reproducible.
    #[serde(default)]
    pub started_unix: Option<u64>,
    #[serde(default)]
    pub finished_unix: Option<u64>,
}

impl RunMetadata {
    pub fn for_retrieval(strategy: &ChunkingStrategy, k: usize, tokenizer: &str) -> Self {
        let prompt_versions = match strategy.refinement {
            Refinement::LlmSummary => prompts::SUMMARY_VERSION,
            Refinement::LlmQuery => prompts::QUERY_VERSION,
            _ => "",
        };
        RunMetadata {
            mode: "rag".into(),
            splitting: strategy.splitting.to_string(),
            refinement: strategy.refinement.to_string(),
            chunk_size: strategy.chunk_size,
            overlap: strategy.overlap,
            embedding_model: strategy.embedding_model.clone(),
            k,
            tokenizer: tokenizer.to_string(),
            llm: None,
            prompt_versions: prompt_versions.into(),
            benchmark: String::new(),
            averaging: Averaging::Macro,
            started_unix: None,
            finished_unix: None,
        }
    }

    pub fn for_agent(strategy: &ChunkingStrategy, cfg: &AgentConfig, tokenizer: &str) -> Self {
        let mut meta = Self::for_retrieval(strategy, cfg.k, tokenizer);
        meta.mode = format!("agent-{}", cfg.strategy);
        meta.llm = Some(cfg.llm_name.clone());
        meta.prompt_versions = match cfg.strategy {
            crate::agent::ToolStrategy::QueryTool => PROMPT_VERSION.to_string(),
            crate::agent::ToolStrategy::SummaryTool => format!("{PROMPT_VERSION}+{}", prompts::SUMMARY_VERSION),
        };
        meta
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub metadata: RunMetadata,
    pub rows: Vec<MetricsRow>,
    pub mean_recall: f64,
    pub mean_precision: f64,
    pub mean_f1: f64,
    pub mean_prompt_tokens: f64,
    pub mean_completion_tokens: f64,
    pub mean_total_tokens: f64,
}

impl RunReport {
    pub fn new(metadata: RunMetadata, rows: Vec<MetricsRow>) -> Self {
        let n = rows.len().max(1) as f64;
        let mean = |f: &dyn Fn(&MetricsRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
        let (mean_recall, mean_precision, mean_f1) = match metadata.averaging {
            Averaging::Macro => (mean(&|r| r.metrics.recall), mean(&|r| r.metrics.precision), mean(&|r| r.metrics.f1)),
            Averaging::Micro => {
                let sum = |f: &dyn Fn(&Metrics) -> usize| rows.iter().map(|r| f(&r.metrics)).sum::<usize>();
                let m = Metrics::from_counts(
                    sum(&|m| m.true_positives),
                    sum(&|m| m.false_positives),
                    sum(&|m| m.false_negatives),
                );
                (m.recall, m.precision, m.f1)
            }
        };
        RunReport {
            mean_prompt_tokens: mean(&|r| r.usage.prompt as f64),
            mean_completion_tokens: mean(&|r| r.usage.completion as f64),
            mean_total_tokens: mean(&|r| r.usage.total as f64),
            metadata,
            rows,
            mean_recall,
            mean_precision,
            mean_f1,
        }
    }
}

/// Retrieval baseline: the predicted set is the endpoints of the top-`k`
/// chunks, prompt tokens are the retrieved chunk tokens.
pub fn evaluate_retrieval(
    idx: &VectorIndex,
    emb: &dyn EmbeddingProvider,
    tok: &dyn Tokenizer,
    bench: &[BenchmarkQuery],
    k: usize,
    metadata: RunMetadata,
) -> Result<RunReport> {
    let rows = bench
        .par_iter()
        .map(|q| {
            let r = retrieve(idx, emb, tok, &q.text, k)?;
            Ok(MetricsRow {
                query_id: q.query_id.clone(),
                metrics: compute_metrics(&r.endpoints, &q.gold)?,
                usage: TokenUsage::new(r.retrieved_token_count as u64, 0),
                predicted: r.endpoints,
                error: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunReport::new(metadata, rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentEvaluation {
    pub report: RunReport,
    /// One per benchmark query; `None` where the run failed.
    pub traces: Vec<Option<AgentTrace>>,
}

/// Runs the agent per query. A failing query scores zero with the error in
/// its row; the remaining queries still run.
pub fn evaluate_agent(
    cfg: &AgentConfig,
    ctx: &AgentContext<'_>,
    llm: &dyn LlmProvider,
    bench: &[BenchmarkQuery],
    metadata: RunMetadata,
) -> Result<AgentEvaluation> {
    cfg.validate()?;
    let results: Vec<(MetricsRow, Option<AgentTrace>)> = bench
        .par_iter()
        .map(|q| match run_agent(&q.text, cfg, ctx, llm) {
            Ok(out) => {
                let metrics = compute_metrics(&out.endpoints, &q.gold)?;
                let row = MetricsRow {
                    query_id: q.query_id.clone(),
                    metrics,
                    usage: out.trace.total_usage,
                    predicted: out.endpoints,
                    error: None,
                };
                Ok((row, Some(out.trace)))
            }
            Err(e) => {
                let row = MetricsRow {
                    query_id: q.query_id.clone(),
                    metrics: Metrics::from_counts(0, 0, q.gold.len()),
                    usage: TokenUsage::default(),
                    predicted: vec![],
                    error: Some(format!("{}: {e}", e.code())),
                };
                Ok((row, None))
            }
        })
        .collect::<Result<_>>()?;
    let (rows, traces) = results.into_iter().unzip();
    Ok(AgentEvaluation { report: RunReport::new(metadata, rows), traces })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(Error::InvalidInput(format!("unknown report format `{s}` (csv, json, markdown)"))),
        }
    }
}

fn pct(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

fn tokens(x: f64) -> String {
    format!("{x:.2}")
}

const META_COLUMNS: [&str; 14] = [
    "mode",
    "splitting",
    "refinement",
    "chunk_size",
    "overlap",
    "embedding_model",
    "k",
    "tokenizer",
    "llm",
    "prompt_versions",
    "benchmark",
    "averaging",
    "started_unix",
    "finished_unix",
];

fn meta_values(m: &RunMetadata) -> Vec<String> {
    vec![
        m.mode.clone(),
        m.splitting.clone(),
        m.refinement.clone(),
        opt(&m.chunk_size),
        opt(&m.overlap),
        m.embedding_model.clone(),
        m.k.to_string(),
        m.tokenizer.clone(),
        opt(&m.llm),
        m.prompt_versions.clone(),
        m.benchmark.clone(),
        format!("{:?}", m.averaging).to_lowercase(),
        opt(&m.started_unix),
        opt(&m.finished_unix),
    ]
}

pub fn emit_report(report: &RunReport, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => Ok((serde_json::to_string_pretty(report)? + "\n").into_bytes()),
        ReportFormat::Csv => emit_csv(report),
        ReportFormat::Markdown => Ok(emit_markdown(report).into_bytes()),
    }
}

fn emit_csv(report: &RunReport) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = META_COLUMNS.to_vec();
    header.extend([
        "query_id",
        "recall",
        "precision",
        "f1",
        "prompt_tokens",
        "completion_tokens",
        "total_tokens",
        "predicted",
        "error",
    ]);
    w.write_record(&header).map_err(csv_err)?;
    let meta = meta_values(&report.metadata);
    for r in &report.rows {
        let mut rec = meta.clone();
        rec.extend([
            r.query_id.clone(),
            pct(r.metrics.recall),
            pct(r.metrics.precision),
            pct(r.metrics.f1),
            r.usage.prompt.to_string(),
            r.usage.completion.to_string(),
            r.usage.total.to_string(),
            r.predicted.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
            r.error.clone().unwrap_or_default(),
        ]);
        w.write_record(&rec).map_err(csv_err)?;
    }
    let mut mean = meta;
    mean.extend([
        "mean".to_string(),
        pct(report.mean_recall),
        pct(report.mean_precision),
        pct(report.mean_f1),
        tokens(report.mean_prompt_tokens),
        tokens(report.mean_completion_tokens),
        tokens(report.mean_total_tokens),
        String::new(),
        String::new(),
    ]);
    w.write_record(&mean).map_err(csv_err)?;
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

fn md_cell(s: &str) -> String {
    s.replace('|', "\\|")
}

fn emit_markdown(report: &RunReport) -> String {
    let m = &report.metadata;
    let mut out = String::new();
    let _ = writeln!(out, "<!-- specrag report -->");
    for (k, v) in META_COLUMNS.iter().zip(meta_values(m)) {
        if !v.is_empty() {
            let _ = writeln!(out, "- {k}: {}", md_cell(&v));
        }
    }
    out.push('\n');
    out.push_str(&emit_grid(std::slice::from_ref(report)));
    out.push('\n');
    let _ = writeln!(out, "| Query | Recall | Precision | F1 | Prompt | Completion | Total | Predicted |");
    let _ = writeln!(out, "|---|---:|---:|---:|---:|---:|---:|---|");
    for r in &report.rows {
        let predicted = r.predicted.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
        let predicted = match &r.error {
            Some(e) => format!("error: {e}"),
            None => predicted,
        };
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} |",
            md_cell(&r.query_id),
            pct(r.metrics.recall),
            pct(r.metrics.precision),
            pct(r.metrics.f1),
            r.usage.prompt,
            r.usage.completion,
            r.usage.total,
            md_cell(&predicted)
        );
    }
    out
}

/// One mean row per report: strategy parameters, then recall, precision,
/// F1 in percent and mean token counts.
pub fn emit_grid(reports: &[RunReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "| Mode | Splitting | Refinement | s | l | Model | k | Recall | Precision | F1 | Prompt | Completion | Total |"
    );
    let _ = writeln!(out, "|---|---|---|---:|---:|---|---:|---:|---:|---:|---:|---:|---:|");
    for r in reports {
        let m = &r.metadata;
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} | {} |",
            md_cell(&m.mode),
            md_cell(&m.splitting),
            md_cell(&m.refinement),
            opt(&m.chunk_size),
            opt(&m.overlap),
            md_cell(&m.embedding_model),
            m.k,
            pct(r.mean_recall),
            pct(r.mean_precision),
            pct(r.mean_f1),
            tokens(r.mean_prompt_tokens),
            tokens(r.mean_completion_tokens),
            tokens(r.mean_total_tokens),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::openapi::HttpVerb;

    fn id(p: &str) -> EndpointId {
        EndpointId::new(HttpVerb::Get, p)
    }

    #[test]
    fn metric_examples() {
        let m = compute_metrics(&[id("/a"), id("/b")], &[id("/a"), id("/c")]).unwrap();
        assert_eq!((m.recall, m.precision, m.f1), (0.5, 0.5, 0.5));
        let m = compute_metrics(&[id("/a")], &[id("/a")]).unwrap();
        assert_eq!((m.recall, m.precision, m.f1), (1.0, 1.0, 1.0));
        let m = compute_metrics(&[], &[id("/a")]).unwrap();
        assert_eq!((m.recall, m.precision, m.f1), (0.0, 0.0, 0.0));
        assert!(matches!(compute_metrics(&[id("/a")], &[]), Err(Error::EmptyGold)));
    }

    #[test]
    fn duplicates_collapse() {
        let m = compute_metrics(&[id("/a"), id("/a"), id("/b")], &[id("/a")]).unwrap();
        assert_eq!(m.false_positives, 1);
        assert_eq!(m.precision, 0.5);
    }

    #[test]
    fn loads_restbench_records() {
        let text = r#"[
          {"query": "Who directed the top-1 rated movie?", "solution": ["GET /movie/top_rated", "GET /movie/{movie_id}/credits"]},
          {"query": "Search a person", "solution": ["get /search/person?query=x"]}
        ]"#;
        let b = parse_benchmark(text.as_bytes()).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[0].query_id, "000");
        assert_eq!(b[0].gold, [id("/movie/top_rated"), id("/movie/{movie_id}/credits")]);
        assert_eq!(b[1].gold, [id("/search/person")]);
    }

    #[test]
    fn rejects_bad_records() {
        for text in [
            r#"{"a": 1}"#,
            r#"[{"solution": ["GET /a"]}]"#,
            r#"[{"query": "q", "solution": []}]"#,
            r#"[{"query": "q", "solution": ["FETCH /a"]}]"#,
            r#"[{"query": "q", "solution": ["GET a"]}]"#,
        ] {
            assert!(matches!(parse_benchmark(text.as_bytes()), Err(Error::MalformedBenchmark(_))), "{text}");
        }
    }

    #[test]
    fn yaml_benchmark() {
        let b = parse_benchmark(b"- query: q\n  solution:\n    - GET /a\n  id: x1\n").unwrap();
        assert_eq!(b[0].query_id, "x1");
    }

    fn report(averaging: Averaging) -> RunReport {
        let strategy =
            ChunkingStrategy::token_chunking(crate::chunking::Splitting::EndpointSplit, 1024, 0, "m").unwrap();
        let mut meta = RunMetadata::for_retrieval(&strategy, 10, "reference");
        meta.averaging = averaging;
        let row = |q: &str, pred: &[EndpointId], gold: &[EndpointId], prompt| MetricsRow {
            query_id: q.into(),
            metrics: compute_metrics(pred, gold).unwrap(),
            usage: TokenUsage::new(prompt, 0),
            predicted: pred.to_vec(),
            error: None,
        };
        RunReport::new(
            meta,
            vec![
                row("000", &[id("/a")], &[id("/a")], 100),
                row("001", &[id("/a"), id("/b"), id("/c")], &[id("/a")], 300),
            ],
        )
    }

    #[test]
    fn macro_and_micro_means() {
        let r = report(Averaging::Macro);
        assert!((r.mean_precision - (1.0 + 1.0 / 3.0) / 2.0).abs() < 1e-12);
        assert_eq!(r.mean_prompt_tokens, 200.0);
        assert_eq!(r.mean_completion_tokens, 0.0);
        let r = report(Averaging::Micro);
        assert!((r.mean_precision - 0.5).abs() < 1e-12);
    }

    #[test]
    fn csv_reads_back() {
        let bytes = emit_report(&report(Averaging::Macro), ReportFormat::Csv).unwrap();
        let mut rd = csv::Reader::from_reader(bytes.as_slice());
        let headers = rd.headers().unwrap().clone();
        let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 3);
        let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
        assert_eq!(&rows[2][col("query_id")], "mean");
        assert_eq!(&rows[1][col("precision")], "33.33");
        assert_eq!(&rows[0][col("chunk_size")], "1024");
    }

    #[test]
    fn markdown_is_stable() {
        let r = report(Averaging::Macro);
        let a = emit_report(&r, ReportFormat::Markdown).unwrap();
        assert_eq!(a, emit_report(&r, ReportFormat::Markdown).unwrap());
        let text = String::from_utf8(a).unwrap();
        assert!(text.contains("| Recall | Precision | F1 |"));
        assert!(text.contains("| 100.00 | 66.67 |"));
    }
}
