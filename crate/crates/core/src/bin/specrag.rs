use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use specrag::agent::{build_summary_tool_chunks, run_agent, AgentConfig, AgentContext, ToolStrategy};
use specrag::chunking::{chunk_spec, Chunk, LlmRefiner, LlmTask, Refinement, RefinementCache};
use specrag::config::{parse_local_model_name, Embedder, EmbeddingConfig, RunConfig, LOCAL_PROVIDER};
use specrag::eval::{
    check_gold_against_spec, emit_grid, emit_report, evaluate_agent, evaluate_retrieval, load_benchmark, Averaging,
    ReportFormat, RunMetadata, RunReport,
};
use specrag::index::{build_index, load_index_from_path, save_index_to_path, VectorIndex};
use specrag::openapi::{parse_spec_with, ParseOptions, SpecDocument};
use specrag::providers::{LlmProvider, LocalHashEmbedder, Script, ScriptedLlm};
use specrag::retrieval::retrieve;
use specrag::tokenizer::{count_tokens, Tokenizer, TokenizerSpec};
use specrag::{Error, Result};

const CHUNK_FILE_FORMAT: &str = "specrag-chunks-v1";

#[derive(Parser)]
#[command(name = "specrag", version, about = "Chunk, index, search and evaluate OpenAPI documents")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// `reference` or `bpe:<rank file>`.
    #[arg(long, global = true)]
    tokenizer: Option<String>,
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// `local[:dim]` or `<provider>:<model>[:dim]`.
    #[arg(long, global = true)]
    embedding: Option<String>,
    #[arg(long, global = true)]
    parallelism: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split OpenAPI documents into chunks.
    Chunk(ChunkArgs),
    /// Embed a chunk file into an index.
    Index(IndexArgs),
    /// Retrieve the top-k endpoints for a query.
    Query(QueryArgs),
    /// Run the discovery agent on one query.
    Agent(AgentArgs),
    /// Score retrieval or the agent on a benchmark.
    Eval(EvalArgs),
    /// Combine JSON reports into one comparison table.
    Grid(GridArgs),
}

#[derive(Args)]
struct ChunkArgs {
    #[arg(long = "spec")]
    specs: Vec<PathBuf>,
    /// none, endpoint or json.
    #[arg(long)]
    splitting: Option<String>,
    /// token-chunking, remove-examples, relevant-fields, summary or query.
    #[arg(long)]
    refinement: Option<String>,
    #[arg(long)]
    chunk_size: Option<usize>,
    #[arg(long)]
    overlap: Option<usize>,
    /// Inline local `$ref`s before chunking.
    #[arg(long)]
    resolve_refs: bool,
    /// Replay LLM refinements from a script instead of calling a provider.
    #[arg(long)]
    scripted: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    chunks: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Index one summary line per endpoint, built from summary chunks, for
    /// the summary agent strategy.
    #[arg(long)]
    summary_mode: bool,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    query: String,
}

#[derive(Args)]
struct AgentArgs {
    #[arg(long)]
    index: PathBuf,
    /// Specification for endpoint details; defaults to the first configured spec.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// query or summary.
    #[arg(long, default_value = "summary")]
    strategy: String,
    #[arg(long)]
    scripted: Option<PathBuf>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    trace_out: Option<PathBuf>,
    #[arg(long)]
    resolve_refs: bool,
    query: String,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    benchmark: PathBuf,
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Evaluate the agent with this tool strategy (query or summary).
    #[arg(long)]
    agent: Option<String>,
    #[arg(long)]
    scripted: Option<PathBuf>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// csv, json or markdown.
    #[arg(long, default_value = "markdown")]
    format: String,
    #[arg(long, default_value = "macro")]
    averaging: String,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write one trace per query into this directory.
    #[arg(long)]
    traces_dir: Option<PathBuf>,
    /// Record start and end times in the report.
    #[arg(long)]
    timestamps: bool,
    #[arg(long)]
    resolve_refs: bool,
}

#[derive(Args)]
struct GridArgs {
    reports: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct ChunkFile {
    format: String,
    fingerprint: String,
    sources: Vec<String>,
    chunks: Vec<Chunk>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(
                e.kind(),
                ErrorKind::DisplayHelp
                    | ErrorKind::DisplayVersion
                    | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand
            ) {
                e.exit();
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or_default().trim_start_matches("error: ");
            eprintln!("error[USAGE]: {first}");
            return ExitCode::from(2);
        }
    };
    init_logging();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), one_line(&e.to_string()));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_env("SPECRAG_LOG")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    let _ = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .without_time()
        .with_target(false)
        .try_init();
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.cache_dir {
        cfg.cache_dir = dir.clone();
    }
    if let Some(t) = &cli.tokenizer {
        cfg.tokenizer = t.clone();
    }
    if let Some(k) = cli.k {
        cfg.k = k;
    }
    if let Some(p) = cli.parallelism {
        cfg.parallelism = p;
    }
    if let Some(e) = &cli.embedding {
        cfg.embedding = Some(parse_embedding_flag(e, cfg.embedding.clone())?);
    }
    if let Command::Chunk(a) = &cli.command {
        if !a.specs.is_empty() {
            cfg.spec_paths = a.specs.clone();
        }
        if let Some(s) = &a.splitting {
            cfg.strategy.splitting = s.clone();
        }
        if let Some(r) = &a.refinement {
            cfg.strategy.refinement = r.clone();
        }
        if a.chunk_size.is_some() {
            cfg.strategy.chunk_size = a.chunk_size;
        }
        if a.overlap.is_some() {
            cfg.strategy.overlap = a.overlap;
        }
    }
    cfg.validate()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let tok = TokenizerSpec::parse(&cfg.tokenizer)?.build()?;

    match cli.command {
        Command::Chunk(a) => cmd_chunk(&cfg, tok.as_ref(), &a),
        Command::Index(a) => cmd_index(&cfg, &a),
        Command::Query(a) => cmd_query(&cfg, tok.as_ref(), &a, cli.json),
        Command::Agent(a) => cmd_agent(&cfg, tok.as_ref(), &a, cli.json),
        Command::Eval(a) => cmd_eval(&cfg, tok.as_ref(), &a),
        Command::Grid(a) => cmd_grid(&a),
    }
}

fn parse_embedding_flag(flag: &str, base: Option<EmbeddingConfig>) -> Result<EmbeddingConfig> {
    let mut e = base.unwrap_or_default();
    let parts: Vec<&str> = flag.split(':').collect();
    let dim = |s: &str| s.parse::<usize>().map_err(|_| Error::Config(format!("bad embedding dimension `{s}`")));
    match parts.as_slice() {
        [LOCAL_PROVIDER] => e.provider = LOCAL_PROVIDER.into(),
        [LOCAL_PROVIDER, d] => {
            e.provider = LOCAL_PROVIDER.into();
            e.dimension = dim(d)?;
        }
        [provider, model] | [provider, model, _] => {
            e.provider = provider.to_string();
            e.model = model.to_string();
            e.dimension = match parts.get(2) {
                Some(d) => dim(d)?,
                None => known_dimension(model).ok_or_else(|| {
                    Error::Config(format!("unknown dimension for `{model}`; use {provider}:{model}:<dim>"))
                })?,
            };
        }
        _ => return Err(Error::Config(format!("bad --embedding `{flag}`"))),
    }
    Ok(e)
}

fn known_dimension(model: &str) -> Option<usize> {
    match model {
        "text-embedding-3-large" => Some(3072),
        "text-embedding-3-small" | "text-embedding-ada-002" => Some(1536),
        _ => None,
    }
}

fn load_spec(path: &Path, resolve_refs: bool) -> Result<SpecDocument> {
    let bytes = std::fs::read(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("spec");
    parse_spec_with(&bytes, name, ParseOptions { resolve_refs })
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

fn scripted_llm(path: &Path) -> Result<ScriptedLlm> {
    Ok(ScriptedLlm::new(Script::from_file(path)?))
}

/// The scripted provider when a script is given, otherwise the configured one.
fn resolve_llm(cfg: &RunConfig, scripted: Option<&Path>) -> Result<Arc<dyn LlmProvider>> {
    if let Some(p) = scripted {
        return Ok(Arc::new(scripted_llm(p)?));
    }
    match cfg.llm()? {
        Some(llm) => Ok(llm),
        None => Err(Error::Config("no LLM provider configured; add an [llm] section or pass --scripted".into())),
    }
}

fn cmd_chunk(cfg: &RunConfig, tok: &dyn Tokenizer, a: &ChunkArgs) -> Result<()> {
    if cfg.spec_paths.is_empty() {
        return Err(Error::Config("no specification given; pass --spec or set spec_paths".into()));
    }
    let strategy = cfg.chunking_strategy()?;
    let task = match strategy.refinement {
        Refinement::LlmSummary => Some(LlmTask::Summary),
        Refinement::LlmQuery => Some(LlmTask::Query),
        _ => None,
    };
    let llm = match task {
        Some(_) => Some(resolve_llm(cfg, a.scripted.as_deref())?),
        None => None,
    };
    let cache = match (task, &llm) {
        (Some(t), Some(l)) => Some(RefinementCache::open(&cfg.cache_dir, l.name(), t)?),
        _ => None,
    };
    let refiner = llm.as_deref().map(|l| LlmRefiner { llm: l, cache: cache.as_ref() });

    let mut chunks = Vec::new();
    let mut sources = Vec::new();
    for path in &cfg.spec_paths {
        let doc = load_spec(path, a.resolve_refs)?;
        chunks.extend(chunk_spec(&doc, &strategy, tok, refiner.as_ref())?);
        sources.push(doc.source_name);
    }
    let file = ChunkFile { format: CHUNK_FILE_FORMAT.into(), fingerprint: strategy.fingerprint(), sources, chunks };
    write_output(&a.out, (serde_json::to_string_pretty(&file)? + "\n").as_bytes())?;

    let counts: Vec<usize> = file.chunks.iter().map(|c| count_tokens(tok, &c.content)).collect();
    let total: usize = counts.iter().sum();
    println!("strategy: {}", file.fingerprint);
    println!("chunks: {}", counts.len());
    if !counts.is_empty() {
        println!(
            "content tokens: total {total}, min {}, mean {:.1}, max {}",
            counts.iter().min().unwrap(),
            total as f64 / counts.len() as f64,
            counts.iter().max().unwrap()
        );
    }
    println!("written: {}", a.out.display());
    Ok(())
}

fn read_chunk_file(path: &Path) -> Result<ChunkFile> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: ChunkFile = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("{} is not a chunk file: {e}", path.display())))?;
    if file.format != CHUNK_FILE_FORMAT {
        return Err(Error::InvalidInput(format!("unsupported chunk file format `{}`", file.format)));
    }
    Ok(file)
}

fn cmd_index(cfg: &RunConfig, a: &IndexArgs) -> Result<()> {
    let file = read_chunk_file(&a.chunks)?;
    let chunks = if a.summary_mode {
        if let Some(c) = file.chunks.iter().find(|c| c.strategy.refinement != Refinement::LlmSummary) {
            return Err(Error::InvalidInput(format!(
                "--summary-mode needs summary chunks, `{}` was made with {}",
                c.chunk_id, c.strategy.refinement
            )));
        }
        build_summary_tool_chunks(&file.chunks)?
    } else {
        file.chunks
    };
    let embedder = cfg.embedder()?;
    let idx = build_index(chunks, embedder.provider())?;
    save_index_to_path(&idx, &a.out)?;
    println!("provider: {}", idx.provider_name());
    println!("dimension: {}", idx.dimension());
    println!("entries: {}", idx.len());
    if let Some(stats) = embedder.cache_stats() {
        println!("cache: {} hits, {} misses", stats.hits, stats.misses);
    }
    println!("written: {}", a.out.display());
    Ok(())
}

/// The configured embedder, or for local indexes with no explicit choice,
/// the local embedder the index was built with.
fn embedder_for(cfg: &RunConfig, idx: &VectorIndex) -> Result<Embedder> {
    if cfg.embedding.is_none() {
        if let Some(dim) = parse_local_model_name(idx.provider_name()) {
            return Ok(Embedder::Local(LocalHashEmbedder::new(dim)));
        }
    }
    cfg.embedder()
}

fn cmd_query(cfg: &RunConfig, tok: &dyn Tokenizer, a: &QueryArgs, json: bool) -> Result<()> {
    let idx = load_index_from_path(&a.index)?;
    let embedder = embedder_for(cfg, &idx)?;
    let r = retrieve(&idx, embedder.provider(), tok, &a.query, cfg.k)?;
    let mut out = std::io::stdout().lock();
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&r)?)?;
        return Ok(());
    }
    for id in &r.endpoints {
        let best = r.scored_chunks.iter().find(|s| s.chunk.endpoint_refs.contains(id)).map_or(0.0, |s| s.score);
        writeln!(out, "{best:.4}\t{id}")?;
    }
    writeln!(out, "retrieved chunks: {}", r.scored_chunks.len())?;
    writeln!(out, "retrieved tokens: {}", r.retrieved_token_count)?;
    Ok(())
}

fn agent_spec_path<'a>(cfg: &'a RunConfig, flag: Option<&'a PathBuf>) -> Result<&'a Path> {
    flag.or(cfg.spec_paths.first())
        .map(PathBuf::as_path)
        .ok_or_else(|| Error::Config("the agent needs the specification; pass --spec or set spec_paths".into()))
}

fn cmd_agent(cfg: &RunConfig, tok: &dyn Tokenizer, a: &AgentArgs, json: bool) -> Result<()> {
    let strategy: ToolStrategy = a.strategy.parse()?;
    let llm = resolve_llm(cfg, a.scripted.as_deref())?;
    let doc = load_spec(agent_spec_path(cfg, a.spec.as_ref())?, a.resolve_refs)?;
    let idx = load_index_from_path(&a.index)?;
    let embedder = embedder_for(cfg, &idx)?;
    let mut agent_cfg = AgentConfig::new(strategy, cfg.k, llm.name());
    if let Some(m) = a.max_steps {
        agent_cfg.max_steps = m;
    }
    let ctx = AgentContext { index: &idx, doc: &doc, embedder: embedder.provider(), tokenizer: tok };
    let out = run_agent(&a.query, &agent_cfg, &ctx, llm.as_ref())?;

    let trace_path = match &a.trace_out {
        Some(p) => p.clone(),
        None => {
            let digest = specrag::providers::content_hash(&a.query);
            cfg.cache_dir.join("traces").join(format!("{}.json", &digest[..16]))
        }
    };
    write_output(&trace_path, out.trace.to_json().as_bytes())?;

    let t = &out.trace;
    let mut w = std::io::stdout().lock();
    if json {
        let summary = serde_json::json!({
            "endpoints": out.endpoints,
            "steps": t.steps.len(),
            "usage": t.total_usage,
            "truncated": t.truncated,
            "malformed_final_answer": t.malformed_final_answer,
            "hallucinated_endpoints": t.hallucinated_endpoints,
            "trace": trace_path,
        });
        writeln!(w, "{}", serde_json::to_string_pretty(&summary)?)?;
        return Ok(());
    }
    for id in &out.endpoints {
        let flag = if t.hallucinated_endpoints.contains(id) { "\t(not in specification)" } else { "" };
        writeln!(w, "{id}{flag}")?;
    }
    writeln!(w, "steps: {}{}", t.steps.len(), if t.truncated { " (step limit reached)" } else { "" })?;
    if t.malformed_final_answer {
        writeln!(w, "warning: the final answer named no endpoints")?;
    }
    writeln!(
        w,
        "tokens: prompt {}, completion {}, total {}",
        t.total_usage.prompt, t.total_usage.completion, t.total_usage.total
    )?;
    writeln!(w, "trace: {}", trace_path.display())?;
    Ok(())
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn cmd_eval(cfg: &RunConfig, tok: &dyn Tokenizer, a: &EvalArgs) -> Result<()> {
    let format: ReportFormat = a.format.parse()?;
    let averaging: Averaging = a.averaging.parse()?;
    let bench = load_benchmark(&a.benchmark)?;
    let idx = load_index_from_path(&a.index)?;
    let embedder = embedder_for(cfg, &idx)?;
    let strategy = idx.chunks().first().map(|c| c.strategy.clone()).ok_or(Error::EmptyCorpus)?;
    let started = a.timestamps.then(unix_now);

    let spec_path = a.spec.as_ref().or(cfg.spec_paths.first());
    let doc = spec_path.map(|p| load_spec(p, a.resolve_refs)).transpose()?;
    if let Some(doc) = &doc {
        let missing = check_gold_against_spec(&bench, doc);
        if !missing.is_empty() {
            tracing::warn!("{} gold endpoints are not in {}", missing.len(), doc.source_name);
        }
    }

    let bench_name = a.benchmark.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
    let mut report = match &a.agent {
        None => {
            let mut meta = RunMetadata::for_retrieval(&strategy, cfg.k, tok.name());
            meta.benchmark = bench_name;
            meta.averaging = averaging;
            evaluate_retrieval(&idx, embedder.provider(), tok, &bench, cfg.k, meta)?
        }
        Some(s) => {
            let tool_strategy: ToolStrategy = s.parse()?;
            let llm = resolve_llm(cfg, a.scripted.as_deref())?;
            let doc = doc.as_ref().ok_or_else(|| {
                Error::Config("agent evaluation needs the specification; pass --spec or set spec_paths".into())
            })?;
            let mut agent_cfg = AgentConfig::new(tool_strategy, cfg.k, llm.name());
            if let Some(m) = a.max_steps {
                agent_cfg.max_steps = m;
            }
            let mut meta = RunMetadata::for_agent(&strategy, &agent_cfg, tok.name());
            meta.benchmark = bench_name;
            meta.averaging = averaging;
            let ctx = AgentContext { index: &idx, doc, embedder: embedder.provider(), tokenizer: tok };
            let evaluation = evaluate_agent(&agent_cfg, &ctx, llm.as_ref(), &bench, meta)?;
            if let Some(dir) = &a.traces_dir {
                std::fs::create_dir_all(dir)?;
                for (q, trace) in bench.iter().zip(&evaluation.traces) {
                    if let Some(t) = trace {
                        std::fs::write(dir.join(format!("{}.json", q.query_id)), t.to_json())?;
                    }
                }
            }
            evaluation.report
        }
    };
    if a.timestamps {
        report.metadata.started_unix = started;
        report.metadata.finished_unix = Some(unix_now());
    }

    let bytes = emit_report(&report, format)?;
    match &a.out {
        Some(p) => {
            write_output(p, &bytes)?;
            eprintln!(
                "{} queries, recall {:.2}, precision {:.2}, F1 {:.2}; written {}",
                report.rows.len(),
                report.mean_recall * 100.0,
                report.mean_precision * 100.0,
                report.mean_f1 * 100.0,
                p.display()
            );
        }
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    if let Some(stats) = embedder.cache_stats() {
        tracing::info!(hits = stats.hits, misses = stats.misses, "embedding cache");
    }
    Ok(())
}

fn cmd_grid(a: &GridArgs) -> Result<()> {
    if a.reports.is_empty() {
        return Err(Error::InvalidInput("no reports given".into()));
    }
    let reports = a
        .reports
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str::<RunReport>(&text)
                .map_err(|e| Error::InvalidInput(format!("{} is not a JSON report: {e}", p.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = emit_grid(&reports);
    match &a.out {
        Some(p) => write_output(p, grid.as_bytes()),
        None => Ok(std::io::stdout().lock().write_all(grid.as_bytes())?),
    }
}
