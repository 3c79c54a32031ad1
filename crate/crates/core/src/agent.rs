//! Tool-calling discovery agent.
//!
//! The model gets the user query and one or two tools over the chunk index.
//! It may split the query into subtasks, search for each, optionally fetch
//! full endpoint details, and must finish with one `VERB /path` line per
//! endpoint it needs. Every model call is recorded in an [`AgentTrace`].

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chunking::Chunk;
use crate::error::{Error, Result};
use crate::index::VectorIndex;
use crate::openapi::{serialize_endpoint, EndpointId, SpecDocument};
use crate::providers::{
    content_hash, ChatResponse, EmbeddingProvider, LlmProvider, Message, ParamType, Reply, Script, ScriptReply,
    ScriptRun, ScriptTurn, TokenUsage, ToolCall, ToolParameter, ToolSchema,
};
use crate::retrieval::retrieve;
use crate::tokenizer::{count_tokens, Tokenizer};

pub const PROMPT_VERSION: &str = "agent-v1";

pub const SYSTEM_PROMPT: &str = "You find the REST API endpoints needed to answer a user request. \
Break the request into small subtasks, one per piece of information that has to be fetched or changed. \
Use the search tool once per subtask to look up candidate endpoints. \
When a short description is not enough to decide, fetch the endpoint details. \
Keep only the endpoints that are really needed and drop the rest. \
When you are done, answer with the needed endpoints only, one per line, each formatted as \
`VERB /path` exactly as written in the specification, for example `GET /movie/top_rated`.";

pub const SEARCH_TOOL: &str = "search_endpoints";
pub const DETAILS_TOOL: &str = "get_endpoint_details";

/// Line placed between chunk contents in full-content search results.
pub const RESULT_DELIMITER: &str = "\n-----\n";
pub const NO_RESULTS: &str = "No matching endpoints found.";

pub const DEFAULT_MAX_STEPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolStrategy {
    /// One search tool returning full chunk contents.
    QueryTool,
    /// Search over verb, path and summary lines plus a details-on-demand tool.
    SummaryTool,
}

impl ToolStrategy {
    pub fn label(self) -> &'static str {
        match self {
            ToolStrategy::QueryTool => "query",
            ToolStrategy::SummaryTool => "summary",
        }
    }
}

impl fmt::Display for ToolStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ToolStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "query" | "query_tool" => Ok(ToolStrategy::QueryTool),
            "summary" | "summary_tool" => Ok(ToolStrategy::SummaryTool),
            _ => Err(Error::InvalidInput(format!("unknown agent strategy `{s}` (query, summary)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub strategy: ToolStrategy,
    pub k: usize,
    pub max_steps: usize,
    pub llm_name: String,
}

impl AgentConfig {
    pub fn new(strategy: ToolStrategy, k: usize, llm_name: impl Into<String>) -> Self {
        AgentConfig { strategy, k, max_steps: DEFAULT_MAX_STEPS, llm_name: llm_name.into() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidInput("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Everything a tool may read. The index must be the summary-line index
/// for [`ToolStrategy::SummaryTool`].
#[derive(Clone, Copy)]
pub struct AgentContext<'a> {
    pub index: &'a VectorIndex,
    pub doc: &'a SpecDocument,
    pub embedder: &'a dyn EmbeddingProvider,
    pub tokenizer: &'a dyn Tokenizer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseKind {
    ToolCall,
    Final,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentStep {
    /// SHA-256 over the messages and tool schemas sent in this call.
    pub llm_request_digest: String,
    pub response_kind: ResponseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_arguments: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_result_digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_result_tokens: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_text: Option<String>,
    pub usage: TokenUsage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentTrace {
    pub query: String,
    pub strategy: ToolStrategy,
    pub k: usize,
    pub max_steps: usize,
    pub llm_name: String,
    pub prompt_version: String,
    pub tools: Vec<String>,
    pub steps: Vec<AgentStep>,
    pub final_endpoints: Vec<EndpointId>,
    /// Answered endpoints that do not exist in the document. They stay in
    /// `final_endpoints`.
    pub hallucinated_endpoints: Vec<EndpointId>,
    /// The step budget ran out before a final answer.
    pub truncated: bool,
    /// The final answer contained no `VERB /path` line.
    pub malformed_final_answer: bool,
    pub total_usage: TokenUsage,
}

impl AgentTrace {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes") + "\n"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentOutcome {
    pub endpoints: Vec<EndpointId>,
    pub trace: AgentTrace,
}

pub fn tool_schemas(strategy: ToolStrategy) -> Vec<ToolSchema> {
    let param = |name: &str, description: &str| ToolParameter {
        name: name.into(),
        kind: ParamType::String,
        description: description.into(),
    };
    let mut tools = vec![ToolSchema {
        name: SEARCH_TOOL.into(),
        description: match strategy {
            ToolStrategy::QueryTool => {
                "Searches the API specification for one subtask and returns the most relevant parts \
                of the specification."
                    .into()
            }
            ToolStrategy::SummaryTool => {
                "Searches the API specification for one subtask and returns matching endpoints \
                as `VERB /path — summary` lines."
                    .into()
            }
        },
        parameters: vec![param("task", "A short description of one subtask.")],
    }];
    if strategy == ToolStrategy::SummaryTool {
        tools.push(ToolSchema {
            name: DETAILS_TOOL.into(),
            description: "Returns the complete specification of one endpoint.".into(),
            parameters: vec![
                param("verb", "HTTP verb of the endpoint, e.g. GET."),
                param("path", "Path of the endpoint exactly as listed, e.g. /movie/top_rated."),
            ],
        });
    }
    tools
}

/// Full contents of the top-`k` chunks for `task`, separated by
/// [`RESULT_DELIMITER`]. Also returns the retrieved token count.
pub fn tool_search_full(ctx: &AgentContext<'_>, task: &str, k: usize) -> Result<(String, usize)> {
    let r = retrieve(ctx.index, ctx.embedder, ctx.tokenizer, task, k)?;
    if r.scored_chunks.is_empty() {
        return Ok((NO_RESULTS.to_string(), 0));
    }
    let parts: Vec<&str> = r.scored_chunks.iter().map(|s| s.chunk.content.as_str()).collect();
    Ok((parts.join(RESULT_DELIMITER), r.retrieved_token_count))
}

/// One summary line (verb, path, summary) per retrieved chunk of a
/// summary-line index.
pub fn tool_search_summaries(ctx: &AgentContext<'_>, task: &str, k: usize) -> Result<(String, usize)> {
    let r = retrieve(ctx.index, ctx.embedder, ctx.tokenizer, task, k)?;
    if r.scored_chunks.is_empty() {
        return Ok((NO_RESULTS.to_string(), 0));
    }
    let lines: Vec<&str> = r.scored_chunks.iter().map(|s| s.chunk.content.as_str()).collect();
    Ok((lines.join("\n"), r.retrieved_token_count))
}

/// Serialized endpoint, or a not-found message naming the closest path.
pub fn tool_get_endpoint_details(doc: &SpecDocument, verb: &str, path: &str) -> String {
    match doc.find_endpoint(verb, path) {
        Ok(ep) => serialize_endpoint(ep),
        Err(Error::EndpointNotFound { id, nearest }) => match nearest {
            Some(p) => format!("Endpoint {id} does not exist. The closest existing path is {p}."),
            None => format!("Endpoint {id} does not exist."),
        },
        Err(e) => format!("Error: {e}"),
    }
}

/// Turns LLM-summary chunks into the one-line chunks searched by the summary
/// tool: verb and path, an em dash, then the summary. Content and embedding
/// input are the same line.
pub fn build_summary_tool_chunks(summary_chunks: &[Chunk]) -> Result<Vec<Chunk>> {
    summary_chunks
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let [id] = c.endpoint_refs.as_slice() else {
                return Err(Error::InvalidInput(format!(
                    "chunk `{}` must reference exactly one endpoint to build a summary line",
                    c.chunk_id
                )));
            };
            let summary = c.embedding_input.split_whitespace().collect::<Vec<_>>().join(" ");
            let line = format!("{id} — {summary}");
            let source = c.chunk_id.split('#').next().unwrap_or_default();
            Ok(Chunk {
                chunk_id: format!("{source}#summary-lines.{}#{i:06}", crate::chunking::prompts::SUMMARY_VERSION),
                content: line.clone(),
                embedding_input: line,
                endpoint_refs: vec![id.clone()],
                strategy: c.strategy.clone(),
            })
        })
        .collect()
}

fn endpoint_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r#"(?i)\b(GET|POST|PUT|PATCH|DELETE|HEAD|OPTIONS|TRACE)\s+(/[^\s,;"'`<>()\[\]]*)"#)
            .expect("valid regex")
    })
}

/// Every `VERB /path` fragment in `text`, verbs uppercased, first occurrence
/// order, no duplicates.
pub fn parse_final_endpoints(text: &str) -> Vec<EndpointId> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for cap in endpoint_pattern().captures_iter(text) {
        let path = cap[2].trim_end_matches(['.', ':', '!', '?']);
        if let Ok(id) = EndpointId::parse_parts(&cap[1], path) {
            if seen.insert(id.clone()) {
                out.push(id);
            }
        }
    }
    out
}

fn request_digest(messages: &[Message], tools: &[ToolSchema]) -> String {
    let payload = json!({ "messages": messages, "tools": tools });
    content_hash(&payload.to_string())
}

fn execute_tool(ctx: &AgentContext<'_>, cfg: &AgentConfig, call: &ToolCall) -> (String, Option<usize>) {
    let rendered = match (cfg.strategy, call.name.as_str()) {
        (strategy, SEARCH_TOOL) => match call.arg("task").filter(|t| !t.trim().is_empty()) {
            None => Err(Error::InvalidInput("`task` argument is missing or empty".into())),
            Some(task) if strategy == ToolStrategy::QueryTool => tool_search_full(ctx, task, cfg.k),
            Some(task) => tool_search_summaries(ctx, task, cfg.k),
        },
        (ToolStrategy::SummaryTool, DETAILS_TOOL) => match (call.arg("verb"), call.arg("path")) {
            (Some(verb), Some(path)) => {
                let text = tool_get_endpoint_details(ctx.doc, verb, path);
                let tokens = count_tokens(ctx.tokenizer, &text);
                Ok((text, tokens))
            }
            _ => Err(Error::InvalidInput("`verb` and `path` arguments are required".into())),
        },
        (_, other) => Err(Error::InvalidInput(format!("unknown tool `{other}`"))),
    };
    match rendered {
        Ok((text, tokens)) => (text, Some(tokens)),
        Err(e) => (format!("Error: {e}"), None),
    }
}

/// Runs the discovery loop for one query. Provider failures abort the run;
/// tool failures are reported back to the model and the loop continues.
pub fn run_agent(
    query: &str,
    cfg: &AgentConfig,
    ctx: &AgentContext<'_>,
    llm: &dyn LlmProvider,
) -> Result<AgentOutcome> {
    if query.trim().is_empty() {
        return Err(Error::InvalidInput("query is empty".into()));
    }
    cfg.validate()?;

    let tools = tool_schemas(cfg.strategy);
    let mut messages = vec![Message::system(SYSTEM_PROMPT), Message::user(query)];
    let mut steps = Vec::new();
    let mut final_text = None;

    while steps.len() < cfg.max_steps {
        let llm_request_digest = request_digest(&messages, &tools);
        let ChatResponse { reply, usage } = llm.chat(&messages, &tools)?;
        match reply {
            Reply::Final(text) => {
                steps.push(AgentStep {
                    llm_request_digest,
                    response_kind: ResponseKind::Final,
                    tool_name: None,
                    tool_arguments: None,
                    tool_result_digest: None,
                    tool_result_tokens: None,
                    final_text: Some(text.clone()),
                    usage,
                });
                messages.push(Message::assistant(text.clone()));
                final_text = Some(text);
                break;
            }
            Reply::ToolCall(call) => {
                let (result, tokens) = execute_tool(ctx, cfg, &call);
                steps.push(AgentStep {
                    llm_request_digest,
                    response_kind: ResponseKind::ToolCall,
                    tool_name: Some(call.name.clone()),
                    tool_arguments: Some(call.arguments.clone()),
                    tool_result_digest: Some(content_hash(&result)),
                    tool_result_tokens: tokens,
                    final_text: None,
                    usage,
                });
                let id = call.id.clone();
                messages.push(Message::assistant_tool_call(call));
                messages.push(Message::tool_result(id, result));
            }
        }
    }

    let truncated = final_text.is_none();
    let answer = match &final_text {
        Some(text) => text.as_str(),
        None => messages.last().map(|m| m.text.as_str()).unwrap_or_default(),
    };
    let endpoints = parse_final_endpoints(answer);
    let malformed_final_answer = !truncated && endpoints.is_empty();
    let hallucinated_endpoints = endpoints.iter().filter(|id| !ctx.doc.contains(id)).cloned().collect();
    let total_usage = steps.iter().map(|s: &AgentStep| s.usage).sum();

    let trace = AgentTrace {
        query: query.to_string(),
        strategy: cfg.strategy,
        k: cfg.k,
        max_steps: cfg.max_steps,
        llm_name: cfg.llm_name.clone(),
        prompt_version: PROMPT_VERSION.to_string(),
        tools: tools.iter().map(|t| t.name.clone()).collect(),
        steps,
        final_endpoints: endpoints.clone(),
        hallucinated_endpoints,
        truncated,
        malformed_final_answer,
        total_usage,
    };
    Ok(AgentOutcome { endpoints, trace })
}

/// Converts recorded traces into a replay script for the scripted provider.
pub fn traces_to_script(name: &str, traces: &[AgentTrace]) -> Script {
    let runs = traces
        .iter()
        .map(|t| ScriptRun {
            query: Some(t.query.clone()),
            contains: None,
            turns: t
                .steps
                .iter()
                .map(|s| ScriptTurn {
                    expect_tools: None,
                    expect_last_contains: None,
                    reply: match s.response_kind {
                        ResponseKind::Final => ScriptReply::Final(s.final_text.clone().unwrap_or_default()),
                        ResponseKind::ToolCall => ScriptReply::ToolCall {
                            name: s.tool_name.clone().unwrap_or_default(),
                            arguments: s.tool_arguments.clone().unwrap_or(Value::Null),
                        },
                    },
                    usage: s.usage,
                })
                .collect(),
        })
        .collect();
    Script { name: name.to_string(), runs }
}
