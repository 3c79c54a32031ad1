//! Chunking strategies: a splitting method that cuts a document into
//! intermediate chunks, followed by a refinement that turns those into final
//! chunks.
//!
//! | splitting | refinements |
//! |-----------|-------------|
//! | no split | token chunking |
//! | endpoint split | token chunking, remove examples, relevant fields, LLM summary, LLM query |
//! | JSON split | token chunking |
//!
//! Each chunk carries two texts: `content`, which is what retrieval returns,
//! and `embedding_input`, which is what gets embedded. They differ only for
//! the LLM refinements.

mod cache;
mod json;
pub mod prompts;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::openapi::{serialize_endpoint, EndpointId, SpecDocument};
use crate::providers::{LlmProvider, Message, Reply};
use crate::tokenizer::{split_by_tokens, Tokenizer};

pub use cache::RefinementCache;
pub use json::{count_leaves, json_leaf_lines};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    TokenBased,
    LlmBased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    NoSplit,
    EndpointSplit,
    JsonSplit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Refinement {
    TokenChunking,
    RemoveExamples,
    RelevantFields,
    LlmSummary,
    LlmQuery,
}

impl Splitting {
    pub const ALL: [Splitting; 3] = [Splitting::NoSplit, Splitting::EndpointSplit, Splitting::JsonSplit];

    pub fn label(self) -> &'static str {
        match self {
            Splitting::NoSplit => "none",
            Splitting::EndpointSplit => "endpoint",
            Splitting::JsonSplit => "json",
        }
    }
}

impl Refinement {
    pub const ALL: [Refinement; 5] = [
        Refinement::TokenChunking,
        Refinement::RemoveExamples,
        Refinement::RelevantFields,
        Refinement::LlmSummary,
        Refinement::LlmQuery,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Refinement::TokenChunking => "token-chunking",
            Refinement::RemoveExamples => "remove-examples",
            Refinement::RelevantFields => "relevant-fields",
            Refinement::LlmSummary => "summary",
            Refinement::LlmQuery => "query",
        }
    }

    pub fn category(self) -> Category {
        match self {
            Refinement::LlmSummary | Refinement::LlmQuery => Category::LlmBased,
            _ => Category::TokenBased,
        }
    }
}

impl fmt::Display for Splitting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl fmt::Display for Refinement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Splitting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "none" | "no-split" | "no" => Ok(Splitting::NoSplit),
            "endpoint" | "endpoint-split" => Ok(Splitting::EndpointSplit),
            "json" | "json-split" => Ok(Splitting::JsonSplit),
            _ => Err(Error::Config(format!("unknown splitting `{s}` (none, endpoint, json)"))),
        }
    }
}

impl FromStr for Refinement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "token-chunking" | "token" | "tc" => Ok(Refinement::TokenChunking),
            "remove-examples" | "re" => Ok(Refinement::RemoveExamples),
            "relevant-fields" | "rf" => Ok(Refinement::RelevantFields),
            "summary" | "llm-summary" => Ok(Refinement::LlmSummary),
            "query" | "llm-query" => Ok(Refinement::LlmQuery),
            _ => Err(Error::Config(format!(
                "unknown refinement `{s}` (token-chunking, remove-examples, relevant-fields, summary, query)"
            ))),
        }
    }
}

/// A validated (splitting, refinement) pair with its meta-parameters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChunkingStrategy {
    pub category: Category,
    pub splitting: Splitting,
    pub refinement: Refinement,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chunk_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<usize>,
    pub embedding_model: String,
}

impl ChunkingStrategy {
    pub fn new(
        splitting: Splitting,
        refinement: Refinement,
        chunk_size: Option<usize>,
        overlap: Option<usize>,
        embedding_model: impl Into<String>,
    ) -> Result<Self> {
        let strategy = ChunkingStrategy {
            category: refinement.category(),
            splitting,
            refinement,
            chunk_size,
            overlap,
            embedding_model: embedding_model.into(),
        };
        strategy.validate()?;
        Ok(strategy)
    }

    pub fn token_chunking(splitting: Splitting, size: usize, overlap: usize, model: impl Into<String>) -> Result<Self> {
        Self::new(splitting, Refinement::TokenChunking, Some(size), Some(overlap), model)
    }

    pub fn endpoint(refinement: Refinement, model: impl Into<String>) -> Result<Self> {
        Self::new(Splitting::EndpointSplit, refinement, None, None, model)
    }

    pub fn validate(&self) -> Result<()> {
        use Refinement::*;
        if self.splitting != Splitting::EndpointSplit && self.refinement != TokenChunking {
            return Err(Error::StrategyCombinationInvalid(format!(
                "{} splitting can only be refined with token chunking, not {}",
                self.splitting, self.refinement
            )));
        }
        if self.category != self.refinement.category() {
            return Err(Error::StrategyCombinationInvalid(format!(
                "{} is not a {:?} refinement",
                self.refinement, self.category
            )));
        }
        match (self.refinement, self.chunk_size, self.overlap) {
            (TokenChunking, Some(size), Some(overlap)) => {
                if size == 0 || overlap >= size {
                    return Err(Error::InvalidChunkParams { size, overlap });
                }
            }
            (TokenChunking, _, _) => {
                return Err(Error::StrategyCombinationInvalid(
                    "token chunking needs both chunk size and overlap".into(),
                ))
            }
            (_, None, None) => {}
            (other, _, _) => {
                return Err(Error::StrategyCombinationInvalid(format!(
                    "chunk size and overlap only apply to token chunking, not {other}"
                )))
            }
        }
        Ok(())
    }

    /// Stable identifier of the chunk-producing part of the strategy.
    pub fn fingerprint(&self) -> String {
        let mut fp = format!("{}+{}", self.splitting, self.refinement);
        if let (Some(s), Some(l)) = (self.chunk_size, self.overlap) {
            fp.push_str(&format!(".s{s}.l{l}"));
        }
        match self.refinement {
            Refinement::LlmSummary => fp.push_str(&format!(".{}", prompts::SUMMARY_VERSION)),
            Refinement::LlmQuery => fp.push_str(&format!(".{}", prompts::QUERY_VERSION)),
            _ => {}
        }
        fp
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndpointScope {
    Endpoint(EndpointId),
    AllEndpoints,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntermediateChunk {
    pub text: String,
    pub scope: EndpointScope,
}

impl IntermediateChunk {
    fn endpoint_id(&self) -> Result<&EndpointId> {
        match &self.scope {
            EndpointScope::Endpoint(id) => Ok(id),
            EndpointScope::AllEndpoints => Err(Error::StrategyCombinationInvalid(
                "this refinement needs an endpoint-split intermediate chunk".into(),
            )),
        }
    }
}

/// The text parts of a chunk before it receives its id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChunkBody {
    pub content: String,
    pub embedding_input: String,
    pub endpoint_refs: Vec<EndpointId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub content: String,
    pub embedding_input: String,
    pub endpoint_refs: Vec<EndpointId>,
    pub strategy: ChunkingStrategy,
}

pub fn split_no_split(doc: &SpecDocument) -> Vec<IntermediateChunk> {
    vec![IntermediateChunk { text: doc.to_compact_json(), scope: EndpointScope::AllEndpoints }]
}

pub fn split_endpoints(doc: &SpecDocument) -> Vec<IntermediateChunk> {
    doc.endpoints()
        .iter()
        .map(|ep| IntermediateChunk { text: serialize_endpoint(ep), scope: EndpointScope::Endpoint(ep.id.clone()) })
        .collect()
}

/// One line per primitive leaf (`key path… value`), newline-joined into a
/// single intermediate chunk.
pub fn split_json(doc: &SpecDocument) -> Vec<IntermediateChunk> {
    vec![IntermediateChunk { text: json_leaf_lines(&doc.root).join("\n"), scope: EndpointScope::AllEndpoints }]
}

/// Endpoints whose path occurs in `content`, in document order. Matching is
/// by path only, so every verb of a matched path is included.
pub fn attach_endpoint_metadata(content: &str, doc: &SpecDocument) -> Vec<EndpointId> {
    doc.endpoint_ids().filter(|id| content.contains(id.path.as_str())).cloned().collect()
}

pub fn refine_token_chunking(
    ic: &IntermediateChunk,
    doc: &SpecDocument,
    tok: &dyn Tokenizer,
    size: usize,
    overlap: usize,
) -> Result<Vec<ChunkBody>> {
    let pieces = split_by_tokens(tok, &ic.text, size, overlap)?;
    Ok(pieces
        .into_iter()
        .filter(|p| !p.is_empty())
        .map(|piece| {
            let endpoint_refs = match &ic.scope {
                EndpointScope::Endpoint(id) => vec![id.clone()],
                EndpointScope::AllEndpoints => attach_endpoint_metadata(&piece, doc),
            };
            ChunkBody { embedding_input: piece.clone(), content: piece, endpoint_refs }
        })
        .collect())
}

/// Drops the top-level `requestBody` of the operation and every `examples`
/// or `example` key at any depth.
pub fn refine_remove_examples(ic: &IntermediateChunk) -> Result<ChunkBody> {
    let id = ic.endpoint_id()?.clone();
    let mut value: Value = serde_json::from_str(&ic.text)?;
    if let Some(op) = value.get_mut("operation").and_then(Value::as_object_mut) {
        op.shift_remove("requestBody");
    }
    strip_examples(&mut value);
    let content = value.to_string();
    Ok(ChunkBody { embedding_input: content.clone(), content, endpoint_refs: vec![id] })
}

fn strip_examples(value: &mut Value) {
    match value {
        Value::Object(map) => {
            map.shift_remove("examples");
            map.shift_remove("example");
            map.values_mut().for_each(strip_examples);
        }
        Value::Array(items) => items.iter_mut().for_each(strip_examples),
        _ => {}
    }
}

/// Service title and description, verb, path and endpoint description as
/// five labelled lines.
pub fn refine_relevant_fields(ic: &IntermediateChunk, doc: &SpecDocument) -> Result<ChunkBody> {
    let id = ic.endpoint_id()?;
    let ep = doc.get_endpoint(id)?;
    let content = format!(
        "service title: {}\nservice description: {}\nverb: {}\npath: {}\ndescription: {}",
        one_line(&doc.title),
        one_line(doc.description.as_deref().unwrap_or("")),
        id.verb,
        id.path,
        one_line(ep.best_description()),
    );
    Ok(ChunkBody { embedding_input: content.clone(), content, endpoint_refs: vec![id.clone()] })
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// An LLM plus the on-disk store of its refinement outputs.
pub struct LlmRefiner<'a> {
    pub llm: &'a dyn LlmProvider,
    pub cache: Option<&'a RefinementCache>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlmTask {
    Summary,
    Query,
}

impl LlmTask {
    pub fn template(self) -> (&'static str, &'static str) {
        match self {
            LlmTask::Summary => (prompts::SUMMARY_VERSION, prompts::SUMMARY_TEMPLATE),
            LlmTask::Query => (prompts::QUERY_VERSION, prompts::QUERY_TEMPLATE),
        }
    }
}

impl LlmRefiner<'_> {
    fn generate(&self, task: LlmTask, content: &str) -> Result<String> {
        let (version, template) = task.template();
        let key = RefinementCache::key(content);
        if let Some(cache) = self.cache {
            debug_assert_eq!(cache.template_version(), version);
            if let Some(text) = cache.get(&key) {
                return Ok(text);
            }
        }
        let messages = [Message::system(template), Message::user(content)];
        let resp = self.llm.chat(&messages, &[])?;
        let text = match resp.reply {
            Reply::Final(text) => text.trim().to_string(),
            Reply::ToolCall(call) => {
                return Err(Error::Protocol(format!("refinement answered with tool call `{}`", call.name)))
            }
        };
        if text.is_empty() {
            return Err(Error::EmptyCompletion(self.llm.name().to_string()));
        }
        if let Some(cache) = self.cache {
            cache.put(&key, &text)?;
        }
        Ok(text)
    }
}

fn refine_llm(ic: &IntermediateChunk, refiner: &LlmRefiner<'_>, task: LlmTask) -> Result<ChunkBody> {
    let id = ic.endpoint_id()?.clone();
    let generated = refiner.generate(task, &ic.text)?;
    Ok(ChunkBody { content: ic.text.clone(), embedding_input: generated, endpoint_refs: vec![id] })
}

/// Embedding input is an LLM summary; content stays the full endpoint.
pub fn refine_llm_summary(ic: &IntermediateChunk, refiner: &LlmRefiner<'_>) -> Result<ChunkBody> {
    refine_llm(ic, refiner, LlmTask::Summary)
}

/// Embedding input is an LLM-written question the endpoint would answer.
pub fn refine_llm_query(ic: &IntermediateChunk, refiner: &LlmRefiner<'_>) -> Result<ChunkBody> {
    refine_llm(ic, refiner, LlmTask::Query)
}

pub fn chunk_id(source_name: &str, strategy: &ChunkingStrategy, ordinal: usize) -> String {
    format!("{source_name}#{}#{ordinal:06}", strategy.fingerprint())
}

/// Applies `strategy` to `doc`. Chunk ids are `source#fingerprint#ordinal`
/// and follow document order.
pub fn chunk_spec(
    doc: &SpecDocument,
    strategy: &ChunkingStrategy,
    tok: &dyn Tokenizer,
    llm: Option<&LlmRefiner<'_>>,
) -> Result<Vec<Chunk>> {
    strategy.validate()?;
    let intermediate = match strategy.splitting {
        Splitting::NoSplit => split_no_split(doc),
        Splitting::EndpointSplit => split_endpoints(doc),
        Splitting::JsonSplit => split_json(doc),
    };

    let needs_llm =
        || llm.ok_or_else(|| Error::Config(format!("{} refinement needs an LLM provider", strategy.refinement)));
    let bodies: Vec<ChunkBody> = match strategy.refinement {
        Refinement::TokenChunking => {
            let (size, overlap) = (strategy.chunk_size.unwrap_or(0), strategy.overlap.unwrap_or(0));
            let mut out = Vec::new();
            for ic in &intermediate {
                out.extend(refine_token_chunking(ic, doc, tok, size, overlap)?);
            }
            out
        }
        Refinement::RemoveExamples => intermediate.iter().map(refine_remove_examples).collect::<Result<_>>()?,
        Refinement::RelevantFields => {
            intermediate.iter().map(|ic| refine_relevant_fields(ic, doc)).collect::<Result<_>>()?
        }
        Refinement::LlmSummary => {
            let r = needs_llm()?;
            intermediate.par_iter().map(|ic| refine_llm_summary(ic, r)).collect::<Result<_>>()?
        }
        Refinement::LlmQuery => {
            let r = needs_llm()?;
            intermediate.par_iter().map(|ic| refine_llm_query(ic, r)).collect::<Result<_>>()?
        }
    };

    Ok(bodies
        .into_iter()
        .enumerate()
        .map(|(i, b)| Chunk {
            chunk_id: chunk_id(&doc.source_name, strategy, i),
            content: b.content,
            embedding_input: b.embedding_input,
            endpoint_refs: b.endpoint_refs,
            strategy: strategy.clone(),
        })
        .collect())
}

/// All seven supported (splitting, refinement) pairs.
pub fn supported_combinations() -> Vec<(Splitting, Refinement)> {
    let mut out = Vec::new();
    for s in Splitting::ALL {
        for r in Refinement::ALL {
            if s == Splitting::EndpointSplit || r == Refinement::TokenChunking {
                out.push((s, r));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::openapi::parse_spec;
    use crate::providers::ScriptedLlm;
    use crate::tokenizer::ReferenceTokenizer;

    const DEMO: &str = r#"{
        "openapi": "3.0.0",
        "info": {"title": "Movies", "description": "Movie data"},
        "paths": {
            "/a": {
                "get": {"summary": "list a", "responses": {"200": {"description": "ok", "content": {"application/json": {"examples": {"x": {"value": 1}}}}}}},
                "post": {"description": "make a", "requestBody": {"content": {"application/json": {"example": {"n": 1}}}}, "responses": {"201": {"description": "made"}}}
            },
            "/a/b": {"get": {"responses": {"200": {"description": "ok", "schema": {"example": "x", "properties": {"requestBody": {"type": "string"}}}}}}}
        }
    }"#;

    fn demo() -> SpecDocument {
        parse_spec(DEMO.as_bytes(), "demo").unwrap()
    }

    #[test]
    fn exactly_seven_combinations_validate() {
        let mut valid = 0;
        for s in Splitting::ALL {
            for r in Refinement::ALL {
                let (size, overlap) = if r == Refinement::TokenChunking { (Some(8), Some(1)) } else { (None, None) };
                match ChunkingStrategy::new(s, r, size, overlap, "m") {
                    Ok(_) => valid += 1,
                    Err(e) => assert!(matches!(e, Error::StrategyCombinationInvalid(_)), "{s:?}/{r:?}: {e}"),
                }
            }
        }
        assert_eq!(valid, 7);
        assert_eq!(supported_combinations().len(), 7);
    }

    #[test]
    fn token_params_are_validated() {
        assert!(matches!(
            ChunkingStrategy::token_chunking(Splitting::NoSplit, 4, 4, "m"),
            Err(Error::InvalidChunkParams { .. })
        ));
        assert!(matches!(
            ChunkingStrategy::token_chunking(Splitting::NoSplit, 0, 0, "m"),
            Err(Error::InvalidChunkParams { .. })
        ));
        assert!(
            ChunkingStrategy::new(Splitting::EndpointSplit, Refinement::RelevantFields, Some(5), Some(0), "m").is_err()
        );
        assert!(ChunkingStrategy::new(Splitting::EndpointSplit, Refinement::TokenChunking, None, None, "m").is_err());
    }

    #[test]
    fn no_split_and_endpoint_split_counts() {
        let doc = demo();
        assert_eq!(split_no_split(&doc).len(), 1);
        let eps = split_endpoints(&doc);
        assert_eq!(eps.len(), 3);
        assert_eq!(eps[0].scope, EndpointScope::Endpoint("GET /a".parse().unwrap()));
        let empty = parse_spec(br#"{"info":{"title":"E"},"paths":{}}"#, "e").unwrap();
        assert!(split_endpoints(&empty).is_empty());
        assert_eq!(split_no_split(&empty).len(), 1);
    }

    #[test]
    fn metadata_uses_path_substrings() {
        let doc = demo();
        let refs = attach_endpoint_metadata("see /a/b for details", &doc);
        let names: Vec<String> = refs.iter().map(ToString::to_string).collect();
        assert_eq!(names, ["GET /a", "POST /a", "GET /a/b"]);
        assert!(attach_endpoint_metadata("nothing here", &doc).is_empty());
    }

    #[test]
    fn remove_examples_strips_everything_and_is_idempotent() {
        let doc = demo();
        for ic in split_endpoints(&doc) {
            let once = refine_remove_examples(&ic).unwrap();
            assert!(!once.content.contains("\"examples\""));
            assert!(!once.content.contains("\"example\""));
            let v: Value = serde_json::from_str(&once.content).unwrap();
            assert!(v["operation"].get("requestBody").is_none());
            let again =
                refine_remove_examples(&IntermediateChunk { text: once.content.clone(), scope: ic.scope.clone() })
                    .unwrap();
            assert_eq!(once.content, again.content);
        }
        // Nested properties named requestBody are schema data, not the operation body.
        let nested = refine_remove_examples(&split_endpoints(&doc)[2]).unwrap();
        assert!(nested.content.contains("requestBody"));
    }

    #[test]
    fn remove_examples_without_targets_is_identity() {
        let doc = parse_spec(br#"{"info":{"title":"T"},"paths":{"/x":{"get":{"summary":"s"}}}}"#, "t").unwrap();
        let ic = &split_endpoints(&doc)[0];
        assert_eq!(refine_remove_examples(ic).unwrap().content, ic.text);
    }

    #[test]
    fn relevant_fields_layout() {
        let doc = demo();
        let eps = split_endpoints(&doc);
        let rf = refine_relevant_fields(&eps[0], &doc).unwrap();
        assert_eq!(
            rf.content,
            "service title: Movies\nservice description: Movie data\nverb: GET\npath: /a\ndescription: list a"
        );
        let bare = refine_relevant_fields(&eps[2], &doc).unwrap();
        assert!(bare.content.ends_with("description: "));
        assert!(refine_relevant_fields(&split_no_split(&doc)[0], &doc).is_err());
    }

    #[test]
    fn llm_refinements_keep_content_and_use_cache() {
        let doc = demo();
        let dir = tempfile::tempdir().unwrap();
        let cache = RefinementCache::open(dir.path(), "scripted", LlmTask::Summary).unwrap();
        let llm = ScriptedLlm::constant(&[("", "Summary text")]);
        let refiner = LlmRefiner { llm: &llm, cache: Some(&cache) };
        let strategy = ChunkingStrategy::endpoint(Refinement::LlmSummary, "m").unwrap();
        let chunks = chunk_spec(&doc, &strategy, &ReferenceTokenizer, Some(&refiner)).unwrap();
        assert_eq!(chunks.len(), 3);
        assert_eq!(llm.calls(), 3);
        for (c, ic) in chunks.iter().zip(split_endpoints(&doc)) {
            assert_eq!(c.embedding_input, "Summary text");
            assert_eq!(c.content, ic.text);
        }
        let again = chunk_spec(&doc, &strategy, &ReferenceTokenizer, Some(&refiner)).unwrap();
        assert_eq!(llm.calls(), 3);
        assert_eq!(again, chunks);

        let reopened = RefinementCache::open(dir.path(), "scripted", LlmTask::Summary).unwrap();
        let llm2 = ScriptedLlm::constant(&[("", "different")]);
        let r2 = LlmRefiner { llm: &llm2, cache: Some(&reopened) };
        assert_eq!(chunk_spec(&doc, &strategy, &ReferenceTokenizer, Some(&r2)).unwrap(), chunks);
        assert_eq!(llm2.calls(), 0);
    }

    #[test]
    fn blank_completion_is_an_error() {
        let doc = demo();
        let llm = ScriptedLlm::constant(&[("", "   ")]);
        let refiner = LlmRefiner { llm: &llm, cache: None };
        let err = refine_llm_query(&split_endpoints(&doc)[0], &refiner).unwrap_err();
        assert!(matches!(err, Error::EmptyCompletion(_)));
    }

    #[test]
    fn llm_strategy_without_provider_fails() {
        let strategy = ChunkingStrategy::endpoint(Refinement::LlmQuery, "m").unwrap();
        assert!(chunk_spec(&demo(), &strategy, &ReferenceTokenizer, None).is_err());
    }

    #[test]
    fn token_chunking_ids_and_refs() {
        let doc = demo();
        let strategy = ChunkingStrategy::token_chunking(Splitting::NoSplit, 20, 2, "m").unwrap();
        let chunks = chunk_spec(&doc, &strategy, &ReferenceTokenizer, None).unwrap();
        assert!(chunks.len() > 1);
        for (i, c) in chunks.iter().enumerate() {
            assert_eq!(c.chunk_id, format!("demo#none+token-chunking.s20.l2#{i:06}"));
            assert_eq!(c.endpoint_refs, attach_endpoint_metadata(&c.content, &doc));
        }
        assert!(chunks.windows(2).all(|w| w[0].chunk_id < w[1].chunk_id));
    }

    #[test]
    fn endpoint_token_chunks_keep_their_single_ref() {
        let doc = demo();
        let strategy = ChunkingStrategy::token_chunking(Splitting::EndpointSplit, 10, 0, "m").unwrap();
        let chunks = chunk_spec(&doc, &strategy, &ReferenceTokenizer, None).unwrap();
        assert!(chunks.len() > 3);
        assert!(chunks.iter().all(|c| c.endpoint_refs.len() == 1));
    }

    #[test]
    fn fingerprints_distinguish_strategies() {
        let a = ChunkingStrategy::token_chunking(Splitting::EndpointSplit, 1024, 0, "m").unwrap();
        let b = ChunkingStrategy::token_chunking(Splitting::EndpointSplit, 1024, 50, "m").unwrap();
        let c = ChunkingStrategy::endpoint(Refinement::LlmSummary, "m").unwrap();
        assert_eq!(a.fingerprint(), "endpoint+token-chunking.s1024.l0");
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert!(c.fingerprint().starts_with("endpoint+summary."));
    }
}
