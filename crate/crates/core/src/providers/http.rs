//! OpenAI-compatible HTTP clients with retry and a per-provider token bucket.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde_json::{json, Map, Value};

use super::{
    l2_normalize, validate_chat_request, validate_texts, ChatResponse, EmbeddingProvider, LlmProvider, Message,
    ProviderKind, Reply, Role, TokenUsage, ToolCall, ToolSchema,
};
use crate::error::{Error, Result};

const EMBED_BATCH: usize = 64;

#[derive(Debug, Clone)]
pub struct HttpSettings {
    /// Provider label; also names the cache directory and the API key variable.
    pub provider: String,
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub requests_per_minute: u32,
    pub temperature: f64,
}

impl HttpSettings {
    pub fn new(provider: &str, base_url: &str, model: &str) -> Self {
        HttpSettings {
            provider: provider.to_string(),
            base_url: base_url.trim_end_matches('/').to_string(),
            model: model.to_string(),
            api_key: None,
            timeout: Duration::from_secs(60),
            max_retries: 4,
            initial_backoff: Duration::from_millis(500),
            requests_per_minute: 60,
            temperature: 0.0,
        }
    }

    /// Name of the environment variable holding this provider's API key.
    pub fn api_key_var(provider: &str) -> String {
        let sanitized: String =
            provider.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' }).collect();
        format!("SPECRAG_API_KEY_{sanitized}")
    }

    pub fn with_key_from_env(mut self) -> Self {
        self.api_key = std::env::var(Self::api_key_var(&self.provider)).ok();
        self
    }
}

struct TokenBucket {
    capacity: f64,
    per_sec: f64,
    state: Mutex<(f64, Instant)>,
}

impl TokenBucket {
    fn new(requests_per_minute: u32) -> Self {
        let capacity = f64::from(requests_per_minute.max(1));
        TokenBucket { capacity, per_sec: capacity / 60.0, state: Mutex::new((capacity, Instant::now())) }
    }

    fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().unwrap();
                let now = Instant::now();
                let (tokens, last) = *state;
                let tokens = (tokens + now.duration_since(last).as_secs_f64() * self.per_sec).min(self.capacity);
                if tokens >= 1.0 {
                    *state = (tokens - 1.0, now);
                    return;
                }
                *state = (tokens, now);
                Duration::from_secs_f64((1.0 - tokens) / self.per_sec)
            };
            std::thread::sleep(wait);
        }
    }
}

enum Failure {
    Transient(String),
    Fatal(Error),
}

struct Client {
    settings: HttpSettings,
    agent: ureq::Agent,
    bucket: TokenBucket,
}

impl Client {
    fn new(settings: HttpSettings) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(settings.timeout).build();
        let bucket = TokenBucket::new(settings.requests_per_minute);
        Client { settings, agent, bucket }
    }

    fn unavailable(&self, reason: String) -> Error {
        Error::ProviderUnavailable { provider: self.settings.provider.clone(), reason }
    }

    /// POSTs `body`, retrying transport errors, 429 and 5xx with exponential backoff.
    fn post(&self, route: &str, body: &Value) -> Result<Value> {
        let url = format!("{}/{}", self.settings.base_url, route);
        let mut backoff = self.settings.initial_backoff;
        let mut attempt = 0;
        loop {
            self.bucket.acquire();
            match self.post_once(&url, body) {
                Ok(v) => return Ok(v),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Transient(reason)) => {
                    if attempt >= self.settings.max_retries {
                        return Err(self.unavailable(format!("{reason} (after {} attempts)", attempt + 1)));
                    }
                    tracing::warn!(provider = %self.settings.provider, %reason, attempt, "retrying");
                    std::thread::sleep(backoff);
                    backoff *= 2;
                    attempt += 1;
                }
            }
        }
    }

    fn post_once(&self, url: &str, body: &Value) -> std::result::Result<Value, Failure> {
        let mut req = self.agent.post(url).set("Content-Type", "application/json");
        if let Some(key) = &self.settings.api_key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        match req.send_json(body.clone()) {
            Ok(resp) => resp.into_json::<Value>().map_err(|e| Failure::Transient(format!("unreadable response: {e}"))),
            Err(ureq::Error::Status(code, resp)) => {
                let text = resp.into_string().unwrap_or_default();
                if code == 429 || code >= 500 {
                    Err(Failure::Transient(format!("HTTP {code}")))
                } else if code == 400
                    && (text.contains("context length") || text.contains("too long") || text.contains("maximum"))
                {
                    Err(Failure::Fatal(Error::InputTooLong {
                        provider: self.settings.provider.clone(),
                        reason: first_line(&text),
                    }))
                } else {
                    Err(Failure::Fatal(self.unavailable(format!("HTTP {code}: {}", first_line(&text)))))
                }
            }
            Err(ureq::Error::Transport(t)) => Err(Failure::Transient(t.to_string())),
        }
    }
}

fn first_line(s: &str) -> String {
    s.lines().next().unwrap_or("").chars().take(200).collect()
}

/// Embedding client for `POST {base_url}/embeddings`.
pub struct RemoteEmbedder {
    client: Client,
    name: String,
    dimension: usize,
}

impl RemoteEmbedder {
    pub fn new(settings: HttpSettings, dimension: usize) -> Self {
        let name = format!("{}:{}", settings.provider, settings.model);
        RemoteEmbedder { client: Client::new(settings), name, dimension }
    }
}

impl EmbeddingProvider for RemoteEmbedder {
    fn name(&self) -> &str {
        &self.name
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn kind(&self) -> ProviderKind {
        ProviderKind::RemoteHttp
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>> {
        validate_texts(&self.name, texts)?;
        let mut out = Vec::with_capacity(texts.len());
        for batch in texts.chunks(EMBED_BATCH) {
            let mut body = json!({"model": self.client.settings.model, "input": batch});
            // Only the text-embedding-3 family accepts a requested size.
            if self.client.settings.model.starts_with("text-embedding-3") {
                body["dimensions"] = json!(self.dimension);
            }
            let resp = self.client.post("embeddings", &body)?;
            let data = resp
                .get("data")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Protocol("embedding response has no `data` array".into()))?;
            if data.len() != batch.len() {
                return Err(Error::Protocol(format!("asked for {} embeddings, got {}", batch.len(), data.len())));
            }
            let mut rows: Vec<(u64, Vec<f64>)> = Vec::with_capacity(data.len());
            for (i, item) in data.iter().enumerate() {
                let index = item.get("index").and_then(Value::as_u64).unwrap_or(i as u64);
                let vector: Vec<f64> = item
                    .get("embedding")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Protocol("embedding item without vector".into()))?
                    .iter()
                    .map(|x| x.as_f64().ok_or_else(|| Error::Protocol("non-numeric embedding".into())))
                    .collect::<Result<_>>()?;
                if vector.len() != self.dimension {
                    return Err(Error::Protocol(format!(
                        "expected dimension {}, got {}",
                        self.dimension,
                        vector.len()
                    )));
                }
                rows.push((index, vector));
            }
            rows.sort_by_key(|(i, _)| *i);
            for (_, v) in rows {
                out.push(l2_normalize(&v).ok_or_else(|| Error::Protocol("zero embedding vector".into()))?);
            }
        }
        Ok(out)
    }
}

/// Chat client for `POST {base_url}/chat/completions` with function tools.
pub struct RemoteLlm {
    client: Client,
    name: String,
}

impl RemoteLlm {
    pub fn new(settings: HttpSettings) -> Self {
        let name = format!("{}:{}", settings.provider, settings.model);
        RemoteLlm { client: Client::new(settings), name }
    }

    pub fn request_body(&self, messages: &[Message], tools: &[ToolSchema]) -> Value {
        let msgs: Vec<Value> = messages.iter().map(message_json).collect();
        let mut body = json!({
            "model": self.client.settings.model,
            "temperature": self.client.settings.temperature,
            "messages": msgs,
        });
        if !tools.is_empty() {
            body["tools"] = Value::Array(tools.iter().map(tool_json).collect());
            body["parallel_tool_calls"] = Value::Bool(false);
        }
        body
    }
}

fn message_json(m: &Message) -> Value {
    match (m.role, &m.tool_call) {
        (Role::Assistant, Some(call)) => json!({
            "role": "assistant",
            "content": Value::Null,
            "tool_calls": [{
                "id": call.id,
                "type": "function",
                "function": {"name": call.name, "arguments": call.arguments.to_string()},
            }],
        }),
        (Role::Tool, _) => json!({
            "role": "tool",
            "tool_call_id": m.tool_call_id.clone().unwrap_or_default(),
            "content": m.text,
        }),
        (role, _) => json!({"role": role, "content": m.text}),
    }
}

fn tool_json(t: &ToolSchema) -> Value {
    let mut props = Map::new();
    for p in &t.parameters {
        props.insert(p.name.clone(), json!({"type": "string", "description": p.description}));
    }
    let required: Vec<&str> = t.parameters.iter().map(|p| p.name.as_str()).collect();
    json!({
        "type": "function",
        "function": {
            "name": t.name,
            "description": t.description,
            "parameters": {"type": "object", "properties": props, "required": required},
        },
    })
}

pub(crate) fn parse_chat_response(resp: &Value, tools: &[ToolSchema]) -> Result<ChatResponse> {
    let message = resp
        .pointer("/choices/0/message")
        .ok_or_else(|| Error::Protocol("response has no choices[0].message".into()))?;
    let usage = resp.get("usage");
    let count = |k: &str| usage.and_then(|u| u.get(k)).and_then(Value::as_u64).unwrap_or(0);
    let usage = TokenUsage::new(count("prompt_tokens"), count("completion_tokens"));

    let reply = match message.pointer("/tool_calls/0") {
        Some(call) => {
            let name = call
                .pointer("/function/name")
                .and_then(Value::as_str)
                .ok_or_else(|| Error::Protocol("tool call without a function name".into()))?;
            if !tools.iter().any(|t| t.name == name) {
                return Err(Error::Protocol(format!("model called unknown tool `{name}`")));
            }
            let raw_args = call.pointer("/function/arguments").and_then(Value::as_str).unwrap_or("{}");
            let arguments: Value = serde_json::from_str(raw_args)
                .map_err(|e| Error::Protocol(format!("tool arguments are not JSON: {e}")))?;
            Reply::ToolCall(ToolCall {
                id: call.get("id").and_then(Value::as_str).unwrap_or("call_0").to_string(),
                name: name.to_string(),
                arguments,
            })
        }
        None => Reply::Final(message.get("content").and_then(Value::as_str).unwrap_or("").to_string()),
    };
    Ok(ChatResponse { reply, usage })
}

impl LlmProvider for RemoteLlm {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> ProviderKind {
        ProviderKind::RemoteHttp
    }

    fn chat(&self, messages: &[Message], tools: &[ToolSchema]) -> Result<ChatResponse> {
        validate_chat_request(messages, tools)?;
        let resp = self.client.post("chat/completions", &self.request_body(messages, tools))?;
        parse_chat_response(&resp, tools)
    }
}
