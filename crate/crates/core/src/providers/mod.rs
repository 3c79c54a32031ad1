//! Embedding and chat-model providers.
//!
//! Remote providers speak an OpenAI-compatible HTTP dialect and should be
//! wrapped in [`CachedEmbedder`] / [`CachedLlm`] so repeated runs are free and
//! reproducible. [`LocalHashEmbedder`] and [`ScriptedLlm`] need no network.

mod cache;
mod http;
mod local;
mod scripted;

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub use cache::{CacheStats, CachedEmbedder, CachedLlm, DiskCache};
pub use http::{HttpSettings, RemoteEmbedder, RemoteLlm};
pub use local::{fnv1a64, LocalHashEmbedder};
pub use scripted::{Script, ScriptReply, ScriptRun, ScriptTurn, ScriptedLlm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    RemoteHttp,
    LocalHash,
    Scripted,
}

pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;
    fn kind(&self) -> ProviderKind;

    /// One unit-norm vector per input text, in input order.
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>>;

    fn embed(&self, text: &str) -> Result<Vec<f32>> {
        Ok(self.embed_batch(&[text])?.remove(0))
    }
}

pub trait LlmProvider: Send + Sync {
    fn name(&self) -> &str;
    fn kind(&self) -> ProviderKind;
    fn chat(&self, messages: &[Message], tools: &[ToolSchema]) -> Result<ChatResponse>;
}

/// Token accounting for one model call. `total` is always `prompt + completion`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TokenUsage {
    pub prompt: u64,
    pub completion: u64,
    pub total: u64,
}

impl TokenUsage {
    pub fn new(prompt: u64, completion: u64) -> Self {
        TokenUsage { prompt, completion, total: prompt + completion }
    }
}

impl Add for TokenUsage {
    type Output = TokenUsage;

    fn add(self, rhs: TokenUsage) -> TokenUsage {
        TokenUsage::new(self.prompt + rhs.prompt, self.completion + rhs.completion)
    }
}

impl AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: TokenUsage) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for TokenUsage {
    fn sum<I: Iterator<Item = TokenUsage>>(iter: I) -> TokenUsage {
        iter.fold(TokenUsage::default(), Add::add)
    }
}

impl<'de> Deserialize<'de> for TokenUsage {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            prompt: u64,
            completion: u64,
            total: Option<u64>,
        }
        let raw = Raw::deserialize(d)?;
        let usage = TokenUsage::new(raw.prompt, raw.completion);
        match raw.total {
            Some(t) if t != usage.total => Err(serde::de::Error::custom(format!(
                "usage total {t} != prompt {} + completion {}",
                raw.prompt, raw.completion
            ))),
            _ => Ok(usage),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
    Tool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolCall {
    pub id: String,
    pub name: String,
    /// JSON object of string arguments.
    pub arguments: Value,
}

impl ToolCall {
    pub fn arg(&self, name: &str) -> Option<&str> {
        self.arguments.get(name).and_then(Value::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call: Option<ToolCall>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_call_id: Option<String>,
}

impl Message {
    pub fn system(text: impl Into<String>) -> Self {
        Message { role: Role::System, text: text.into(), tool_call: None, tool_call_id: None }
    }

    pub fn user(text: impl Into<String>) -> Self {
        Message { role: Role::User, text: text.into(), tool_call: None, tool_call_id: None }
    }

    pub fn assistant(text: impl Into<String>) -> Self {
        Message { role: Role::Assistant, text: text.into(), tool_call: None, tool_call_id: None }
    }

    pub fn assistant_tool_call(call: ToolCall) -> Self {
        Message { role: Role::Assistant, text: String::new(), tool_call: Some(call), tool_call_id: None }
    }

    pub fn tool_result(call_id: impl Into<String>, text: impl Into<String>) -> Self {
        Message { role: Role::Tool, text: text.into(), tool_call: None, tool_call_id: Some(call_id.into()) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamType {
    String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolParameter {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: ParamType,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolSchema {
    pub name: String,
    pub description: String,
    pub parameters: Vec<ToolParameter>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reply {
    ToolCall(ToolCall),
    Final(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub reply: Reply,
    pub usage: TokenUsage,
}

/// Hex SHA-256 of `text`.
pub fn content_hash(text: &str) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub(crate) fn validate_texts(provider: &str, texts: &[&str]) -> Result<()> {
    if texts.is_empty() {
        return Err(Error::InvalidInput(format!("{provider}: no texts to embed")));
    }
    if let Some(i) = texts.iter().position(|t| t.is_empty()) {
        return Err(Error::InvalidInput(format!("{provider}: text #{i} is empty")));
    }
    Ok(())
}

pub(crate) fn validate_chat_request(messages: &[Message], tools: &[ToolSchema]) -> Result<()> {
    if messages.is_empty() {
        return Err(Error::InvalidInput("chat needs at least one message".into()));
    }
    let mut names: Vec<&str> = tools.iter().map(|t| t.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidInput("tool names must be unique".into()));
    }
    Ok(())
}

pub(crate) fn l2_normalize(v: &[f64]) -> Option<Vec<f32>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() || norm == 0.0 {
        return None;
    }
    Some(v.iter().map(|x| (x / norm) as f32).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_total_is_sum() {
        let u = TokenUsage::new(10, 3) + TokenUsage::new(5, 2);
        assert_eq!(u, TokenUsage { prompt: 15, completion: 5, total: 20 });
        let s: TokenUsage = [TokenUsage::new(1, 1), TokenUsage::new(2, 0)].into_iter().sum();
        assert_eq!(s.total, 4);
    }

    #[test]
    fn usage_rejects_inconsistent_total() {
        let ok: TokenUsage = serde_json::from_str(r#"{"prompt":3,"completion":4}"#).unwrap();
        assert_eq!(ok.total, 7);
        assert!(serde_json::from_str::<TokenUsage>(r#"{"prompt":3,"completion":4,"total":8}"#).is_err());
    }

    #[test]
    fn duplicate_tool_names_rejected() {
        let t = ToolSchema { name: "a".into(), description: String::new(), parameters: vec![] };
        assert!(validate_chat_request(&[Message::user("q")], &[t.clone(), t]).is_err());
        assert!(validate_chat_request(&[], &[]).is_err());
    }
}
