//! Replays recorded chat turns, for offline tests and reproducible agent runs.
//!
//! A script holds one run per conversation. The run is selected by the first
//! user message: either an exact match on `query` or a substring match on
//! `contains`. Each call advances that run's cursor by one turn; any call the
//! script does not anticipate is a [`Error::ScriptDivergence`].

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    validate_chat_request, ChatResponse, LlmProvider, Message, ProviderKind, Reply, Role, TokenUsage, ToolCall,
    ToolSchema,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptReply {
    ToolCall { name: String, arguments: Value },
    Final(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptTurn {
    /// When set, the offered tool names must equal this list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_tools: Option<Vec<String>>,
    /// When set, the last message must contain this text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_last_contains: Option<String>,
    pub reply: ScriptReply,
    pub usage: TokenUsage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptRun {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contains: Option<String>,
    pub turns: Vec<ScriptTurn>,
}

impl ScriptRun {
    fn matches(&self, first_user: &str) -> bool {
        match (&self.query, &self.contains) {
            (Some(q), _) => q == first_user,
            (None, Some(c)) => first_user.contains(c.as_str()),
            (None, None) => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Script {
    #[serde(default = "default_name")]
    pub name: String,
    pub runs: Vec<ScriptRun>,
}

fn default_name() -> String {
    "scripted".into()
}

impl Script {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("script {}: {e}", path.as_ref().display())))
    }
}

pub struct ScriptedLlm {
    name: String,
    runs: Vec<ScriptRun>,
    cursors: Mutex<Vec<usize>>,
    calls: AtomicUsize,
    /// Restart exhausted runs instead of failing.
    cycle: bool,
}

impl ScriptedLlm {
    pub fn new(script: Script) -> Self {
        let cursors = Mutex::new(vec![0; script.runs.len()]);
        ScriptedLlm { name: script.name, runs: script.runs, cursors, calls: AtomicUsize::new(0), cycle: false }
    }

    /// A provider answering every conversation whose first user message
    /// contains `needle` with `text`, as often as asked.
    pub fn constant(entries: &[(&str, &str)]) -> Self {
        let runs = entries
            .iter()
            .map(|(needle, text)| ScriptRun {
                query: None,
                contains: Some(needle.to_string()),
                turns: vec![ScriptTurn {
                    expect_tools: None,
                    expect_last_contains: None,
                    reply: ScriptReply::Final(text.to_string()),
                    usage: TokenUsage::new(0, 0),
                }],
            })
            .collect();
        let mut llm = ScriptedLlm::new(Script { name: "scripted-constant".into(), runs });
        llm.cycle = true;
        llm
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }
}

impl LlmProvider for ScriptedLlm {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> ProviderKind {
        ProviderKind::Scripted
    }

    fn chat(&self, messages: &[Message], tools: &[ToolSchema]) -> Result<ChatResponse> {
        validate_chat_request(messages, tools)?;
        self.calls.fetch_add(1, Ordering::SeqCst);
        let first_user = messages
            .iter()
            .find(|m| m.role == Role::User)
            .map(|m| m.text.as_str())
            .ok_or_else(|| Error::ScriptDivergence("conversation has no user message".into()))?;
        let run_idx = self
            .runs
            .iter()
            .position(|r| r.matches(first_user))
            .ok_or_else(|| Error::ScriptDivergence(format!("no scripted run for `{}`", truncate(first_user))))?;

        let turn_idx = {
            let mut cursors = self.cursors.lock().unwrap();
            let at = cursors[run_idx];
            if at >= self.runs[run_idx].turns.len() {
                if self.cycle {
                    0
                } else {
                    return Err(Error::ScriptDivergence(format!(
                        "run {run_idx} has only {} turns but was called again",
                        self.runs[run_idx].turns.len()
                    )));
                }
            } else {
                cursors[run_idx] += 1;
                at
            }
        };
        let turn = &self.runs[run_idx].turns[turn_idx];

        let offered: Vec<&str> = tools.iter().map(|t| t.name.as_str()).collect();
        if let Some(expected) = &turn.expect_tools {
            if expected.iter().map(String::as_str).ne(offered.iter().copied()) {
                return Err(Error::ScriptDivergence(format!(
                    "run {run_idx} turn {turn_idx}: expected tools {expected:?}, offered {offered:?}"
                )));
            }
        }
        if let Some(needle) = &turn.expect_last_contains {
            let last = &messages.last().expect("validated non-empty").text;
            if !last.contains(needle.as_str()) {
                return Err(Error::ScriptDivergence(format!(
                    "run {run_idx} turn {turn_idx}: last message lacks `{needle}`"
                )));
            }
        }

        let reply = match &turn.reply {
            ScriptReply::Final(text) => Reply::Final(text.clone()),
            ScriptReply::ToolCall { name, arguments } => {
                if !offered.contains(&name.as_str()) {
                    return Err(Error::ScriptDivergence(format!(
                        "run {run_idx} turn {turn_idx}: tool `{name}` is not offered ({offered:?})"
                    )));
                }
                Reply::ToolCall(ToolCall {
                    id: format!("call_{run_idx}_{turn_idx}"),
                    name: name.clone(),
                    arguments: arguments.clone(),
                })
            }
        };
        Ok(ChatResponse { reply, usage: turn.usage })
    }
}

fn truncate(s: &str) -> String {
    let mut out: String = s.chars().take(60).collect();
    if out.len() < s.len() {
        out.push('…');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn tool(name: &str) -> ToolSchema {
        ToolSchema { name: name.into(), description: String::new(), parameters: vec![] }
    }

    fn script() -> Script {
        serde_json::from_value(json!({
            "runs": [{
                "query": "q1",
                "turns": [
                    {"expect_tools": ["search_endpoints"], "reply": {"tool_call": {"name": "search_endpoints", "arguments": {"task": "t"}}}, "usage": {"prompt": 10, "completion": 2}},
                    {"expect_last_contains": "GET", "reply": {"final": "GET /a"}, "usage": {"prompt": 20, "completion": 3}}
                ]
            }]
        }))
        .unwrap()
    }

    #[test]
    fn replays_in_order() {
        let llm = ScriptedLlm::new(script());
        let tools = [tool("search_endpoints")];
        let r1 = llm.chat(&[Message::user("q1")], &tools).unwrap();
        assert!(matches!(r1.reply, Reply::ToolCall(ref c) if c.name == "search_endpoints" && c.id == "call_0_0"));
        assert_eq!(r1.usage.total, 12);
        let r2 = llm.chat(&[Message::user("q1"), Message::tool_result("call_0_0", "GET /a ...")], &tools).unwrap();
        assert_eq!(r2.reply, Reply::Final("GET /a".into()));
        assert_eq!(r2.usage.total, r2.usage.prompt + r2.usage.completion);
        assert!(matches!(llm.chat(&[Message::user("q1")], &tools), Err(Error::ScriptDivergence(_))));
        assert_eq!(llm.calls(), 3);
    }

    #[test]
    fn divergence_is_loud() {
        let llm = ScriptedLlm::new(script());
        assert!(matches!(llm.chat(&[Message::user("other")], &[]), Err(Error::ScriptDivergence(_))));
        let llm = ScriptedLlm::new(script());
        assert!(matches!(llm.chat(&[Message::user("q1")], &[tool("x")]), Err(Error::ScriptDivergence(_))));
        let llm = ScriptedLlm::new(script());
        llm.chat(&[Message::user("q1")], &[tool("search_endpoints")]).unwrap();
        let err = llm.chat(&[Message::user("q1"), Message::tool_result("c", "nothing")], &[tool("search_endpoints")]);
        assert!(matches!(err, Err(Error::ScriptDivergence(_))));
    }

    #[test]
    fn tool_call_must_be_offered() {
        let mut s = script();
        s.runs[0].turns[0].expect_tools = None;
        let llm = ScriptedLlm::new(s);
        assert!(matches!(llm.chat(&[Message::user("q1")], &[tool("other")]), Err(Error::ScriptDivergence(_))));
    }

    #[test]
    fn constant_provider_repeats() {
        let llm = ScriptedLlm::constant(&[("/movie", "Lists movies")]);
        for _ in 0..3 {
            let r = llm.chat(&[Message::system("s"), Message::user("endpoint /movie/top")], &[]).unwrap();
            assert_eq!(r.reply, Reply::Final("Lists movies".into()));
        }
    }
}
