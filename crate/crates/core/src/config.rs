//! Run configuration: a TOML file overlaid on defaults, with command-line
//! flags applied last by the caller.
//!
//! ```toml
//! spec_paths = ["specs/tmdb_oas.json"]
//! k = 10
//! tokenizer = "reference"
//! cache_dir = ".specrag-cache"
//! parallelism = 4
//!
//! [strategy]
//! splitting = "endpoint"
//! refinement = "token-chunking"
//! chunk_size = 1024
//! overlap = 0
//!
//! [embedding]
//! provider = "openai"
//! model = "text-embedding-3-large"
//! dimension = 3072
//!
//! [llm]
//! provider = "openai"
//! model = "gpt-4o"
//! ```
//!
//! API keys are never read from the file; they come from
//! `SPECRAG_API_KEY_<PROVIDER>`.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::Deserialize;

use crate::chunking::{ChunkingStrategy, Refinement, Splitting};
use crate::error::{Error, Result};
use crate::providers::{
    CacheStats, CachedEmbedder, CachedLlm, EmbeddingProvider, HttpSettings, LocalHashEmbedder, RemoteEmbedder,
    RemoteLlm,
};

pub const LOCAL_PROVIDER: &str = "local";
pub const DEFAULT_LOCAL_DIMENSION: usize = 256;

const SECRET_KEYS: [&str; 8] = ["api_key", "apikey", "key", "token", "secret", "password", "authorization", "bearer"];

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrategyConfig {
    pub splitting: String,
    pub refinement: String,
    pub chunk_size: Option<usize>,
    pub overlap: Option<usize>,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            splitting: "endpoint".into(),
            refinement: "token-chunking".into(),
            chunk_size: Some(1024),
            overlap: Some(0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingConfig {
    /// `local` for the offline hashing embedder, anything else is an
    /// OpenAI-compatible endpoint.
    pub provider: String,
    pub model: String,
    pub dimension: usize,
    pub base_url: Option<String>,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub requests_per_minute: u32,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            provider: LOCAL_PROVIDER.into(),
            model: String::new(),
            dimension: DEFAULT_LOCAL_DIMENSION,
            base_url: None,
            timeout_secs: 60,
            max_retries: 4,
            requests_per_minute: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LlmConfig {
    pub provider: String,
    pub model: String,
    pub base_url: Option<String>,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub requests_per_minute: u32,
    pub temperature: f64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            provider: "openai".into(),
            model: String::new(),
            base_url: None,
            timeout_secs: 120,
            max_retries: 4,
            requests_per_minute: 60,
            temperature: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub spec_paths: Vec<PathBuf>,
    pub strategy: StrategyConfig,
    pub k: usize,
    pub tokenizer: String,
    /// `None` when neither the file nor a flag chose an embedder.
    pub embedding: Option<EmbeddingConfig>,
    pub llm: Option<LlmConfig>,
    pub cache_dir: PathBuf,
    pub parallelism: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            spec_paths: Vec::new(),
            strategy: StrategyConfig::default(),
            k: 10,
            tokenizer: "reference".into(),
            embedding: None,
            llm: None,
            cache_dir: PathBuf::from(".specrag-cache"),
            parallelism: std::thread::available_parallelism().map_or(4, |n| n.get()),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: toml::Value = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        reject_secrets(&raw, "")?;
        raw.try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))
    }

    /// Loads `path`, resolving relative spec paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            for p in &mut cfg.spec_paths {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.parallelism == 0 {
            return Err(Error::Config("parallelism must be at least 1".into()));
        }
        if self.embedding_config().dimension == 0 {
            return Err(Error::Config("embedding dimension must be at least 1".into()));
        }
        for p in &self.spec_paths {
            if !p.is_file() {
                return Err(Error::Config(format!("spec file {} does not exist", p.display())));
            }
        }
        self.chunking_strategy().map(|_| ())
    }

    pub fn chunking_strategy(&self) -> Result<ChunkingStrategy> {
        let s = &self.strategy;
        let splitting: Splitting = s.splitting.parse()?;
        let refinement: Refinement = s.refinement.parse()?;
        let (size, overlap) =
            if refinement == Refinement::TokenChunking { (s.chunk_size, s.overlap) } else { (None, None) };
        ChunkingStrategy::new(splitting, refinement, size, overlap, self.embedding_model_name())
    }

    /// Provider name as recorded in indexes, e.g. `local-hash-256` or
    /// `openai:text-embedding-3-large`.
    pub fn embedding_model_name(&self) -> String {
        let e = self.embedding_config();
        if e.provider == LOCAL_PROVIDER {
            local_model_name(e.dimension)
        } else {
            format!("{}:{}", e.provider, e.model)
        }
    }

    pub fn embedding_config(&self) -> EmbeddingConfig {
        self.embedding.clone().unwrap_or_default()
    }

    pub fn embedder(&self) -> Result<Embedder> {
        let e = self.embedding_config();
        if e.provider == LOCAL_PROVIDER {
            return Ok(Embedder::Local(LocalHashEmbedder::new(e.dimension)));
        }
        if e.model.is_empty() {
            return Err(Error::Config("embedding.model is required for remote providers".into()));
        }
        let mut settings = http_settings(&e.provider, e.base_url.as_deref(), &e.model)?;
        settings.timeout = Duration::from_secs(e.timeout_secs);
        settings.max_retries = e.max_retries;
        settings.requests_per_minute = e.requests_per_minute;
        let remote = RemoteEmbedder::new(settings, e.dimension);
        Ok(Embedder::Remote(Arc::new(CachedEmbedder::new(remote, self.cache_dir.join("embeddings")))))
    }

    pub fn llm(&self) -> Result<Option<Arc<CachedLlm<RemoteLlm>>>> {
        let Some(l) = &self.llm else { return Ok(None) };
        if l.model.is_empty() {
            return Err(Error::Config("llm.model is required".into()));
        }
        let mut settings = http_settings(&l.provider, l.base_url.as_deref(), &l.model)?;
        settings.timeout = Duration::from_secs(l.timeout_secs);
        settings.max_retries = l.max_retries;
        settings.requests_per_minute = l.requests_per_minute;
        settings.temperature = l.temperature;
        Ok(Some(Arc::new(CachedLlm::new(RemoteLlm::new(settings), self.cache_dir.join("chat")))))
    }
}

/// The embedder a configuration resolves to.
pub enum Embedder {
    Local(LocalHashEmbedder),
    Remote(Arc<CachedEmbedder<RemoteEmbedder>>),
}

impl Embedder {
    pub fn provider(&self) -> &dyn EmbeddingProvider {
        match self {
            Embedder::Local(e) => e,
            Embedder::Remote(e) => e.as_ref(),
        }
    }

    pub fn cache_stats(&self) -> Option<CacheStats> {
        match self {
            Embedder::Local(_) => None,
            Embedder::Remote(e) => Some(e.stats()),
        }
    }
}

pub fn local_model_name(dimension: usize) -> String {
    format!("local-hash-{dimension}")
}

/// The dimension encoded in a local embedder name, if it is one.
pub fn parse_local_model_name(name: &str) -> Option<usize> {
    name.strip_prefix("local-hash-")?.parse().ok()
}

fn default_base_url(provider: &str) -> Option<&'static str> {
    match provider {
        "openai" => Some("https://api.openai.com/v1"),
        _ => None,
    }
}

fn http_settings(provider: &str, base_url: Option<&str>, model: &str) -> Result<HttpSettings> {
    let base = base_url
        .or_else(|| default_base_url(provider))
        .ok_or_else(|| Error::Config(format!("base_url is required for provider `{provider}`")))?;
    let settings = HttpSettings::new(provider, base, model).with_key_from_env();
    if settings.api_key.is_none() {
        return Err(Error::Config(format!("no API key for `{provider}`: set {}", HttpSettings::api_key_var(provider))));
    }
    Ok(settings)
}

fn reject_secrets(v: &toml::Value, at: &str) -> Result<()> {
    if let toml::Value::Table(t) = v {
        for (k, child) in t {
            let path = if at.is_empty() { k.clone() } else { format!("{at}.{k}") };
            let norm = k.to_ascii_lowercase().replace('-', "_");
            if SECRET_KEYS.iter().any(|s| norm == *s || norm.ends_with(&format!("_{s}"))) {
                return Err(Error::Config(format!(
                    "`{path}` looks like a credential; API keys are only read from SPECRAG_API_KEY_<PROVIDER>"
                )));
            }
            reject_secrets(child, &path)?;
        }
    }
    Ok(())
}
