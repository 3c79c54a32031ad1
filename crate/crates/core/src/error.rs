use std::io;

use crate::openapi::EndpointId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed document `{source_name}`: {reason}")]
    MalformedDocument { source_name: String, reason: String },

    #[error("`{source_name}` is not an OpenAPI document: {reason}")]
    NotOpenApi { source_name: String, reason: String },

    #[error("endpoint {id} not found{}", nearest.as_ref().map(|p| format!(" (closest path: {p})")).unwrap_or_default())]
    EndpointNotFound { id: EndpointId, nearest: Option<String> },

    #[error("invalid endpoint identifier `{0}`")]
    InvalidEndpointId(String),

    #[error("invalid chunk parameters: chunk size {size}, overlap {overlap} (need size > 0 and overlap < size)")]
    InvalidChunkParams { size: usize, overlap: usize },

    #[error("invalid strategy combination: {0}")]
    StrategyCombinationInvalid(String),

    #[error("provider `{provider}` unavailable: {reason}")]
    ProviderUnavailable { provider: String, reason: String },

    #[error("input too long for provider `{provider}`: {reason}")]
    InputTooLong { provider: String, reason: String },

    #[error("provider `{0}` returned an empty completion")]
    EmptyCompletion(String),

    #[error("scripted provider diverged: {0}")]
    ScriptDivergence(String),

    #[error("provider protocol error: {0}")]
    Protocol(String),

    #[error("index was built with provider `{index}` but queried with `{query}`")]
    ProviderMismatch { index: String, query: String },

    #[error("cannot build an index from an empty corpus")]
    EmptyCorpus,

    #[error("duplicate chunk id `{0}`")]
    DuplicateChunkId(String),

    #[error("index format version {found} is not supported (expected {expected})")]
    FormatVersionMismatch { found: u32, expected: u32 },

    #[error("corrupt index: {0}")]
    CorruptIndex(String),

    #[error("malformed benchmark: {0}")]
    MalformedBenchmark(String),

    #[error("gold endpoint set is empty")]
    EmptyGold,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("tokenizer error: {0}")]
    Tokenizer(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name, used by the CLI and the C ABI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::MalformedDocument { .. } => "MALFORMED_DOCUMENT",
            Error::NotOpenApi { .. } => "NOT_OPENAPI",
            Error::EndpointNotFound { .. } => "ENDPOINT_NOT_FOUND",
            Error::InvalidEndpointId(_) => "INVALID_ENDPOINT_ID",
            Error::InvalidChunkParams { .. } => "INVALID_CHUNK_PARAMS",
            Error::StrategyCombinationInvalid(_) => "STRATEGY_COMBINATION_INVALID",
            Error::ProviderUnavailable { .. } => "PROVIDER_UNAVAILABLE",
            Error::InputTooLong { .. } => "INPUT_TOO_LONG",
            Error::EmptyCompletion(_) => "EMPTY_COMPLETION",
            Error::ScriptDivergence(_) => "SCRIPT_DIVERGENCE",
            Error::Protocol(_) => "PROTOCOL_ERROR",
            Error::ProviderMismatch { .. } => "PROVIDER_MISMATCH",
            Error::EmptyCorpus => "EMPTY_CORPUS",
            Error::DuplicateChunkId(_) => "DUPLICATE_CHUNK_ID",
            Error::FormatVersionMismatch { .. } => "FORMAT_VERSION_MISMATCH",
            Error::CorruptIndex(_) => "CORRUPT_INDEX",
            Error::MalformedBenchmark(_) => "MALFORMED_BENCHMARK",
            Error::EmptyGold => "EMPTY_GOLD",
            Error::InvalidInput(_) => "INVALID_INPUT",
            Error::Config(_) => "CONFIG_ERROR",
            Error::Tokenizer(_) => "TOKENIZER_ERROR",
            Error::Io(_) => "IO_ERROR",
            Error::Json(_) => "JSON_ERROR",
        }
    }

    /// Process exit status for this error. The set is closed:
    ///
    /// | code | meaning |
    /// |------|---------|
    /// | 1 | internal / IO |
    /// | 2 | configuration or usage |
    /// | 3 | input document |
    /// | 4 | chunking strategy or parameters |
    /// | 5 | provider unavailable or rejected input |
    /// | 6 | provider mismatch |
    /// | 7 | index file |
    /// | 8 | benchmark |
    /// | 9 | agent / provider protocol |
    /// | 10 | endpoint lookup |
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) | Error::Json(_) => 1,
            Error::Config(_) | Error::InvalidInput(_) | Error::Tokenizer(_) => 2,
            Error::MalformedDocument { .. } | Error::NotOpenApi { .. } => 3,
            Error::InvalidChunkParams { .. } | Error::StrategyCombinationInvalid(_) => 4,
            Error::ProviderUnavailable { .. } | Error::InputTooLong { .. } | Error::EmptyCompletion(_) => 5,
            Error::ProviderMismatch { .. } => 6,
            Error::EmptyCorpus
            | Error::DuplicateChunkId(_)
            | Error::FormatVersionMismatch { .. }
            | Error::CorruptIndex(_) => 7,
            Error::MalformedBenchmark(_) | Error::EmptyGold => 8,
            Error::ScriptDivergence(_) | Error::Protocol(_) => 9,
            Error::EndpointNotFound { .. } | Error::InvalidEndpointId(_) => 10,
        }
    }
}
