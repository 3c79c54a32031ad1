//! Retrieval over OpenAPI specifications: chunking strategies, embedding
//! providers, an exact vector index, a tool-using endpoint-discovery agent
//! and the evaluation harness that scores them against gold endpoints.

pub mod agent;
pub mod chunking;
pub mod config;
pub mod error;
pub mod eval;
pub mod index;
pub mod openapi;
pub mod providers;
pub mod retrieval;
pub mod tokenizer;

pub use error::{Error, Result};
