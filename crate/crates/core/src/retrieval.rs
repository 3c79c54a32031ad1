use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{query_index, ScoredChunk, VectorIndex};
use crate::openapi::EndpointId;
use crate::providers::EmbeddingProvider;
use crate::tokenizer::{count_tokens, Tokenizer};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub query: String,
    pub scored_chunks: Vec<ScoredChunk>,
    /// Union of the chunks' endpoint refs, first appearance by rank and then
    /// by ref order.
    pub endpoints: Vec<EndpointId>,
    /// Sum of the token counts of the returned chunk contents.
    pub retrieved_token_count: usize,
}

pub fn retrieve(
    idx: &VectorIndex,
    provider: &dyn EmbeddingProvider,
    tok: &dyn Tokenizer,
    query: &str,
    k: usize,
) -> Result<RetrievalResult> {
    if query.trim().is_empty() {
        return Err(Error::InvalidInput("query is empty".into()));
    }
    let scored_chunks = query_index(idx, query, provider, k)?;
    Ok(assemble(query, scored_chunks, tok))
}

/// Builds the result record from an already ranked chunk list.
pub fn assemble(query: &str, scored_chunks: Vec<ScoredChunk>, tok: &dyn Tokenizer) -> RetrievalResult {
    let endpoints = dedup_endpoints(&scored_chunks);
    let retrieved_token_count = scored_chunks.iter().map(|s| count_tokens(tok, &s.chunk.content)).sum();
    RetrievalResult { query: query.to_string(), scored_chunks, endpoints, retrieved_token_count }
}

fn dedup_endpoints(scored: &[ScoredChunk]) -> Vec<EndpointId> {
    let mut seen = HashSet::new();
    scored.iter().flat_map(|s| &s.chunk.endpoint_refs).filter(|id| seen.insert(*id)).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chunking::{Chunk, ChunkingStrategy, Refinement};
    use crate::index::build_index;
    use crate::openapi::HttpVerb;
    use crate::providers::LocalHashEmbedder;
    use crate::tokenizer::ReferenceTokenizer;

    fn chunk(id: &str, text: &str, refs: &[&str]) -> Chunk {
        Chunk {
            chunk_id: id.into(),
            content: text.into(),
            embedding_input: text.into(),
            endpoint_refs: refs.iter().map(|p| EndpointId::new(HttpVerb::Get, *p)).collect(),
            strategy: ChunkingStrategy::endpoint(Refinement::RelevantFields, "m").unwrap(),
        }
    }

    #[test]
    fn endpoints_are_deduplicated_in_rank_order() {
        let e = LocalHashEmbedder::new(128);
        let idx = build_index(
            vec![
                chunk("a", "movie top rated list", &["/movie/top_rated", "/movie/{movie_id}"]),
                chunk("b", "movie top rated", &["/movie/top_rated"]),
                chunk("c", "album tracks", &["/albums"]),
            ],
            &e,
        )
        .unwrap();
        let r = retrieve(&idx, &e, &ReferenceTokenizer, "movie top rated", 2).unwrap();
        let paths: Vec<&str> = r.endpoints.iter().map(|id| id.path.as_str()).collect();
        assert_eq!(paths, ["/movie/top_rated", "/movie/{movie_id}"]);
        assert_eq!(r.scored_chunks.len(), 2);
        let recount: usize = r.scored_chunks.iter().map(|s| count_tokens(&ReferenceTokenizer, &s.chunk.content)).sum();
        assert_eq!(r.retrieved_token_count, recount);
    }

    #[test]
    fn empty_query_is_rejected() {
        let e = LocalHashEmbedder::new(16);
        let idx = build_index(vec![chunk("a", "x", &[])], &e).unwrap();
        assert!(retrieve(&idx, &e, &ReferenceTokenizer, "  ", 1).is_err());
    }
}
