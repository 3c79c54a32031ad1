//! Exact (flat) cosine-similarity index over chunks.
//!
//! Vectors are unit-norm, so cosine similarity is a dot product. Results are
//! ordered by descending score with ties broken by ascending chunk id, which
//! makes every query fully deterministic.
//!
//! On-disk layout (little-endian):
//!
//! ```text
//! magic "SRAGIDX\0" | version u32 | dimension u32 | count u32
//! provider_len u32 | provider bytes | fingerprint_len u32 | fingerprint bytes
//! count × dimension f32 vectors
//! count × (len u32 | chunk JSON)
//! crc32 of everything above
//! ```

use std::cmp::Ordering;
use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chunking::Chunk;
use crate::error::{Error, Result};
use crate::providers::EmbeddingProvider;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"SRAGIDX\0";
const EMBED_BATCH: usize = 256;
const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dimension: usize,
    provider_name: String,
    strategy_fingerprint: String,
    chunks: Vec<Chunk>,
    /// Row-major, `chunks.len() × dimension`.
    vectors: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredChunk {
    pub chunk: Chunk,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

impl VectorIndex {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn provider_name(&self) -> &str {
        &self.provider_name
    }

    pub fn strategy_fingerprint(&self) -> &str {
        &self.strategy_fingerprint
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn vector(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dimension..(i + 1) * self.dimension]
    }

    /// Top `k` entries for an already-embedded query vector.
    pub fn search(&self, query: &[f32], k: usize) -> Result<Vec<ScoredChunk>> {
        if k == 0 {
            return Err(Error::InvalidInput("k must be at least 1".into()));
        }
        if query.len() != self.dimension {
            return Err(Error::InvalidInput(format!(
                "query has dimension {}, index has {}",
                query.len(),
                self.dimension
            )));
        }
        let mut scored: Vec<(f64, usize)> = (0..self.len()).map(|i| (dot(query, self.vector(i)), i)).collect();
        let order = |a: &(f64, usize), b: &(f64, usize)| -> Ordering {
            b.0.total_cmp(&a.0).then_with(|| self.chunks[a.1].chunk_id.cmp(&self.chunks[b.1].chunk_id))
        };
        let k = k.min(scored.len());
        if k < scored.len() {
            scored.select_nth_unstable_by(k, order);
            scored.truncate(k);
        }
        scored.sort_by(order);
        Ok(scored
            .into_iter()
            .enumerate()
            .map(|(r, (score, i))| ScoredChunk { chunk: self.chunks[i].clone(), score, rank: r + 1 })
            .collect())
    }
}

/// Dot product accumulated in `f64`.
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum()
}

/// Embeds every chunk's `embedding_input` (never its content) and stores the
/// vectors alongside the chunks.
pub fn build_index(chunks: Vec<Chunk>, provider: &dyn EmbeddingProvider) -> Result<VectorIndex> {
    if chunks.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut seen = HashSet::new();
    for c in &chunks {
        if !seen.insert(c.chunk_id.as_str()) {
            return Err(Error::DuplicateChunkId(c.chunk_id.clone()));
        }
        if c.embedding_input.is_empty() {
            return Err(Error::InvalidInput(format!("chunk `{}` has an empty embedding input", c.chunk_id)));
        }
    }

    let dimension = provider.dimension();
    let mut vectors = Vec::with_capacity(chunks.len() * dimension);
    for batch in chunks.chunks(EMBED_BATCH) {
        let texts: Vec<&str> = batch.iter().map(|c| c.embedding_input.as_str()).collect();
        for v in provider.embed_batch(&texts)? {
            check_vector(&v, dimension)?;
            vectors.extend_from_slice(&v);
        }
    }

    let mut fingerprints: Vec<String> = Vec::new();
    for c in &chunks {
        let fp = c.strategy.fingerprint();
        if !fingerprints.contains(&fp) {
            fingerprints.push(fp);
        }
    }

    Ok(VectorIndex {
        dimension,
        provider_name: provider.name().to_string(),
        strategy_fingerprint: fingerprints.join(","),
        chunks,
        vectors,
    })
}

fn check_vector(v: &[f32], dimension: usize) -> Result<()> {
    if v.len() != dimension {
        return Err(Error::Protocol(format!("provider returned dimension {}, expected {dimension}", v.len())));
    }
    let norm = dot(v, v).sqrt();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::Protocol(format!("provider returned a vector of norm {norm}")));
    }
    Ok(())
}

/// Top `k` chunks for `query_text`, embedded with the same provider that
/// built the index.
pub fn query_index(
    idx: &VectorIndex,
    query_text: &str,
    provider: &dyn EmbeddingProvider,
    k: usize,
) -> Result<Vec<ScoredChunk>> {
    if provider.name() != idx.provider_name {
        return Err(Error::ProviderMismatch { index: idx.provider_name.clone(), query: provider.name().to_string() });
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let q = provider.embed(query_text)?;
    idx.search(&q, k)
}

pub fn save_index(idx: &VectorIndex) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(64 + idx.vectors.len() * 4);
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, FORMAT_VERSION);
    put_u32(&mut out, to_u32(idx.dimension)?);
    put_u32(&mut out, to_u32(idx.len())?);
    put_bytes(&mut out, idx.provider_name.as_bytes())?;
    put_bytes(&mut out, idx.strategy_fingerprint.as_bytes())?;
    for x in &idx.vectors {
        out.extend_from_slice(&x.to_le_bytes());
    }
    for c in &idx.chunks {
        put_bytes(&mut out, &serde_json::to_vec(c)?)?;
    }
    let crc = crc32fast::hash(&out);
    put_u32(&mut out, crc);
    Ok(out)
}

pub fn load_index(bytes: &[u8]) -> Result<VectorIndex> {
    if bytes.len() < MAGIC.len() + 4 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::CorruptIndex("not an index file".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    if crc32fast::hash(body) != stored {
        return Err(Error::CorruptIndex("checksum mismatch".into()));
    }

    let mut r = Reader { buf: body, pos: MAGIC.len() };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::FormatVersionMismatch { found: version, expected: FORMAT_VERSION });
    }
    let dimension = r.u32()? as usize;
    let count = r.u32()? as usize;
    let provider_name = r.string()?;
    let strategy_fingerprint = r.string()?;
    let n = count.checked_mul(dimension).ok_or_else(|| Error::CorruptIndex("vector block size overflows".into()))?;
    let raw = r.take(n.checked_mul(4).ok_or_else(|| Error::CorruptIndex("vector block size overflows".into()))?)?;
    let vectors = raw.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes"))).collect();
    let mut chunks = Vec::with_capacity(count);
    for _ in 0..count {
        let len = r.u32()? as usize;
        let json = r.take(len)?;
        chunks.push(serde_json::from_slice(json).map_err(|e| Error::CorruptIndex(format!("chunk record: {e}")))?);
    }
    if r.pos != body.len() {
        return Err(Error::CorruptIndex("trailing bytes".into()));
    }
    Ok(VectorIndex { dimension, provider_name, strategy_fingerprint, chunks, vectors })
}

pub fn save_index_to_path(idx: &VectorIndex, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, save_index(idx)?)?;
    Ok(())
}

pub fn load_index_from_path(path: impl AsRef<Path>) -> Result<VectorIndex> {
    load_index(&std::fs::read(path)?)
}

fn to_u32(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::InvalidInput(format!("{n} does not fit the index format")))
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) -> Result<()> {
    put_u32(out, to_u32(b.len())?);
    out.extend_from_slice(b);
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::CorruptIndex("unexpected end of file".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec()).map_err(|_| Error::CorruptIndex("invalid UTF-8".into()))
    }
}
