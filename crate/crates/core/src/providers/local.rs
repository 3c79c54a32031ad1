use super::{l2_normalize, validate_texts, EmbeddingProvider, ProviderKind};
use crate::error::Result;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Hashed bag-of-words embedder: lowercase, take maximal alphanumeric runs,
/// bucket each run by `fnv1a64(run) % dimension`, count, L2-normalize.
///
/// Text without any alphanumeric run maps to the unit vector of the bucket of
/// its full byte string.
#[derive(Debug, Clone)]
pub struct LocalHashEmbedder {
    name: String,
    dimension: usize,
}

impl LocalHashEmbedder {
    pub fn new(dimension: usize) -> Self {
        assert!(dimension > 0, "dimension must be positive");
        LocalHashEmbedder { name: format!("local-hash-{dimension}"), dimension }
    }

    fn embed_one(&self, text: &str) -> Vec<f32> {
        let lower = text.to_lowercase();
        let mut counts = vec![0f64; self.dimension];
        let mut any = false;
        for run in lower.split(|c: char| !c.is_alphanumeric()).filter(|r| !r.is_empty()) {
            counts[(fnv1a64(run.as_bytes()) % self.dimension as u64) as usize] += 1.0;
            any = true;
        }
        if !any {
            counts[(fnv1a64(text.as_bytes()) % self.dimension as u64) as usize] = 1.0;
        }
        l2_normalize(&counts).expect("at least one bucket is non-zero")
    }
}

impl EmbeddingProvider for LocalHashEmbedder {
    fn name(&self) -> &str {
        &self.name
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn kind(&self) -> ProviderKind {
        ProviderKind::LocalHash
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>> {
        validate_texts(&self.name, texts)?;
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}
