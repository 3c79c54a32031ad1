//! Content-addressed disk cache for provider responses, with in-flight
//! deduplication so concurrent identical requests trigger a single fetch.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};

use sha2::{Digest, Sha256};

use super::{ChatResponse, EmbeddingProvider, LlmProvider, Message, ProviderKind, ToolSchema};
use crate::error::{Error, Result};

pub(crate) fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

/// `<root>/<provider>/<first two hex digits>/<hash>`.
#[derive(Debug, Clone)]
pub struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    pub fn new(root: impl AsRef<Path>, provider: &str) -> Self {
        let safe: String =
            provider.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect();
        DiskCache { dir: root.as_ref().join(safe) }
    }

    pub fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2]).join(key)
    }

    pub fn get(&self, key: &str) -> Option<Vec<u8>> {
        fs::read(self.path_for(key)).ok()
    }

    /// Atomic write via rename; concurrent writers of the same key race
    /// harmlessly since the payloads are identical.
    pub fn put(&self, key: &str, payload: &[u8]) -> Result<()> {
        let path = self.path_for(key);
        let parent = path.parent().expect("cache path has a parent");
        fs::create_dir_all(parent)?;
        let mut tmp = tempfile_in(parent)?;
        tmp.1.write_all(payload)?;
        tmp.1.sync_all()?;
        fs::rename(&tmp.0, &path)?;
        Ok(())
    }
}

fn tempfile_in(dir: &Path) -> std::io::Result<(PathBuf, fs::File)> {
    static SEQ: AtomicU64 = AtomicU64::new(0);
    let name = format!(".tmp-{}-{}", std::process::id(), SEQ.fetch_add(1, Ordering::Relaxed));
    let path = dir.join(name);
    let file = fs::File::create(&path)?;
    Ok((path, file))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
}

type SlotValue<T> = Option<std::result::Result<T, String>>;

struct Slot<T> {
    value: Mutex<SlotValue<T>>,
    ready: Condvar,
}

impl<T: Clone> Slot<T> {
    fn wait(&self) -> std::result::Result<T, String> {
        let mut guard = self.value.lock().unwrap();
        while guard.is_none() {
            guard = self.ready.wait(guard).unwrap();
        }
        guard.clone().unwrap()
    }
}

enum Claim<T> {
    Owner(Arc<Slot<T>>),
    Waiter(Arc<Slot<T>>),
}

struct Inflight<T> {
    slots: Mutex<HashMap<String, Arc<Slot<T>>>>,
}

impl<T: Clone> Inflight<T> {
    fn new() -> Self {
        Inflight { slots: Mutex::new(HashMap::new()) }
    }

    fn claim(&self, key: &str) -> Claim<T> {
        let mut slots = self.slots.lock().unwrap();
        if let Some(slot) = slots.get(key) {
            return Claim::Waiter(slot.clone());
        }
        let slot = Arc::new(Slot { value: Mutex::new(None), ready: Condvar::new() });
        slots.insert(key.to_string(), slot.clone());
        Claim::Owner(slot)
    }

    fn complete(&self, key: &str, slot: &Slot<T>, value: std::result::Result<T, String>) {
        *slot.value.lock().unwrap() = Some(value);
        slot.ready.notify_all();
        self.slots.lock().unwrap().remove(key);
    }
}

/// Wraps an embedder with the disk cache. Vectors are stored as JSON arrays
/// of `f32`, which round-trip bit-exactly.
type VectorSlot = Arc<Slot<Vec<f32>>>;

pub struct CachedEmbedder<E> {
    inner: E,
    cache: DiskCache,
    inflight: Inflight<Vec<f32>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<E: EmbeddingProvider> CachedEmbedder<E> {
    pub fn new(inner: E, cache_root: impl AsRef<Path>) -> Self {
        let cache = DiskCache::new(cache_root, inner.name());
        CachedEmbedder { inner, cache, inflight: Inflight::new(), hits: AtomicU64::new(0), misses: AtomicU64::new(0) }
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats { hits: self.hits.load(Ordering::Relaxed), misses: self.misses.load(Ordering::Relaxed) }
    }

    fn key(&self, text: &str) -> String {
        sha256_hex(&[self.inner.name().as_bytes(), text.as_bytes()])
    }

    fn load(&self, key: &str) -> Option<Vec<f32>> {
        let bytes = self.cache.get(key)?;
        let v: Vec<f32> = serde_json::from_slice(&bytes).ok()?;
        (v.len() == self.inner.dimension()).then_some(v)
    }

    fn unavailable(&self, reason: String) -> Error {
        Error::ProviderUnavailable { provider: self.inner.name().to_string(), reason }
    }
}

impl<E: EmbeddingProvider> EmbeddingProvider for CachedEmbedder<E> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn kind(&self) -> ProviderKind {
        self.inner.kind()
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>> {
        super::validate_texts(self.name(), texts)?;
        let keys: Vec<String> = texts.iter().map(|t| self.key(t)).collect();
        let mut out: Vec<Option<Vec<f32>>> = vec![None; texts.len()];
        // Keys this call embeds itself: (key, text, slot to fill).
        let mut owned: Vec<(String, &str, VectorSlot)> = Vec::new();
        let mut waiting: HashMap<String, VectorSlot> = HashMap::new();

        for (i, key) in keys.iter().enumerate() {
            if let Some(v) = self.load(key) {
                self.hits.fetch_add(1, Ordering::Relaxed);
                out[i] = Some(v);
                continue;
            }
            if owned.iter().any(|(k, _, _)| k == key) || waiting.contains_key(key) {
                continue;
            }
            match self.inflight.claim(key) {
                Claim::Owner(slot) => owned.push((key.clone(), texts[i], slot)),
                Claim::Waiter(slot) => {
                    waiting.insert(key.clone(), slot);
                }
            }
        }

        let mut fetched: HashMap<String, Vec<f32>> = HashMap::new();
        if !owned.is_empty() {
            let batch: Vec<&str> = owned.iter().map(|(_, t, _)| *t).collect();
            self.misses.fetch_add(batch.len() as u64, Ordering::Relaxed);
            match self.inner.embed_batch(&batch) {
                Ok(vectors) => {
                    for ((key, _, slot), v) in owned.iter().zip(vectors) {
                        let payload = serde_json::to_vec(&v)?;
                        if let Err(e) = self.cache.put(key, &payload) {
                            tracing::warn!(error = %e, "could not write embedding cache entry");
                        }
                        self.inflight.complete(key, slot, Ok(v.clone()));
                        fetched.insert(key.clone(), v);
                    }
                }
                Err(e) => {
                    for (key, _, slot) in &owned {
                        self.inflight.complete(key, slot, Err(e.to_string()));
                    }
                    return Err(e);
                }
            }
        }
        for (key, slot) in waiting {
            let v = slot.wait().map_err(|r| self.unavailable(r))?;
            fetched.insert(key, v);
        }

        Ok(out.into_iter().zip(&keys).map(|(v, k)| v.unwrap_or_else(|| fetched[k].clone())).collect())
    }
}

/// Wraps a chat provider with the disk cache, keyed by the full request.
pub struct CachedLlm<L> {
    inner: L,
    cache: DiskCache,
    inflight: Inflight<ChatResponse>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<L: LlmProvider> CachedLlm<L> {
    pub fn new(inner: L, cache_root: impl AsRef<Path>) -> Self {
        let cache = DiskCache::new(cache_root, inner.name());
        CachedLlm { inner, cache, inflight: Inflight::new(), hits: AtomicU64::new(0), misses: AtomicU64::new(0) }
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats { hits: self.hits.load(Ordering::Relaxed), misses: self.misses.load(Ordering::Relaxed) }
    }
}

impl<L: LlmProvider> LlmProvider for CachedLlm<L> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn kind(&self) -> ProviderKind {
        self.inner.kind()
    }

    fn chat(&self, messages: &[Message], tools: &[ToolSchema]) -> Result<ChatResponse> {
        let request = serde_json::to_vec(&(messages, tools))?;
        let key = sha256_hex(&[self.inner.name().as_bytes(), &request]);
        if let Some(resp) = self.cache.get(&key).and_then(|b| serde_json::from_slice(&b).ok()) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(resp);
        }
        match self.inflight.claim(&key) {
            Claim::Waiter(slot) => slot
                .wait()
                .map_err(|reason| Error::ProviderUnavailable { provider: self.inner.name().to_string(), reason }),
            Claim::Owner(slot) => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                match self.inner.chat(messages, tools) {
                    Ok(resp) => {
                        if let Err(e) = self.cache.put(&key, &serde_json::to_vec(&resp)?) {
                            tracing::warn!(error = %e, "could not write chat cache entry");
                        }
                        self.inflight.complete(&key, &slot, Ok(resp.clone()));
                        Ok(resp)
                    }
                    Err(e) => {
                        self.inflight.complete(&key, &slot, Err(e.to_string()));
                        Err(e)
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::providers::{LocalHashEmbedder, Reply, TokenUsage};
    use std::sync::atomic::AtomicUsize;
    use std::time::Duration;

    /// Counts calls and sleeps so concurrent callers overlap.
    struct Slow {
        inner: LocalHashEmbedder,
        calls: AtomicUsize,
        texts: AtomicUsize,
    }

    impl EmbeddingProvider for Slow {
        fn name(&self) -> &str {
            "slow"
        }
        fn dimension(&self) -> usize {
            self.inner.dimension()
        }
        fn kind(&self) -> ProviderKind {
            ProviderKind::RemoteHttp
        }
        fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.texts.fetch_add(texts.len(), Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(50));
            self.inner.embed_batch(texts)
        }
    }

    fn slow() -> Slow {
        Slow { inner: LocalHashEmbedder::new(16), calls: AtomicUsize::new(0), texts: AtomicUsize::new(0) }
    }

    #[test]
    fn cache_hit_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let first = CachedEmbedder::new(slow(), dir.path());
        let a = first.embed_batch(&["top rated movies", "credits"]).unwrap();
        assert_eq!(first.stats(), CacheStats { hits: 0, misses: 2 });

        let second = CachedEmbedder::new(slow(), dir.path());
        let b = second.embed_batch(&["top rated movies", "credits"]).unwrap();
        assert_eq!(second.inner.calls.load(Ordering::SeqCst), 0);
        assert_eq!(second.stats(), CacheStats { hits: 2, misses: 0 });
        for (x, y) in a.iter().zip(&b) {
            let xb: Vec<u32> = x.iter().map(|f| f.to_bits()).collect();
            let yb: Vec<u32> = y.iter().map(|f| f.to_bits()).collect();
            assert_eq!(xb, yb);
        }
        assert!(DiskCache::new(dir.path(), "slow").path_for(&second.key("credits")).exists());
    }

    #[test]
    fn duplicates_within_batch_fetch_once() {
        let dir = tempfile::tempdir().unwrap();
        let c = CachedEmbedder::new(slow(), dir.path());
        let v = c.embed_batch(&["x", "y", "x"]).unwrap();
        assert_eq!(v[0], v[2]);
        assert_eq!(c.inner.texts.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn concurrent_identical_requests_share_one_fetch() {
        let dir = tempfile::tempdir().unwrap();
        let c = Arc::new(CachedEmbedder::new(slow(), dir.path()));
        let handles: Vec<_> = (0..8)
            .map(|_| {
                let c = c.clone();
                std::thread::spawn(move || c.embed("shared text").unwrap())
            })
            .collect();
        let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        assert!(results.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(c.inner.texts.load(Ordering::SeqCst), 1);
    }

    struct Counting(AtomicUsize);

    impl LlmProvider for Counting {
        fn name(&self) -> &str {
            "counting"
        }
        fn kind(&self) -> ProviderKind {
            ProviderKind::RemoteHttp
        }
        fn chat(&self, messages: &[Message], _: &[ToolSchema]) -> Result<ChatResponse> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Ok(ChatResponse { reply: Reply::Final(messages[0].text.to_uppercase()), usage: TokenUsage::new(3, 1) })
        }
    }

    #[test]
    fn chat_responses_are_cached_by_request() {
        let dir = tempfile::tempdir().unwrap();
        let llm = CachedLlm::new(Counting(AtomicUsize::new(0)), dir.path());
        let a = llm.chat(&[Message::user("hi")], &[]).unwrap();
        let b = llm.chat(&[Message::user("hi")], &[]).unwrap();
        let c = llm.chat(&[Message::user("ho")], &[]).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(llm.inner.0.load(Ordering::SeqCst), 2);
        assert_eq!(llm.stats(), CacheStats { hits: 1, misses: 2 });
    }
}
