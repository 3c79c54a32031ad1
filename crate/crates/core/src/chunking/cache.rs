use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::LlmTask;
use crate::error::Result;

#[derive(Serialize, Deserialize)]
struct Record {
    key: String,
    text: String,
}

/// Stored LLM refinement outputs for one (model, template version): a JSON
/// lines file of `{"key": <sha256 of endpoint content>, "text": ...}`.
/// Later records win over earlier ones with the same key.
pub struct RefinementCache {
    path: PathBuf,
    template_version: &'static str,
    entries: Mutex<HashMap<String, String>>,
    file: Mutex<Option<File>>,
}

impl RefinementCache {
    pub fn open(cache_root: impl AsRef<Path>, model: &str, task: LlmTask) -> Result<Self> {
        let (version, _) = task.template();
        let dir = cache_root.as_ref().join("refinements");
        fs::create_dir_all(&dir)?;
        let safe_model: String =
            model.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect();
        let path = dir.join(format!("{safe_model}__{version}.jsonl"));
        let mut entries = HashMap::new();
        if path.exists() {
            for line in BufReader::new(File::open(&path)?).lines() {
                let line = line?;
                // A torn trailing line from an interrupted run is skipped.
                if let Ok(r) = serde_json::from_str::<Record>(&line) {
                    entries.insert(r.key, r.text);
                }
            }
        }
        Ok(RefinementCache { path, template_version: version, entries: Mutex::new(entries), file: Mutex::new(None) })
    }

    pub fn key(content: &str) -> String {
        crate::providers::content_hash(content)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn template_version(&self) -> &'static str {
        self.template_version
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.entries.lock().unwrap().get(key).cloned()
    }

    pub fn put(&self, key: &str, text: &str) -> Result<()> {
        let mut line = serde_json::to_string(&Record { key: key.to_string(), text: text.to_string() })?;
        line.push('\n');
        {
            let mut file = self.file.lock().unwrap();
            if file.is_none() {
                *file = Some(OpenOptions::new().create(true).append(true).open(&self.path)?);
            }
            file.as_mut().unwrap().write_all(line.as_bytes())?;
        }
        self.entries.lock().unwrap().insert(key.to_string(), text.to_string());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_changes_with_content() {
        let a = RefinementCache::key(r#"{"verb":"GET","path":"/a"}"#);
        let b = RefinementCache::key(r#"{"verb":"GET","path":"/b"}"#);
        assert_ne!(a, b);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn persists_and_last_write_wins() {
        let dir = tempfile::tempdir().unwrap();
        let c = RefinementCache::open(dir.path(), "gpt/x", LlmTask::Query).unwrap();
        assert!(c.path().ends_with("refinements/gpt_x__query-v1.jsonl"));
        c.put("k1", "first").unwrap();
        c.put("k2", "other").unwrap();
        c.put("k1", "second").unwrap();
        let reopened = RefinementCache::open(dir.path(), "gpt/x", LlmTask::Query).unwrap();
        assert_eq!(reopened.get("k1").as_deref(), Some("second"));
        assert_eq!(reopened.len(), 2);
        let summary = RefinementCache::open(dir.path(), "gpt/x", LlmTask::Summary).unwrap();
        assert!(summary.is_empty());
    }
}
