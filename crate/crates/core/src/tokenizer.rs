//! Token counting and token-window splitting.
//!
//! Every tokenizer partitions a text into contiguous byte spans: the spans
//! cover the whole input, in order, without gaps. Splitting on span
//! boundaries and re-joining therefore reproduces the input exactly.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use base64::Engine;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait Tokenizer: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    /// Byte spans of the tokens of `text`; contiguous and covering.
    fn spans(&self, text: &str) -> Vec<Range<usize>>;

    fn count(&self, text: &str) -> usize {
        self.spans(text).len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerKind {
    Reference,
    Plugin,
}

/// Named tokenizer selection. `reference` is the built-in rule; `bpe:<path>`
/// loads a byte-pair encoder from a tiktoken-style rank file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerSpec {
    pub name: String,
    pub kind: TokenizerKind,
}

impl TokenizerSpec {
    pub fn reference() -> Self {
        TokenizerSpec { name: "reference".into(), kind: TokenizerKind::Reference }
    }

    pub fn parse(name: &str) -> Result<Self> {
        if name == "reference" {
            Ok(Self::reference())
        } else if let Some(path) = name.strip_prefix("bpe:") {
            if path.is_empty() {
                return Err(Error::Tokenizer("`bpe:` needs a rank file path".into()));
            }
            Ok(TokenizerSpec { name: name.to_string(), kind: TokenizerKind::Plugin })
        } else {
            Err(Error::Tokenizer(format!("unknown tokenizer `{name}`")))
        }
    }

    pub fn build(&self) -> Result<Arc<dyn Tokenizer>> {
        match self.kind {
            TokenizerKind::Reference => Ok(Arc::new(ReferenceTokenizer)),
            TokenizerKind::Plugin => {
                let path = self
                    .name
                    .strip_prefix("bpe:")
                    .ok_or_else(|| Error::Tokenizer(format!("unknown plugin `{}`", self.name)))?;
                Ok(Arc::new(BpeTokenizer::from_file(path)?))
            }
        }
    }
}

/// Counts maximal alphanumeric runs and every other non-whitespace character
/// as one token each. Whitespace belongs to the span of the following token;
/// trailing whitespace belongs to the last token, and whitespace-only text is
/// a single token.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReferenceTokenizer;

impl Tokenizer for ReferenceTokenizer {
    fn name(&self) -> &str {
        "reference"
    }

    fn spans(&self, text: &str) -> Vec<Range<usize>> {
        if text.is_empty() {
            return Vec::new();
        }
        // End offsets of the non-whitespace cores.
        let mut core_ends = Vec::new();
        let mut in_run = false;
        for (i, c) in text.char_indices() {
            if c.is_alphanumeric() {
                if in_run {
                    *core_ends.last_mut().unwrap() = i + c.len_utf8();
                } else {
                    core_ends.push(i + c.len_utf8());
                    in_run = true;
                }
            } else {
                in_run = false;
                if !c.is_whitespace() {
                    core_ends.push(i + c.len_utf8());
                }
            }
        }
        if core_ends.is_empty() {
            return std::iter::once(0..text.len()).collect();
        }
        let n = core_ends.len();
        let mut spans = Vec::with_capacity(n);
        let mut start = 0;
        for (i, &end) in core_ends.iter().enumerate() {
            let end = if i + 1 == n { text.len() } else { end };
            spans.push(start..end);
            start = end;
        }
        spans
    }
}

/// Byte-pair encoder over a tiktoken-style rank file (`<base64 bytes> <rank>`
/// per line). Pieces come from a GPT-style pre-tokenization pattern; token
/// boundaries falling inside a UTF-8 sequence are dropped so spans stay valid
/// string slices.
pub struct BpeTokenizer {
    name: String,
    ranks: HashMap<Vec<u8>, u32>,
    pattern: Regex,
}

impl fmt::Debug for BpeTokenizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BpeTokenizer").field("name", &self.name).field("vocab", &self.ranks.len()).finish()
    }
}

const PRETOKENIZE: &str =
    r"(?i:'s|'t|'re|'ve|'m|'ll|'d)|[^\r\n\p{L}\p{N}]?\p{L}+|\p{N}{1,3}| ?[^\s\p{L}\p{N}]+[\r\n]*|\s*[\r\n]+|\s+";

impl BpeTokenizer {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path: PathBuf = path.as_ref().to_path_buf();
        let text =
            std::fs::read_to_string(&path).map_err(|e| Error::Tokenizer(format!("reading {}: {e}", path.display())))?;
        Self::from_ranks_text(&format!("bpe:{}", path.display()), &text)
    }

    pub fn from_ranks_text(name: &str, text: &str) -> Result<Self> {
        let mut ranks = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::Tokenizer(format!("rank file line {}: `{line}`", lineno + 1));
            let (token, rank) = line.split_once(' ').ok_or_else(bad)?;
            let bytes = base64::engine::general_purpose::STANDARD.decode(token).map_err(|_| bad())?;
            let rank: u32 = rank.trim().parse().map_err(|_| bad())?;
            ranks.insert(bytes, rank);
        }
        if ranks.is_empty() {
            return Err(Error::Tokenizer("rank file is empty".into()));
        }
        Ok(BpeTokenizer { name: name.to_string(), ranks, pattern: Regex::new(PRETOKENIZE).expect("static pattern") })
    }

    /// Token boundaries (relative to `piece`) after rank-ordered merging.
    fn merge_piece(&self, piece: &[u8]) -> Vec<usize> {
        if piece.len() <= 1 || self.ranks.contains_key(piece) {
            return vec![0, piece.len()];
        }
        let mut bounds: Vec<usize> = (0..=piece.len()).collect();
        loop {
            let mut best: Option<(u32, usize)> = None;
            for i in 0..bounds.len().saturating_sub(2) {
                if let Some(&rank) = self.ranks.get(&piece[bounds[i]..bounds[i + 2]]) {
                    if best.is_none_or(|(r, _)| rank < r) {
                        best = Some((rank, i));
                    }
                }
            }
            match best {
                Some((_, i)) => {
                    bounds.remove(i + 1);
                }
                None => break,
            }
        }
        bounds
    }
}

impl Tokenizer for BpeTokenizer {
    fn name(&self) -> &str {
        &self.name
    }

    fn spans(&self, text: &str) -> Vec<Range<usize>> {
        let mut cuts = vec![0usize];
        let mut covered = 0;
        for m in self.pattern.find_iter(text) {
            // The pattern matches every character, but keep any gap as its own piece.
            if m.start() > covered {
                cuts.push(m.start());
            }
            let bounds = self.merge_piece(m.as_str().as_bytes());
            for &b in &bounds[1..] {
                let at = m.start() + b;
                if text.is_char_boundary(at) {
                    cuts.push(at);
                }
            }
            covered = m.end();
        }
        if covered < text.len() {
            cuts.push(text.len());
        }
        cuts.dedup();
        cuts.windows(2).map(|w| w[0]..w[1]).collect()
    }
}

/// Token index windows `[i·(s−l), min(i·(s−l)+s, n))`, stopping at the first
/// window that reaches `n`. A text of at most `s` tokens is one window.
pub fn token_windows(n: usize, size: usize, overlap: usize) -> Result<Vec<Range<usize>>> {
    if size == 0 || overlap >= size {
        return Err(Error::InvalidChunkParams { size, overlap });
    }
    if n <= size {
        return Ok(std::iter::once(0..n).collect());
    }
    let stride = size - overlap;
    let mut windows = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + size).min(n);
        windows.push(start..end);
        if end == n {
            break;
        }
        start += stride;
    }
    Ok(windows)
}

pub fn count_tokens(tok: &dyn Tokenizer, text: &str) -> usize {
    tok.count(text)
}

/// Splits `text` into windows of `size` tokens sharing `overlap` tokens with
/// the previous window. Each piece is the contiguous source substring.
pub fn split_by_tokens(tok: &dyn Tokenizer, text: &str, size: usize, overlap: usize) -> Result<Vec<String>> {
    let spans = tok.spans(text);
    let windows = token_windows(spans.len(), size, overlap)?;
    if spans.len() <= size {
        return Ok(vec![text.to_string()]);
    }
    Ok(windows.into_iter().map(|w| text[spans[w.start].start..spans[w.end - 1].end].to_string()).collect())
}
