//! Word-level emotion lexicon.
//!
//! File format, one record per line:
//!
//! ```text
//! # comment
//! word<TAB>pos<TAB>emotion
//! ```
//!
//! `pos` is one of `verb`, `adjective`, `adverb`, `noun`, `other`; `emotion`
//! is any [`EmotionLabel`]. Words must be single tokens and may appear once.

use super::{tokenize, Pos};
use crate::feature::{EmotionLabel, FeatureKind};
use std::collections::BTreeMap;
use std::path::Path;

/// Lexicon shipped with the crate.
pub const BUILTIN_LEXICON: &str = include_str!("../../data/lexicon.tsv");

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("lexicon line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LexEntry {
    pub pos: Pos,
    pub emotion: EmotionLabel,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, LexEntry>,
}

impl Lexicon {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_LEXICON).expect("built-in lexicon is well formed")
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, LexiconError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |reason: String| LexiconError::Parse { line, reason };
            let fields: Vec<&str> = raw.trim_end_matches('\r').split('\t').collect();
            let [word, pos, emotion] = fields[..] else {
                return Err(err(format!("expected 3 tab-separated fields, found {}", fields.len())));
            };
            let word = word.trim();
            if tokenize(word) != [word] {
                return Err(err(format!("`{word}` is not a single token")));
            }
            let pos: Pos = pos.trim().parse().map_err(|_| err(format!("unknown part of speech `{pos}`")))?;
            let emotion: EmotionLabel = emotion.trim().parse().map_err(|_| err(format!("unknown emotion `{emotion}`")))?;
            if entries.insert(word.to_string(), LexEntry { pos, emotion }).is_some() {
                return Err(err(format!("duplicate word `{word}`")));
            }
        }
        Ok(Lexicon { entries })
    }

    pub fn lookup(&self, word: &str) -> Option<LexEntry> {
        self.entries.get(word).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in word order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, LexEntry)> {
        self.entries.iter().map(|(w, e)| (w.as_str(), *e))
    }

    /// Words tagged with `kind` and `emotion`, sorted.
    pub fn words_for(&self, kind: FeatureKind, emotion: EmotionLabel) -> Vec<&str> {
        self.entries()
            .filter(|(_, e)| e.pos.kind() == Some(kind) && e.emotion == emotion)
            .map(|(w, _)| w)
            .collect()
    }
}
