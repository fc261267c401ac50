//! Sentence text to [`FeatureVector`].
//!
//! Text is split into tokens, each token is tagged with a part of speech and
//! an emotion (by the lexicon or a remote word-level tagger), and the tags of
//! each part of speech are folded into one emotion by plurality vote among
//! non-neutral emotions. Ties go to the earliest emotion in canonical order;
//! a part of speech with no emotional token is `Neutral`.

mod lexicon;

pub use lexicon::{LexEntry, Lexicon, LexiconError, BUILTIN_LEXICON};

use crate::feature::{EmotionLabel, FeatureKind, FeatureVector, EMOTION_COUNT};
use crate::wire::{http::HttpClient, http::HttpWordTagger, WireError, WordTag, WordTagger};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

/// Part of speech of a token. Only the first four carry a feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pos {
    Verb,
    Adjective,
    Adverb,
    Noun,
    Other,
}

impl Pos {
    pub fn kind(self) -> Option<FeatureKind> {
        match self {
            Pos::Verb => Some(FeatureKind::Verb),
            Pos::Adjective => Some(FeatureKind::Adjective),
            Pos::Adverb => Some(FeatureKind::Adverb),
            Pos::Noun => Some(FeatureKind::Noun),
            Pos::Other => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Verb => "verb",
            Pos::Adjective => "adjective",
            Pos::Adverb => "adverb",
            Pos::Noun => "noun",
            Pos::Other => "other",
        }
    }
}

impl From<FeatureKind> for Pos {
    fn from(k: FeatureKind) -> Self {
        match k {
            FeatureKind::Verb => Pos::Verb,
            FeatureKind::Adjective => Pos::Adjective,
            FeatureKind::Adverb => Pos::Adverb,
            FeatureKind::Noun => Pos::Noun,
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pos {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Pos::Verb, Pos::Adjective, Pos::Adverb, Pos::Noun, Pos::Other]
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| format!("unknown part of speech `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenTag {
    pub token: String,
    pub pos: Pos,
    pub emotion: EmotionLabel,
}

#[derive(Debug, thiserror::Error)]
pub enum ExtractError {
    #[error("sentence text is empty")]
    EmptyText,
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error("word tagger unavailable: {0}")]
    RemoteUnavailable(#[source] WireError),
    #[error("word tagger returned {got} tags for {want} tokens")]
    TagCountMismatch { want: usize, got: usize },
    #[error("invalid extractor config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Lexicon,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorConfig {
    pub backend: BackendKind,
    /// Lexicon file; the built-in lexicon is used when unset.
    pub lexicon_path: Option<PathBuf>,
    /// Base URL of the word-level tagger service.
    pub endpoint: Option<String>,
    pub lowercase: bool,
    pub retry_limit: u32,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        ExtractorConfig {
            backend: BackendKind::Lexicon,
            lexicon_path: None,
            endpoint: None,
            lowercase: true,
            retry_limit: 2,
        }
    }
}

/// Splits on every character that is not alphanumeric (whitespace and punctuation).
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Folds token tags into one emotion per feature kind.
pub fn aggregate<'a>(tags: impl IntoIterator<Item = &'a TokenTag>) -> FeatureVector {
    let mut counts = [[0usize; EMOTION_COUNT]; 4];
    for tag in tags {
        if let Some(kind) = tag.pos.kind() {
            if !tag.emotion.is_neutral() {
                counts[kind.index()][tag.emotion.index()] += 1;
            }
        }
    }
    let mut fv = FeatureVector::NEUTRAL;
    for kind in FeatureKind::ALL {
        let row = &counts[kind.index()];
        let best = (0..EMOTION_COUNT).filter(|&e| row[e] > 0).max_by(|&a, &b| row[a].cmp(&row[b]).then(b.cmp(&a)));
        if let Some(e) = best {
            fv.set(kind, EmotionLabel::ALL[e]);
        }
    }
    fv
}

enum TagSource {
    Lexicon(Arc<Lexicon>),
    Remote(Arc<dyn WordTagger>),
}

/// Tags and extracts sentences. Remote tag responses are cached per sentence.
pub struct Extractor {
    lowercase: bool,
    source: TagSource,
    cache: RwLock<HashMap<String, Arc<Vec<TokenTag>>>>,
}

impl fmt::Debug for Extractor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let backend = match self.source {
            TagSource::Lexicon(_) => "lexicon",
            TagSource::Remote(_) => "remote",
        };
        f.debug_struct("Extractor").field("backend", &backend).field("lowercase", &self.lowercase).finish()
    }
}

impl Extractor {
    pub fn with_lexicon(lexicon: Lexicon) -> Self {
        Self::from_source(TagSource::Lexicon(Arc::new(lexicon)), true)
    }

    pub fn with_tagger(tagger: Arc<dyn WordTagger>) -> Self {
        Self::from_source(TagSource::Remote(tagger), true)
    }

    pub fn lowercase(mut self, on: bool) -> Self {
        self.lowercase = on;
        self
    }

    fn from_source(source: TagSource, lowercase: bool) -> Self {
        Extractor { lowercase, source, cache: RwLock::new(HashMap::new()) }
    }

    /// Builds the backend named by `cfg`. A remote backend talks HTTP to `cfg.endpoint`.
    pub fn from_config(cfg: &ExtractorConfig) -> Result<Self, ExtractError> {
        let source = match cfg.backend {
            BackendKind::Lexicon => {
                let lex = match &cfg.lexicon_path {
                    Some(p) => Lexicon::load(p)?,
                    None => Lexicon::builtin(),
                };
                TagSource::Lexicon(Arc::new(lex))
            }
            BackendKind::Remote => {
                let endpoint = cfg
                    .endpoint
                    .clone()
                    .ok_or_else(|| ExtractError::Config("remote backend requires `endpoint`".into()))?;
                let client = HttpClient::new(cfg.retry_limit);
                TagSource::Remote(Arc::new(HttpWordTagger::new(client, endpoint)))
            }
        };
        Ok(Self::from_source(source, cfg.lowercase))
    }

    /// Like [`from_config`](Self::from_config) but routes a remote backend to `tagger`.
    pub fn from_config_with_tagger(cfg: &ExtractorConfig, tagger: Arc<dyn WordTagger>) -> Result<Self, ExtractError> {
        match cfg.backend {
            BackendKind::Lexicon => Self::from_config(cfg),
            BackendKind::Remote => Ok(Self::from_source(TagSource::Remote(tagger), cfg.lowercase)),
        }
    }

    pub fn tag_sentence(&self, text: &str) -> Result<Vec<TokenTag>, ExtractError> {
        Ok(self.tags(text)?.as_ref().clone())
    }

    fn tags(&self, text: &str) -> Result<Arc<Vec<TokenTag>>, ExtractError> {
        if text.trim().is_empty() {
            return Err(ExtractError::EmptyText);
        }
        if let Some(hit) = self.cache.read().expect("tag cache poisoned").get(text) {
            return Ok(Arc::clone(hit));
        }
        let tokens = tokenize(text);
        let keys: Vec<String> = tokens
            .iter()
            .map(|t| if self.lowercase { t.to_lowercase() } else { t.clone() })
            .collect();
        let tagged: Vec<WordTag> = match &self.source {
            TagSource::Lexicon(lex) => keys
                .iter()
                .map(|k| match lex.lookup(k) {
                    Some(e) => WordTag { pos: e.pos, emotion: e.emotion },
                    None => WordTag { pos: Pos::Other, emotion: EmotionLabel::Neutral },
                })
                .collect(),
            TagSource::Remote(_) if keys.is_empty() => Vec::new(),
            TagSource::Remote(tagger) => tagger.word_emotions(&keys).map_err(ExtractError::RemoteUnavailable)?,
        };
        if tagged.len() != tokens.len() {
            return Err(ExtractError::TagCountMismatch { want: tokens.len(), got: tagged.len() });
        }
        let tags: Arc<Vec<TokenTag>> = Arc::new(
            tokens
                .into_iter()
                .zip(tagged)
                .map(|(token, t)| TokenTag { token, pos: t.pos, emotion: t.emotion })
                .collect(),
        );
        self.cache
            .write()
            .expect("tag cache poisoned")
            .entry(text.to_string())
            .or_insert_with(|| Arc::clone(&tags));
        Ok(tags)
    }

    pub fn extract(&self, text: &str) -> Result<FeatureVector, ExtractError> {
        Ok(aggregate(self.tags(text)?.iter()))
    }

    /// Extracts many sentences with at most `max_inflight` concurrent tagger calls.
    pub fn extract_all<S: AsRef<str> + Sync>(&self, texts: &[S], max_inflight: usize) -> Result<Vec<FeatureVector>, ExtractError> {
        let limit = match self.source {
            TagSource::Lexicon(_) => 1,
            TagSource::Remote(_) => max_inflight,
        };
        crate::util::bounded_map(texts, limit, |t| self.extract(t.as_ref())).into_iter().collect()
    }

    pub fn cached_sentences(&self) -> usize {
        self.cache.read().expect("tag cache poisoned").len()
    }
}
