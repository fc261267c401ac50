//! The emotional feature space: four parts of speech, six emotion values each.
//!
//! Every sentence maps to a [`FeatureVector`]; sentences with equal vectors
//! share an input partition. The canonical orderings defined here drive cell
//! indices, tie-breaks and serialization everywhere else in the crate.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

/// Number of features in the space.
pub const FEATURE_COUNT: usize = 4;
/// Number of values each feature can take.
pub const EMOTION_COUNT: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FeatureError {
    #[error("unknown emotion label `{0}`")]
    UnknownEmotion(String),
    #[error("unknown corpus label `{0}`")]
    UnknownCorpusLabel(String),
    #[error("unknown feature kind `{0}`")]
    UnknownKind(String),
    #[error("malformed feature text `{0}`")]
    Malformed(String),
    #[error("sentence text is empty")]
    EmptyText,
    #[error("duplicate sentence id `{0}`")]
    DuplicateId(String),
}

/// Emotion values of a feature. Declaration order is the canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionLabel {
    Joy,
    Anger,
    Sadness,
    Fear,
    Surprise,
    Neutral,
}

impl EmotionLabel {
    pub const ALL: [EmotionLabel; EMOTION_COUNT] = [
        EmotionLabel::Joy,
        EmotionLabel::Anger,
        EmotionLabel::Sadness,
        EmotionLabel::Fear,
        EmotionLabel::Surprise,
        EmotionLabel::Neutral,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EmotionLabel::Joy => "joy",
            EmotionLabel::Anger => "anger",
            EmotionLabel::Sadness => "sadness",
            EmotionLabel::Fear => "fear",
            EmotionLabel::Surprise => "surprise",
            EmotionLabel::Neutral => "neutral",
        }
    }

    pub fn is_neutral(self) -> bool {
        self == EmotionLabel::Neutral
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EmotionLabel {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| FeatureError::UnknownEmotion(s.to_string()))
    }
}

/// Gold labels of the emotion corpus. This is a separate axis from
/// [`EmotionLabel`]: the corpus has `love` and no `neutral`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusLabel {
    Joy,
    Anger,
    Sadness,
    Fear,
    Surprise,
    Love,
}

impl CorpusLabel {
    pub const ALL: [CorpusLabel; 6] = [
        CorpusLabel::Joy,
        CorpusLabel::Anger,
        CorpusLabel::Sadness,
        CorpusLabel::Fear,
        CorpusLabel::Surprise,
        CorpusLabel::Love,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CorpusLabel::Joy => "joy",
            CorpusLabel::Anger => "anger",
            CorpusLabel::Sadness => "sadness",
            CorpusLabel::Fear => "fear",
            CorpusLabel::Surprise => "surprise",
            CorpusLabel::Love => "love",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// The next label in canonical order, wrapping around.
    pub fn rotate(self) -> Self {
        Self::ALL[(self.index() + 1) % Self::ALL.len()]
    }
}

impl fmt::Display for CorpusLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorpusLabel {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| FeatureError::UnknownCorpusLabel(s.to_string()))
    }
}

/// Parts of speech that carry a feature. Declaration order is canonical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Verb,
    Adjective,
    Adverb,
    Noun,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; FEATURE_COUNT] = [
        FeatureKind::Verb,
        FeatureKind::Adjective,
        FeatureKind::Adverb,
        FeatureKind::Noun,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// Full name, as used in prompts and lexicon files.
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Verb => "verb",
            FeatureKind::Adjective => "adjective",
            FeatureKind::Adverb => "adverb",
            FeatureKind::Noun => "noun",
        }
    }

    /// Short key used in the canonical vector text.
    pub fn key(self) -> &'static str {
        match self {
            FeatureKind::Verb => "verb",
            FeatureKind::Adjective => "adj",
            FeatureKind::Adverb => "adv",
            FeatureKind::Noun => "noun",
        }
    }

    fn from_key(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|k| k.key() == s || k.name() == s)
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_key(s).ok_or_else(|| FeatureError::UnknownKind(s.to_string()))
    }
}

/// Emotion values of one sentence's verb, adjective, adverb and noun.
/// A part of speech that is absent is `Neutral`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureVector {
    pub verb: EmotionLabel,
    pub adjective: EmotionLabel,
    pub adverb: EmotionLabel,
    pub noun: EmotionLabel,
}

/// Canonical partition key: the four values in [`FeatureKind`] order.
pub type PartitionKey = [EmotionLabel; FEATURE_COUNT];

impl FeatureVector {
    pub const NEUTRAL: FeatureVector = FeatureVector::uniform(EmotionLabel::Neutral);

    pub const fn new(
        verb: EmotionLabel,
        adjective: EmotionLabel,
        adverb: EmotionLabel,
        noun: EmotionLabel,
    ) -> Self {
        FeatureVector { verb, adjective, adverb, noun }
    }

    pub const fn uniform(e: EmotionLabel) -> Self {
        Self::new(e, e, e, e)
    }

    pub fn from_values(v: PartitionKey) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }

    pub fn get(&self, kind: FeatureKind) -> EmotionLabel {
        match kind {
            FeatureKind::Verb => self.verb,
            FeatureKind::Adjective => self.adjective,
            FeatureKind::Adverb => self.adverb,
            FeatureKind::Noun => self.noun,
        }
    }

    pub fn set(&mut self, kind: FeatureKind, value: EmotionLabel) {
        match kind {
            FeatureKind::Verb => self.verb = value,
            FeatureKind::Adjective => self.adjective = value,
            FeatureKind::Adverb => self.adverb = value,
            FeatureKind::Noun => self.noun = value,
        }
    }

    pub fn values(&self) -> PartitionKey {
        [self.verb, self.adjective, self.adverb, self.noun]
    }

    /// Value indices in canonical kind order, as used by the coverage engine.
    pub fn indices(&self) -> [u8; FEATURE_COUNT] {
        self.values().map(|e| e.index() as u8)
    }

    /// Enumerates all `6^4` vectors in lexicographic order.
    pub fn all() -> impl Iterator<Item = FeatureVector> {
        (0..EMOTION_COUNT.pow(FEATURE_COUNT as u32)).map(|mut i| {
            let mut v = [EmotionLabel::Neutral; FEATURE_COUNT];
            for slot in v.iter_mut().rev() {
                *slot = EmotionLabel::ALL[i % EMOTION_COUNT];
                i /= EMOTION_COUNT;
            }
            FeatureVector::from_values(v)
        })
    }
}

/// Renders as `verb=<label>,adj=<label>,adv=<label>,noun=<label>`.
impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_assignments(f, FeatureKind::ALL.iter().map(|&k| (k, self.get(k))))
    }
}

impl FromStr for FeatureVector {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let pairs = parse_assignments(s)?;
        if pairs.len() != FEATURE_COUNT || pairs.iter().map(|p| p.0).ne(FeatureKind::ALL) {
            return Err(FeatureError::Malformed(s.to_string()));
        }
        Ok(FeatureVector::from_values([pairs[0].1, pairs[1].1, pairs[2].1, pairs[3].1]))
    }
}

impl Serialize for FeatureVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FeatureVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

pub(crate) fn write_assignments(
    f: &mut fmt::Formatter<'_>,
    pairs: impl Iterator<Item = (FeatureKind, EmotionLabel)>,
) -> fmt::Result {
    for (i, (kind, value)) in pairs.enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{}={}", kind.key(), value)?;
    }
    Ok(())
}

/// Parses `key=value,key=value` pairs; keys must be strictly ascending.
pub(crate) fn parse_assignments(s: &str) -> Result<Vec<(FeatureKind, EmotionLabel)>, FeatureError> {
    let malformed = || FeatureError::Malformed(s.to_string());
    let mut out: Vec<(FeatureKind, EmotionLabel)> = Vec::new();
    for part in s.split(',') {
        let (k, v) = part.split_once('=').ok_or_else(malformed)?;
        let kind = FeatureKind::from_key(k.trim()).ok_or_else(malformed)?;
        let value: EmotionLabel = v.trim().parse()?;
        if out.last().is_some_and(|(prev, _)| *prev >= kind) {
            return Err(malformed());
        }
        out.push((kind, value));
    }
    Ok(out)
}

pub fn partition_key(fv: &FeatureVector) -> PartitionKey {
    fv.values()
}

/// Groups item indices by partition key. Classes are disjoint and cover all items.
pub fn partition(vectors: &[FeatureVector]) -> BTreeMap<PartitionKey, Vec<usize>> {
    let mut classes: BTreeMap<PartitionKey, Vec<usize>> = BTreeMap::new();
    for (i, fv) in vectors.iter().enumerate() {
        classes.entry(partition_key(fv)).or_default().push(i);
    }
    classes
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Corpus,
    Generated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: String,
    pub text: String,
    pub gold_label: Option<CorpusLabel>,
    pub origin: Origin,
}

impl Sentence {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        gold_label: Option<CorpusLabel>,
        origin: Origin,
    ) -> Result<Self, FeatureError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(FeatureError::EmptyText);
        }
        Ok(Sentence { id: id.into(), text, gold_label, origin })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TestSuite {
    pub name: String,
    sentences: Vec<Sentence>,
}

impl TestSuite {
    pub fn new(name: impl Into<String>, sentences: Vec<Sentence>) -> Result<Self, FeatureError> {
        let mut seen = HashSet::new();
        for s in &sentences {
            if !seen.insert(s.id.as_str()) {
                return Err(FeatureError::DuplicateId(s.id.clone()));
            }
        }
        Ok(TestSuite { name: name.into(), sentences })
    }

    pub fn empty(name: impl Into<String>) -> Self {
        TestSuite { name: name.into(), sentences: Vec::new() }
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn contains_id(&self, id: &str) -> bool {
        self.sentences.iter().any(|s| s.id == id)
    }

    pub fn push(&mut self, sentence: Sentence) -> Result<(), FeatureError> {
        if self.contains_id(&sentence.id) {
            return Err(FeatureError::DuplicateId(sentence.id));
        }
        self.sentences.push(sentence);
        Ok(())
    }

    pub fn set_gold_label(&mut self, id: &str, label: CorpusLabel) -> bool {
        match self.sentences.iter_mut().find(|s| s.id == id) {
            Some(s) => {
                s.gold_label = Some(label);
                true
            }
            None => false,
        }
    }

    pub fn into_sentences(self) -> Vec<Sentence> {
        self.sentences
    }
}
