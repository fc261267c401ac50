//! Deterministic in-process model service.
//!
//! Every response is a pure function of the request and the seed:
//!
//! - classification: per model, either the lexicon reading of the sentence,
//!   a seeded hash of `(text, model)`, or the lexicon reading rotated to the
//!   next label when the sentence falls inside a configured fault region;
//! - word tags: lexicon lookup, `other/neutral` on a miss;
//! - generation: the `(part of speech, emotion)` constraints are parsed out of
//!   the prompt and a sentence is assembled from lexicon words satisfying them.

use super::{Classifier, Generator, WireError, WordTag, WordTagger};
use crate::coverage::ProjectionCell;
use crate::extractor::{aggregate, tokenize, Lexicon, Pos, TokenTag};
use crate::feature::{CorpusLabel, EmotionLabel, FeatureKind, FeatureVector};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::hash::Hasher;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

/// A region of the feature space where a faulty mock model mislabels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FaultRegion {
    /// At least two different non-neutral emotions across the four features.
    MixedEmotion,
    /// Vectors whose restriction matches the cell.
    Cell(ProjectionCell),
}

impl FaultRegion {
    pub fn contains(&self, fv: &FeatureVector) -> bool {
        match self {
            FaultRegion::MixedEmotion => {
                let mut seen: Option<EmotionLabel> = None;
                for v in fv.values().into_iter().filter(|v| !v.is_neutral()) {
                    match seen {
                        Some(s) if s != v => return true,
                        _ => seen = Some(v),
                    }
                }
                false
            }
            FaultRegion::Cell(cell) => cell.matches(fv),
        }
    }
}

impl fmt::Display for FaultRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FaultRegion::MixedEmotion => f.write_str("mixed-emotion"),
            FaultRegion::Cell(c) => write!(f, "{c}"),
        }
    }
}

impl FromStr for FaultRegion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "mixed-emotion" {
            return Ok(FaultRegion::MixedEmotion);
        }
        s.parse::<ProjectionCell>()
            .map(FaultRegion::Cell)
            .map_err(|e| format!("invalid fault region `{s}`: {e}"))
    }
}

impl Serialize for FaultRegion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FaultRegion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockModel {
    Lexicon,
    Hash,
    Faulty(FaultRegion),
}

/// Sentence label implied by the lexicon: plurality of the non-neutral
/// feature values (canonical tie-break); `love` when all four are neutral.
pub fn lexicon_label(fv: &FeatureVector) -> CorpusLabel {
    let mut counts = [0usize; 5];
    for v in fv.values().into_iter().filter(|v| !v.is_neutral()) {
        counts[v.index()] += 1;
    }
    let best = (0..5).filter(|&i| counts[i] > 0).max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a)));
    match best {
        Some(i) => CorpusLabel::ALL[i],
        None => CorpusLabel::Love,
    }
}

fn stable_hash(seed: u64, parts: &[&[u8]]) -> u64 {
    let mut h = fnv::FnvHasher::default();
    h.write(&seed.to_le_bytes());
    for p in parts {
        h.write(p);
        h.write(&[0xff]);
    }
    h.finish()
}

const FILLER_SUBJECT: &str = "Someone";
const FILLER_VERB: &str = "stood";
const FILLER_NOUN: &str = "place";

/// Constraint parsed from a generation prompt: `Some(e)` requires emotion `e`,
/// `None` requires the part of speech to carry no emotion.
pub type PromptConstraints = BTreeMap<FeatureKind, Option<EmotionLabel>>;

/// Reads the canonical constraint clauses out of a prompt.
pub fn parse_prompt(prompt: &str) -> PromptConstraints {
    static WITH: OnceLock<Regex> = OnceLock::new();
    static WITHOUT: OnceLock<Regex> = OnceLock::new();
    let with = WITH.get_or_init(|| {
        Regex::new(r"\ban? (verb|adjective|adverb|noun) labeled as (joy|anger|sadness|fear|surprise|neutral)\b").unwrap()
    });
    let without = WITHOUT
        .get_or_init(|| Regex::new(r"\bwithout any emotionally charged (verb|adjective|adverb|noun)\b").unwrap());
    let mut out = PromptConstraints::new();
    for c in with.captures_iter(prompt) {
        let kind: FeatureKind = c[1].parse().expect("regex admits only kinds");
        let emotion: EmotionLabel = c[2].parse().expect("regex admits only emotions");
        out.insert(kind, (!emotion.is_neutral()).then_some(emotion));
    }
    for c in without.captures_iter(prompt) {
        out.insert(c[1].parse().expect("regex admits only kinds"), None);
    }
    out
}

#[derive(Debug, Clone)]
pub struct MockBackend {
    lexicon: Arc<Lexicon>,
    seed: u64,
    models: BTreeMap<String, MockModel>,
}

impl MockBackend {
    pub fn new(lexicon: Lexicon, seed: u64) -> Self {
        MockBackend { lexicon: Arc::new(lexicon), seed, models: BTreeMap::new() }
    }

    pub fn builtin(seed: u64) -> Self {
        Self::new(Lexicon::builtin(), seed)
    }

    /// Registers `name`; unregistered names behave as [`MockModel::Lexicon`].
    pub fn with_model(mut self, name: impl Into<String>, model: MockModel) -> Self {
        self.models.insert(name.into(), model);
        self
    }

    pub fn model_names(&self) -> Vec<String> {
        self.models.keys().cloned().collect()
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    fn tag(&self, token: &str) -> WordTag {
        match self.lexicon.lookup(&token.to_lowercase()) {
            Some(e) => WordTag { pos: e.pos, emotion: e.emotion },
            None => WordTag { pos: Pos::Other, emotion: EmotionLabel::Neutral },
        }
    }

    fn features(&self, text: &str) -> FeatureVector {
        let tags: Vec<TokenTag> = tokenize(text)
            .into_iter()
            .map(|token| {
                let t = self.tag(&token);
                TokenTag { token, pos: t.pos, emotion: t.emotion }
            })
            .collect();
        aggregate(&tags)
    }

    pub fn classify_one(&self, model: &str, text: &str) -> CorpusLabel {
        match self.models.get(model).unwrap_or(&MockModel::Lexicon) {
            MockModel::Lexicon => lexicon_label(&self.features(text)),
            MockModel::Hash => {
                let h = stable_hash(self.seed, &[model.as_bytes(), text.as_bytes()]);
                CorpusLabel::ALL[(h % CorpusLabel::ALL.len() as u64) as usize]
            }
            MockModel::Faulty(region) => {
                let fv = self.features(text);
                let label = lexicon_label(&fv);
                if region.contains(&fv) {
                    label.rotate()
                } else {
                    label
                }
            }
        }
    }

    fn pick<'a>(&'a self, prompt: &str, kind: FeatureKind, emotion: EmotionLabel) -> Option<&'a str> {
        let words = self.lexicon.words_for(kind, emotion);
        if words.is_empty() {
            return None;
        }
        let h = stable_hash(self.seed, &[prompt.as_bytes(), kind.name().as_bytes()]);
        Some(words[(h % words.len() as u64) as usize])
    }

    /// Builds `Someone <verb> [<adverb>] [near the [<adjective>] <noun>].`
    pub fn compose(&self, prompt: &str, constraints: &PromptConstraints) -> String {
        let word = |kind| constraints.get(&kind).copied().flatten().and_then(|e| self.pick(prompt, kind, e));
        let mut out = vec![FILLER_SUBJECT, word(FeatureKind::Verb).unwrap_or(FILLER_VERB)];
        out.extend(word(FeatureKind::Adverb));
        let adjective = word(FeatureKind::Adjective);
        let noun = word(FeatureKind::Noun);
        if adjective.is_some() || noun.is_some() {
            out.extend(["near", "the"]);
            out.extend(adjective);
            out.push(noun.unwrap_or(FILLER_NOUN));
        }
        format!("{}.", out.join(" "))
    }
}

impl Classifier for MockBackend {
    fn classify(&self, _endpoint: &str, model: &str, texts: &[String]) -> Result<Vec<CorpusLabel>, WireError> {
        Ok(texts.iter().map(|t| self.classify_one(model, t)).collect())
    }
}

impl WordTagger for MockBackend {
    fn word_emotions(&self, tokens: &[String]) -> Result<Vec<WordTag>, WireError> {
        Ok(tokens.iter().map(|t| self.tag(t)).collect())
    }
}

impl Generator for MockBackend {
    fn generate(&self, prompt: &str) -> Result<String, WireError> {
        let rejected = |body: &str| WireError::Rejected { endpoint: "mock".into(), status: 400, body: body.into() };
        if prompt.trim().is_empty() {
            return Err(rejected("empty prompt"));
        }
        let constraints = parse_prompt(prompt);
        if constraints.is_empty() {
            return Err(rejected("prompt names no part-of-speech constraint"));
        }
        Ok(self.compose(prompt, &constraints))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extractor::Extractor;
    use EmotionLabel::*;

    #[test]
    fn filler_words_are_not_in_the_lexicon() {
        let lex = Lexicon::builtin();
        for w in [FILLER_SUBJECT, FILLER_VERB, FILLER_NOUN, "near", "the"] {
            assert!(lex.lookup(&w.to_lowercase()).is_none(), "{w}");
        }
    }

    #[test]
    fn parses_canonical_prompt() {
        let c = parse_prompt("Generate a sentence with a verb labeled as sadness and an adverb labeled as joy");
        assert_eq!(c.len(), 2);
        assert_eq!(c[&FeatureKind::Verb], Some(Sadness));
        assert_eq!(c[&FeatureKind::Adverb], Some(Joy));
        let c = parse_prompt("Generate a sentence with an adjective labeled as anger and without any emotionally charged verb");
        assert_eq!(c[&FeatureKind::Adjective], Some(Anger));
        assert_eq!(c[&FeatureKind::Verb], None);
    }

    #[test]
    fn generated_sentence_satisfies_constraints() {
        let mock = MockBackend::builtin(7);
        let extractor = Extractor::with_lexicon(Lexicon::builtin());
        let text = mock
            .generate("Generate a sentence with a verb labeled as sadness and an adverb labeled as joy")
            .unwrap();
        let fv = extractor.extract(&text).unwrap();
        assert_eq!((fv.verb, fv.adverb), (Sadness, Joy));
        assert_eq!((fv.adjective, fv.noun), (Neutral, Neutral));
    }

    #[test]
    fn generation_is_deterministic_and_prompt_sensitive() {
        let a = MockBackend::builtin(1);
        let p = "Generate a sentence with a noun labeled as fear";
        assert_eq!(a.generate(p).unwrap(), a.generate(p).unwrap());
        let variants: std::collections::HashSet<_> =
            (1..=8).map(|i| a.generate(&format!("{p} (Attempt {i})")).unwrap()).collect();
        assert!(variants.len() > 1);
    }

    #[test]
    fn malformed_prompts_are_rejected() {
        let m = MockBackend::builtin(0);
        assert!(matches!(m.generate(""), Err(WireError::Rejected { status: 400, .. })));
        assert!(matches!(m.generate("write a poem"), Err(WireError::Rejected { status: 400, .. })));
    }

    #[test]
    fn word_tags_follow_lexicon() {
        let m = MockBackend::builtin(0);
        let tags = m.word_emotions(&["laughed".into(), "nervously".into(), "zzz".into()]).unwrap();
        assert_eq!(tags[0], WordTag { pos: Pos::Verb, emotion: Joy });
        assert_eq!(tags[1], WordTag { pos: Pos::Adverb, emotion: Fear });
        assert_eq!(tags[2], WordTag { pos: Pos::Other, emotion: Neutral });
    }

    #[test]
    fn classifier_behaviours() {
        let m = MockBackend::builtin(3)
            .with_model("h", MockModel::Hash)
            .with_model("sut", MockModel::Faulty(FaultRegion::MixedEmotion));
        assert_eq!(m.classify_one("any", "She laughed happily"), CorpusLabel::Joy);
        assert_eq!(m.classify_one("any", "nothing here"), CorpusLabel::Love);
        assert_eq!(m.classify_one("sut", "She laughed happily"), CorpusLabel::Joy);
        // joy verb and sadness adverb tie; joy wins canonically, the faulty model rotates it
        assert_eq!(m.classify_one("any", "She laughed sadly"), CorpusLabel::Joy);
        assert_eq!(m.classify_one("sut", "She laughed sadly"), CorpusLabel::Anger);
        assert_eq!(m.classify_one("h", "a"), m.classify_one("h", "a"));
    }

    #[test]
    fn fault_regions() {
        assert!(FaultRegion::MixedEmotion.contains(&FeatureVector::new(Joy, Neutral, Fear, Neutral)));
        assert!(!FaultRegion::MixedEmotion.contains(&FeatureVector::new(Joy, Neutral, Joy, Neutral)));
        assert!(!FaultRegion::MixedEmotion.contains(&FeatureVector::NEUTRAL));
        let r: FaultRegion = "verb=sadness,adv=joy".parse().unwrap();
        assert!(r.contains(&FeatureVector::new(Sadness, Fear, Joy, Anger)));
        assert_eq!(r.to_string(), "verb=sadness,adv=joy");
        assert!("nonsense".parse::<FaultRegion>().is_err());
    }

    #[test]
    fn lexicon_label_tie_break() {
        assert_eq!(lexicon_label(&FeatureVector::new(Fear, Surprise, Surprise, Neutral)), CorpusLabel::Surprise);
        assert_eq!(lexicon_label(&FeatureVector::new(Fear, Anger, Neutral, Neutral)), CorpusLabel::Anger);
    }
}
