//! Labels sentences by accuracy-weighted voting over an ensemble of classifiers.
//!
//! Each model's hard label earns that model's accuracy as a vote; the label
//! with the highest total wins, ties going to the earliest label in canonical
//! order. A verdict is only produced when every model answered.

use crate::feature::CorpusLabel;
use crate::rational::{self, Rational};
use crate::wire::{Classifier, WireError};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};

/// Ensemble members and their accuracies on the reference dataset.
pub const DEFAULT_ENSEMBLE: [(&str, &str); 6] = [
    ("roberta-base-emotion", "0.931"),
    ("bert-base-uncased-emotion", "0.926"),
    ("bertweet-base-finetuned-emotion", "0.929"),
    ("xtremedistil-emotion", "0.926"),
    ("bertweet-emotion-base", "0.928"),
    ("sagemaker-roberta-base-emotion", "0.931"),
];

#[derive(Debug, thiserror::Error)]
pub enum ArbiterError {
    #[error("model `{model}` unavailable: {source}")]
    EnsembleUnavailable {
        model: String,
        #[source]
        source: WireError,
    },
    #[error("invalid ensemble: {0}")]
    InvalidEnsemble(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelProfile {
    pub name: String,
    pub endpoint: String,
    #[serde(serialize_with = "rational::serialize", deserialize_with = "rational::deserialize_lenient")]
    pub accuracy: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "EnsembleFile", into = "EnsembleFile")]
pub struct Ensemble {
    models: Vec<ModelProfile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EnsembleFile {
    model: Vec<ModelProfile>,
}

impl TryFrom<EnsembleFile> for Ensemble {
    type Error = ArbiterError;

    fn try_from(f: EnsembleFile) -> Result<Self, Self::Error> {
        Ensemble::new(f.model)
    }
}

impl From<Ensemble> for EnsembleFile {
    fn from(e: Ensemble) -> Self {
        EnsembleFile { model: e.models }
    }
}

impl Ensemble {
    pub fn new(models: Vec<ModelProfile>) -> Result<Self, ArbiterError> {
        if models.is_empty() {
            return Err(ArbiterError::InvalidEnsemble("no models".into()));
        }
        let mut names = HashSet::new();
        for m in &models {
            if !names.insert(m.name.as_str()) {
                return Err(ArbiterError::InvalidEnsemble(format!("duplicate model `{}`", m.name)));
            }
            if m.accuracy <= Rational::zero() || m.accuracy > Rational::one() {
                return Err(ArbiterError::InvalidEnsemble(format!(
                    "accuracy of `{}` must be in (0, 1], got {}",
                    m.name,
                    rational::display(&m.accuracy)
                )));
            }
        }
        Ok(Ensemble { models })
    }

    /// The six reference models, all served from `endpoint`.
    pub fn reference(endpoint: &str) -> Self {
        let models = DEFAULT_ENSEMBLE
            .iter()
            .map(|(name, acc)| ModelProfile {
                name: name.to_string(),
                endpoint: endpoint.to_string(),
                accuracy: rational::parse(acc).expect("static accuracies parse"),
            })
            .collect();
        Ensemble::new(models).expect("reference ensemble is valid")
    }

    /// Reads a TOML document of `[[model]]` tables.
    pub fn from_toml(text: &str) -> Result<Self, ArbiterError> {
        toml::from_str(text).map_err(|e| ArbiterError::InvalidEnsemble(e.message().to_string()))
    }

    pub fn models(&self) -> &[ModelProfile] {
        &self.models
    }

    pub fn with_endpoint(mut self, endpoint: &str) -> Self {
        for m in &mut self.models {
            m.endpoint = endpoint.to_string();
        }
        self
    }
}

mod score_map {
    use super::*;
    use serde::ser::SerializeMap;

    pub fn serialize<S: serde::Serializer>(m: &BTreeMap<CorpusLabel, Rational>, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(m.len()))?;
        for (k, v) in m {
            map.serialize_entry(k, &rational::display(v))?;
        }
        map.end()
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<BTreeMap<CorpusLabel, Rational>, D::Error> {
        let raw = BTreeMap::<CorpusLabel, String>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| rational::parse(&v).map(|r| (k, r)).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArbiterVerdict {
    pub sentence_id: String,
    pub per_model: BTreeMap<String, CorpusLabel>,
    #[serde(with = "score_map")]
    pub scores: BTreeMap<CorpusLabel, Rational>,
    pub label: CorpusLabel,
    #[serde(with = "rational")]
    pub margin: Rational,
}

/// Weighted totals, winner and winning margin for `(label, weight)` votes.
///
/// Labels without votes are absent from the score map and count as zero
/// when computing the margin. Returns `None` for an empty vote list.
pub fn tally(votes: &[(CorpusLabel, Rational)]) -> Option<(BTreeMap<CorpusLabel, Rational>, CorpusLabel, Rational)> {
    if votes.is_empty() {
        return None;
    }
    let mut scores: BTreeMap<CorpusLabel, Rational> = BTreeMap::new();
    for (label, weight) in votes {
        *scores.entry(*label).or_insert_with(Rational::zero) += weight;
    }
    let mut ranked: Vec<(CorpusLabel, &Rational)> = scores.iter().map(|(l, s)| (*l, s)).collect();
    // highest score first; equal scores keep canonical label order
    ranked.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(&b.0)));
    let label = ranked[0].0;
    let runner_up = ranked.get(1).map(|r| r.1.clone()).unwrap_or_else(Rational::zero);
    let margin = ranked[0].1 - runner_up;
    Some((scores, label, margin))
}

/// Builds a verdict from every model's prediction.
pub fn verdict(sentence_id: &str, ensemble: &Ensemble, predictions: &[CorpusLabel]) -> ArbiterVerdict {
    assert_eq!(predictions.len(), ensemble.models.len(), "one prediction per model");
    let votes: Vec<(CorpusLabel, Rational)> =
        ensemble.models.iter().zip(predictions).map(|(m, l)| (*l, m.accuracy.clone())).collect();
    let (scores, label, margin) = tally(&votes).expect("ensembles are non-empty");
    ArbiterVerdict {
        sentence_id: sentence_id.to_string(),
        per_model: ensemble.models.iter().zip(predictions).map(|(m, l)| (m.name.clone(), *l)).collect(),
        scores,
        label,
        margin,
    }
}

pub struct Arbiter<'a> {
    ensemble: &'a Ensemble,
    classifier: &'a dyn Classifier,
    max_inflight: usize,
}

impl<'a> Arbiter<'a> {
    pub fn new(ensemble: &'a Ensemble, classifier: &'a dyn Classifier, max_inflight: usize) -> Self {
        Arbiter { ensemble, classifier, max_inflight: max_inflight.max(1) }
    }

    pub fn arbitrate(&self, sentence_id: &str, text: &str) -> Result<ArbiterVerdict, ArbiterError> {
        let mut out = self.arbitrate_batch(&[(sentence_id.to_string(), text.to_string())])?;
        Ok(out.remove(0))
    }

    /// One request per model covering all texts; models are queried concurrently.
    pub fn arbitrate_batch(&self, items: &[(String, String)]) -> Result<Vec<ArbiterVerdict>, ArbiterError> {
        if items.is_empty() {
            return Ok(Vec::new());
        }
        let texts: Vec<String> = items.iter().map(|(_, t)| t.clone()).collect();
        let per_model = crate::util::bounded_map(self.ensemble.models(), self.max_inflight, |m| {
            self.classifier
                .classify(&m.endpoint, &m.name, &texts)
                .map_err(|source| ArbiterError::EnsembleUnavailable { model: m.name.clone(), source })
        });
        let per_model: Vec<Vec<CorpusLabel>> = per_model.into_iter().collect::<Result<_, _>>()?;
        Ok(items
            .iter()
            .enumerate()
            .map(|(i, (id, _))| {
                let predictions: Vec<CorpusLabel> = per_model.iter().map(|labels| labels[i]).collect();
                verdict(id, self.ensemble, &predictions)
            })
            .collect())
    }
}
