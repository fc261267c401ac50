//! The end-to-end experiment: split a corpus into subsets, then for each
//! subset measure coverage and SUT accuracy, augment, label the new
//! sentences by ensemble vote, and measure again.

use crate::arbiter::{Arbiter, ArbiterError, ArbiterVerdict, Ensemble};
use crate::augmentor::{fill_gaps, AugmentError, AugmentorConfig, GenerationAttempt};
use crate::coverage::{CoverageConfig, CoverageError, CoverageState};
use crate::extractor::{ExtractError, Extractor};
use crate::feature::{CorpusLabel, Origin, TestSuite};
use crate::rational::{self, Rational};
use crate::wire::{Classifier, Generator, WireError};
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

/// Texts per classification request.
const SUT_BATCH: usize = 64;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("system under test `{sut}` unavailable: {source}")]
    SutUnavailable {
        sut: String,
        #[source]
        source: WireError,
    },
    #[error("sentence `{0}` has no gold label")]
    MissingLabel(String),
    #[error("cannot measure accuracy of an empty suite")]
    EmptySuite,
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Augment(#[from] AugmentError),
    #[error(transparent)]
    Arbiter(#[from] ArbiterError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
}

impl HarnessError {
    /// True for failures of a remote service rather than of the input data.
    pub fn is_endpoint_failure(&self) -> bool {
        matches!(
            self,
            HarnessError::SutUnavailable { .. }
                | HarnessError::Arbiter(ArbiterError::EnsembleUnavailable { .. })
                | HarnessError::Augment(AugmentError::LlmUnavailable(_))
                | HarnessError::Augment(AugmentError::Extract(ExtractError::RemoteUnavailable(_)))
                | HarnessError::Extract(ExtractError::RemoteUnavailable(_))
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SutProfile {
    pub name: String,
    pub endpoint: String,
}

/// Consecutive chunks of `size` sentences; the last may be shorter.
///
/// # Panics
/// If `size` is zero.
pub fn chunk(suite: &TestSuite, size: usize) -> Vec<TestSuite> {
    assert!(size >= 1, "chunk size must be at least 1");
    suite
        .sentences()
        .chunks(size)
        .enumerate()
        .map(|(i, part)| TestSuite::new(format!("{}[{i}]", suite.name), part.to_vec()).expect("chunk of a valid suite"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub correct: usize,
    pub total: usize,
    /// `(sentence id, gold, predicted)` in suite order.
    pub predictions: Vec<(String, CorpusLabel, CorpusLabel)>,
}

impl Evaluation {
    pub fn accuracy(&self) -> Rational {
        rational::ratio(self.correct as i64, self.total as i64)
    }
}

/// Fraction of sentences whose SUT prediction equals the gold label.
pub fn evaluate_accuracy(
    suite: &TestSuite,
    sut: &SutProfile,
    classifier: &dyn Classifier,
    max_inflight: usize,
) -> Result<Evaluation, HarnessError> {
    if suite.is_empty() {
        return Err(HarnessError::EmptySuite);
    }
    let gold: Vec<CorpusLabel> = suite
        .sentences()
        .iter()
        .map(|s| s.gold_label.ok_or_else(|| HarnessError::MissingLabel(s.id.clone())))
        .collect::<Result<_, _>>()?;
    let texts: Vec<String> = suite.sentences().iter().map(|s| s.text.clone()).collect();
    let batches: Vec<&[String]> = texts.chunks(SUT_BATCH).collect();
    let replies = crate::util::bounded_map(&batches, max_inflight, |batch| {
        classifier.classify(&sut.endpoint, &sut.name, batch)
    });
    let mut predicted = Vec::with_capacity(texts.len());
    for reply in replies {
        predicted.extend(reply.map_err(|source| HarnessError::SutUnavailable { sut: sut.name.clone(), source })?);
    }
    let predictions: Vec<(String, CorpusLabel, CorpusLabel)> = suite
        .sentences()
        .iter()
        .zip(gold)
        .zip(predicted)
        .map(|((s, g), p)| (s.id.clone(), g, p))
        .collect();
    let correct = predictions.iter().filter(|(_, g, p)| g == p).count();
    Ok(Evaluation { correct, total: predictions.len(), predictions })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetResult {
    pub subset_index: usize,
    pub size_before: usize,
    pub size_after: usize,
    #[serde(with = "rational")]
    pub cov_before: Rational,
    #[serde(with = "rational")]
    pub cov_after: Rational,
    #[serde(with = "rational")]
    pub acc_before: Rational,
    #[serde(with = "rational")]
    pub acc_after: Rational,
    pub generated_count: usize,
}

impl SubsetResult {
    pub fn cov_delta(&self) -> Rational {
        &self.cov_after - &self.cov_before
    }

    pub fn acc_delta(&self) -> Rational {
        &self.acc_after - &self.acc_before
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedSubset {
    pub subset_index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub k: usize,
    pub chunk_size: usize,
    pub subsets: Vec<SubsetResult>,
    pub skipped: Vec<SkippedSubset>,
    /// Mean over completed subsets; zero when none completed.
    #[serde(with = "rational")]
    pub mean_cov_delta: Rational,
    #[serde(with = "rational")]
    pub mean_acc_delta: Rational,
}

/// Means of per-subset deltas, recomputed from the rows.
pub fn mean_deltas(subsets: &[SubsetResult]) -> (Rational, Rational) {
    if subsets.is_empty() {
        return (Rational::zero(), Rational::zero());
    }
    let n = rational::from_int(subsets.len() as i64);
    let cov: Rational = subsets.iter().map(SubsetResult::cov_delta).sum();
    let acc: Rational = subsets.iter().map(SubsetResult::acc_delta).sum();
    (cov / &n, acc / &n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Before,
    After,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub subset_index: usize,
    pub phase: Phase,
    pub sentence_id: String,
    pub origin: Origin,
    pub gold: CorpusLabel,
    pub predicted: CorpusLabel,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptRecord {
    pub subset_index: usize,
    #[serde(flatten)]
    pub attempt: GenerationAttempt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictRecord {
    pub subset_index: usize,
    #[serde(flatten)]
    pub verdict: ArbiterVerdict,
}

/// Everything an experiment produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub attempts: Vec<AttemptRecord>,
    pub verdicts: Vec<VerdictRecord>,
    pub predictions: Vec<PredictionRecord>,
}

/// Services and settings shared by all subsets.
pub struct Pipeline<'a> {
    pub extractor: &'a Extractor,
    pub generator: &'a dyn Generator,
    pub classifier: &'a dyn Classifier,
    pub ensemble: &'a Ensemble,
    pub sut: &'a SutProfile,
    pub augmentor: &'a AugmentorConfig,
    pub max_inflight: usize,
}

struct SubsetOutput {
    result: SubsetResult,
    attempts: Vec<GenerationAttempt>,
    verdicts: Vec<ArbiterVerdict>,
    predictions: Vec<PredictionRecord>,
}

fn prediction_records(
    subset_index: usize,
    phase: Phase,
    suite: &TestSuite,
    eval: &Evaluation,
) -> Vec<PredictionRecord> {
    suite
        .sentences()
        .iter()
        .zip(&eval.predictions)
        .map(|(s, (id, gold, predicted))| PredictionRecord {
            subset_index,
            phase,
            sentence_id: id.clone(),
            origin: s.origin,
            gold: *gold,
            predicted: *predicted,
            correct: gold == predicted,
        })
        .collect()
}

fn run_subset(index: usize, subset: &TestSuite, cfg: CoverageConfig, p: &Pipeline<'_>) -> Result<SubsetOutput, HarnessError> {
    let texts: Vec<&str> = subset.sentences().iter().map(|s| s.text.as_str()).collect();
    let vectors = p.extractor.extract_all(&texts, p.max_inflight)?;
    let mut state = CoverageState::new(cfg);
    for fv in &vectors {
        state.try_add_vector(fv)?;
    }
    let cov_before = state.report().cov();
    let before = evaluate_accuracy(subset, p.sut, p.classifier, p.max_inflight)?;

    let aug = fill_gaps(subset, &state, p.augmentor, p.extractor, p.generator, p.max_inflight)?;
    let generated: Vec<(String, String)> = aug
        .suite
        .sentences()
        .iter()
        .filter(|s| s.origin == Origin::Generated)
        .map(|s| (s.id.clone(), s.text.clone()))
        .collect();
    let verdicts = Arbiter::new(p.ensemble, p.classifier, p.max_inflight).arbitrate_batch(&generated)?;
    let mut augmented = aug.suite;
    for v in &verdicts {
        augmented.set_gold_label(&v.sentence_id, v.label);
    }
    let cov_after = aug.state.report().cov();
    let after = evaluate_accuracy(&augmented, p.sut, p.classifier, p.max_inflight)?;

    let mut predictions = prediction_records(index, Phase::Before, subset, &before);
    predictions.extend(prediction_records(index, Phase::After, &augmented, &after));
    let to_big = |r: num_rational::Ratio<u64>| rational::ratio(*r.numer() as i64, *r.denom() as i64);
    Ok(SubsetOutput {
        result: SubsetResult {
            subset_index: index,
            size_before: subset.len(),
            size_after: augmented.len(),
            cov_before: to_big(cov_before),
            cov_after: to_big(cov_after),
            acc_before: before.accuracy(),
            acc_after: after.accuracy(),
            generated_count: generated.len(),
        },
        attempts: aug.attempts,
        verdicts,
        predictions,
    })
}

/// Runs the protocol over `corpus` split into `chunk_size` subsets.
///
/// A subset that fails is recorded in `skipped` and excluded from the means.
/// If the SUT does not answer its probe, every subset is skipped.
pub fn run_experiment(
    corpus: &TestSuite,
    k: usize,
    chunk_size: usize,
    pipeline: &Pipeline<'_>,
) -> Result<ExperimentRun, HarnessError> {
    let cfg = CoverageConfig::new(k)?;
    pipeline.augmentor.validate()?;
    let subsets = chunk(corpus, chunk_size.max(1));
    let mut run = ExperimentRun {
        report: ExperimentReport {
            k,
            chunk_size,
            subsets: Vec::new(),
            skipped: Vec::new(),
            mean_cov_delta: Rational::zero(),
            mean_acc_delta: Rational::zero(),
        },
        attempts: Vec::new(),
        verdicts: Vec::new(),
        predictions: Vec::new(),
    };
    if let Err(source) = pipeline.classifier.probe(&pipeline.sut.endpoint) {
        let err = HarnessError::SutUnavailable { sut: pipeline.sut.name.clone(), source };
        log::error!("{err}");
        run.report.skipped = (0..subsets.len())
            .map(|subset_index| SkippedSubset { subset_index, reason: err.to_string() })
            .collect();
        return Ok(run);
    }
    for (i, subset) in subsets.iter().enumerate() {
        log::info!("subset {}/{}: {} sentences", i + 1, subsets.len(), subset.len());
        match run_subset(i, subset, cfg, pipeline) {
            Ok(out) => {
                run.report.subsets.push(out.result);
                run.attempts.extend(out.attempts.into_iter().map(|attempt| AttemptRecord { subset_index: i, attempt }));
                run.verdicts.extend(out.verdicts.into_iter().map(|verdict| VerdictRecord { subset_index: i, verdict }));
                run.predictions.extend(out.predictions);
            }
            Err(e) => {
                log::warn!("subset {i} skipped: {e}");
                run.report.skipped.push(SkippedSubset { subset_index: i, reason: e.to_string() });
            }
        }
    }
    let (cov, acc) = mean_deltas(&run.report.subsets);
    run.report.mean_cov_delta = cov;
    run.report.mean_acc_delta = acc;
    Ok(run)
}

impl ExperimentRun {
    /// Tidy plot data: `subset_index,metric,phase,value`.
    pub fn results_csv(&self) -> String {
        let mut out = String::from("subset_index,metric,phase,value\n");
        for s in &self.report.subsets {
            let i = s.subset_index;
            let rows = [
                ("coverage", "before", rational::decimal(&s.cov_before, 6)),
                ("coverage", "after", rational::decimal(&s.cov_after, 6)),
                ("accuracy", "before", rational::decimal(&s.acc_before, 6)),
                ("accuracy", "after", rational::decimal(&s.acc_after, 6)),
                ("size", "before", s.size_before.to_string()),
                ("size", "after", s.size_after.to_string()),
            ];
            for (metric, phase, value) in rows {
                let _ = writeln!(out, "{i},{metric},{phase},{value}");
            }
        }
        out
    }

    pub fn report_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("report serializes");
        s.push('\n');
        s
    }

    /// Writes report.json, results.csv, attempts.jsonl, verdicts.jsonl and predictions.jsonl.
    pub fn write_artifacts(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), self.report_json())?;
        fs::write(dir.join("results.csv"), self.results_csv())?;
        write_jsonl(&dir.join("attempts.jsonl"), &self.attempts)?;
        write_jsonl(&dir.join("verdicts.jsonl"), &self.verdicts)?;
        write_jsonl(&dir.join("predictions.jsonl"), &self.predictions)
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}
