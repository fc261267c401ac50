//! Gap-driven suite augmentation.
//!
//! Uncovered cells become prompts, the generator proposes sentences, and a
//! candidate joins the suite only if re-extracting it lands on the target
//! cell. Each accepted sentence updates coverage with its full feature
//! vector, so later gaps it happens to cover are skipped.

use crate::coverage::{CoverageState, ProjectionCell};
use crate::extractor::{ExtractError, Extractor};
use crate::feature::{EmotionLabel, FeatureKind, FeatureVector, Origin, Sentence, TestSuite};
use crate::wire::{Generator, WireError};
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::sync::OnceLock;

pub const DEFAULT_PROMPT_TEMPLATE: &str = "Generate a sentence {constraints}";

#[derive(Debug, thiserror::Error)]
pub enum AugmentError {
    #[error("invalid prompt template: {0}")]
    TemplateInvalid(String),
    #[error("generator unavailable: {0}")]
    LlmUnavailable(#[source] WireError),
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error("invalid augmentor config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentorConfig {
    pub llm_endpoint: String,
    pub max_attempts_per_gap: u32,
    /// Accepted sentences per call to [`fill_gaps`].
    pub max_new_sentences: usize,
    /// Either `{constraints}` or one of `{verb}`, `{adjective}`, `{adverb}`,
    /// `{noun}` for each constrained part of speech.
    pub prompt_template: String,
    pub retry_limit: u32,
}

impl Default for AugmentorConfig {
    fn default() -> Self {
        AugmentorConfig {
            llm_endpoint: "http://127.0.0.1:8000".into(),
            max_attempts_per_gap: 3,
            max_new_sentences: 50,
            prompt_template: DEFAULT_PROMPT_TEMPLATE.into(),
            retry_limit: 2,
        }
    }
}

impl AugmentorConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if self.max_attempts_per_gap == 0 {
            return Err(AugmentError::Config("max_attempts_per_gap must be at least 1".into()));
        }
        template_placeholders(&self.prompt_template).map(|_| ())
    }
}

/// An uncovered cell scheduled for generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GapSpec {
    pub cell: ProjectionCell,
    /// Rank in the plan, 0 first.
    pub priority: usize,
    /// Most uncovered cells a single sentence hitting this cell could cover.
    pub score: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationAttempt {
    pub gap: ProjectionCell,
    pub prompt: String,
    pub candidate: String,
    pub extracted: FeatureVector,
    pub accepted: bool,
    pub attempt_index: u32,
}

#[derive(Debug, Clone)]
pub struct Augmentation {
    pub suite: TestSuite,
    pub state: CoverageState,
    pub attempts: Vec<GenerationAttempt>,
    pub generated_ids: Vec<String>,
}

const KIND_SLOTS: [(&str, FeatureKind); 4] = [
    ("verb", FeatureKind::Verb),
    ("adjective", FeatureKind::Adjective),
    ("adverb", FeatureKind::Adverb),
    ("noun", FeatureKind::Noun),
];

fn article(kind: FeatureKind) -> &'static str {
    match kind {
        FeatureKind::Adjective | FeatureKind::Adverb => "an",
        FeatureKind::Verb | FeatureKind::Noun => "a",
    }
}

/// Clause for one `(kind, emotion)` pair.
pub fn constraint_clause(kind: FeatureKind, emotion: EmotionLabel) -> String {
    if emotion.is_neutral() {
        format!("without any emotionally charged {}", kind.name())
    } else {
        format!("{} {} labeled as {}", article(kind), kind.name(), emotion)
    }
}

/// `with <emotional clauses joined by "and">`, then the neutral clauses.
pub fn constraints_text(cell: &ProjectionCell) -> String {
    let positive: Vec<String> = cell.pairs().filter(|p| !p.1.is_neutral()).map(|(k, e)| constraint_clause(k, e)).collect();
    let negative: Vec<String> = cell.pairs().filter(|p| p.1.is_neutral()).map(|(k, e)| constraint_clause(k, e)).collect();
    let mut parts = Vec::new();
    if !positive.is_empty() {
        parts.push(format!("with {}", positive.join(" and ")));
    }
    parts.extend(negative);
    parts.join(" and ")
}

#[derive(Debug, PartialEq, Eq)]
enum Placeholders {
    Constraints,
    PerKind(BTreeSet<FeatureKind>),
}

fn template_placeholders(template: &str) -> Result<Placeholders, AugmentError> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"\{([^{}]*)\}").unwrap());
    let mut constraints = 0;
    let mut kinds = BTreeSet::new();
    for c in re.captures_iter(template) {
        match &c[1] {
            "constraints" => constraints += 1,
            name => {
                let kind = KIND_SLOTS
                    .iter()
                    .find(|s| s.0 == name)
                    .map(|s| s.1)
                    .ok_or_else(|| AugmentError::TemplateInvalid(format!("unknown placeholder `{{{name}}}`")))?;
                if !kinds.insert(kind) {
                    return Err(AugmentError::TemplateInvalid(format!("placeholder `{{{name}}}` repeated")));
                }
            }
        }
    }
    match (constraints, kinds.is_empty()) {
        (1, true) => Ok(Placeholders::Constraints),
        (0, false) => Ok(Placeholders::PerKind(kinds)),
        (0, true) => Err(AugmentError::TemplateInvalid("template has no placeholder".into())),
        _ => Err(AugmentError::TemplateInvalid(
            "use `{constraints}` exactly once, or per-kind placeholders, not both".into(),
        )),
    }
}

/// Instantiates the template for `gap`.
pub fn build_prompt(gap: &GapSpec, cfg: &AugmentorConfig) -> Result<String, AugmentError> {
    prompt_for_cell(&gap.cell, &cfg.prompt_template)
}

pub fn prompt_for_cell(cell: &ProjectionCell, template: &str) -> Result<String, AugmentError> {
    match template_placeholders(template)? {
        Placeholders::Constraints => Ok(template.replace("{constraints}", &constraints_text(cell))),
        Placeholders::PerKind(kinds) => {
            let wanted: BTreeSet<FeatureKind> = cell.projection().kinds().iter().copied().collect();
            if kinds != wanted {
                return Err(AugmentError::TemplateInvalid(format!(
                    "template names {:?} but the gap constrains {:?}",
                    kinds, wanted
                )));
            }
            let mut out = template.to_string();
            for (kind, emotion) in cell.pairs() {
                out = out.replace(&format!("{{{}}}", kind.name()), &constraint_clause(kind, emotion));
            }
            Ok(out)
        }
    }
}

fn attempt_prompt(base: &str, attempt_index: u32) -> String {
    if attempt_index <= 1 {
        base.to_string()
    } else {
        format!("{base} (Attempt {attempt_index})")
    }
}

/// All full vectors that agree with `cell` on its projection.
fn completions(cell: &ProjectionCell, domain: &[EmotionLabel]) -> Vec<FeatureVector> {
    let free: Vec<FeatureKind> = FeatureKind::ALL.into_iter().filter(|k| !cell.projection().contains(*k)).collect();
    let mut base = FeatureVector::NEUTRAL;
    for (k, v) in cell.pairs() {
        base.set(k, v);
    }
    let total = domain.len().pow(free.len() as u32);
    (0..total)
        .map(|mut i| {
            let mut fv = base;
            for &k in free.iter().rev() {
                fv.set(k, domain[i % domain.len()]);
                i /= domain.len();
            }
            fv
        })
        .collect()
}

/// Orders uncovered cells by how many uncovered cells one sentence hitting
/// them could cover at best, highest first, ties by canonical cell order.
pub fn plan_gaps(state: &CoverageState, budget: usize) -> Vec<GapSpec> {
    if budget == 0 {
        return Vec::new();
    }
    let domain = state.config().domain();
    let mut scored: Vec<(usize, usize, ProjectionCell)> = state
        .uncovered()
        .into_iter()
        .enumerate()
        .map(|(order, cell)| {
            let score = completions(&cell, domain).iter().map(|fv| state.uncovered_gain(fv)).max().unwrap_or(0);
            (score, order, cell)
        })
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    scored
        .into_iter()
        .take(budget)
        .enumerate()
        .map(|(priority, (score, _, cell))| GapSpec { cell, priority, score })
        .collect()
}

fn fresh_id(suite: &TestSuite, counter: &mut usize) -> String {
    loop {
        *counter += 1;
        let id = format!("{}:gen{}", suite.name, counter);
        if !suite.contains_id(&id) {
            return id;
        }
    }
}

/// Generates sentences for uncovered cells until `max_new_sentences` are
/// accepted or the plan runs out.
///
/// `state` must describe `suite` under `extractor`. Up to `max_inflight` first
/// attempts are requested concurrently; acceptance runs in plan order, so the
/// result depends only on the generator's responses.
pub fn fill_gaps(
    suite: &TestSuite,
    state: &CoverageState,
    cfg: &AugmentorConfig,
    extractor: &Extractor,
    generator: &dyn Generator,
    max_inflight: usize,
) -> Result<Augmentation, AugmentError> {
    cfg.validate()?;
    let mut out = Augmentation {
        suite: suite.clone(),
        state: state.clone(),
        attempts: Vec::new(),
        generated_ids: Vec::new(),
    };
    if cfg.max_new_sentences == 0 {
        return Ok(out);
    }
    let plan = plan_gaps(state, usize::MAX);
    let prompts: Vec<String> = plan.iter().map(|g| build_prompt(g, cfg)).collect::<Result<_, _>>()?;
    let window_size = max_inflight.max(1);
    let mut counter = 0;
    let mut next = 0;
    while next < plan.len() && out.generated_ids.len() < cfg.max_new_sentences {
        let mut window = Vec::with_capacity(window_size);
        while next < plan.len() && window.len() < window_size {
            if !out.state.is_covered(&plan[next].cell) {
                window.push(next);
            }
            next += 1;
        }
        let first = crate::util::bounded_map(&window, window_size, |&i| generator.generate(&prompts[i]));
        for (&i, first_reply) in window.iter().zip(first) {
            if out.generated_ids.len() >= cfg.max_new_sentences {
                break;
            }
            let gap = &plan[i];
            if out.state.is_covered(&gap.cell) {
                continue;
            }
            let mut reply = Some(first_reply);
            for attempt_index in 1..=cfg.max_attempts_per_gap {
                let prompt = attempt_prompt(&prompts[i], attempt_index);
                let candidate = match reply.take() {
                    Some(r) => r,
                    None => generator.generate(&prompt),
                }
                .map_err(AugmentError::LlmUnavailable)?;
                let extracted = match extractor.extract(&candidate) {
                    Ok(fv) => Some(fv),
                    Err(ExtractError::EmptyText) => None,
                    Err(e) => return Err(e.into()),
                };
                let accepted = extracted.is_some_and(|fv| gap.cell.matches(&fv));
                out.attempts.push(GenerationAttempt {
                    gap: gap.cell.clone(),
                    prompt,
                    candidate: candidate.clone(),
                    extracted: extracted.unwrap_or(FeatureVector::NEUTRAL),
                    accepted,
                    attempt_index,
                });
                if let (true, Some(fv)) = (accepted, extracted) {
                    let id = fresh_id(&out.suite, &mut counter);
                    let sentence = Sentence::new(id.clone(), candidate, None, Origin::Generated)
                        .expect("accepted candidates have text");
                    out.suite.push(sentence).expect("fresh ids are unique");
                    out.state.add_vector(&fv);
                    out.generated_ids.push(id);
                    break;
                }
            }
        }
    }
    Ok(out)
}
