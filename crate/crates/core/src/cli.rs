//! Command-line front end: `coverage`, `gaps`, `run`, `label`, `eval`.
//!
//! Settings resolve as flag, then config file, then built-in default.
//! Failures print one JSON record `{"error": <kind>, "message": ...}` to
//! stderr and exit with 2 (usage), 3 (endpoint) or 4 (data).

use crate::arbiter::Arbiter;
use crate::augmentor::{build_prompt, plan_gaps};
use crate::config::{ConfigError, RunConfig, Services};
use crate::corpus::{load_corpus, CorpusError, CorpusFormat};
use crate::coverage::{CoverageConfig, CoverageState};
use crate::extractor::ExtractError;
use crate::feature::TestSuite;
use crate::harness::{evaluate_accuracy, run_experiment, HarnessError, Pipeline};
use crate::rational;
use clap::{Parser, Subcommand};
use serde::Serialize;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "emocov", version, about = "Coverage-driven testing of emotion classifiers")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Answer every endpoint in-process with the deterministic mock.
    #[arg(long, global = true)]
    pub mock: bool,
    /// Output file (or directory for `run`); stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Upper bound on concurrent requests.
    #[arg(long, global = true, value_parser = clap::value_parser!(u32).range(1..))]
    pub max_inflight: Option<u32>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Report k-projection coverage of a suite.
    Coverage {
        suite: PathBuf,
        #[arg(long)]
        k: Option<usize>,
    },
    /// List uncovered cells in priority order with their prompts.
    Gaps {
        suite: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        /// Number of gaps to list.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Run the before/after experiment over the configured corpus.
    Run {
        /// Corpus path; overrides `corpus` in the config.
        corpus: Option<PathBuf>,
        #[arg(long)]
        k: Option<usize>,
        /// Accepted generated sentences per subset.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        chunk_size: Option<usize>,
    },
    /// Label each sentence by weighted ensemble vote.
    Label { suite: PathBuf },
    /// Measure the system under test's accuracy on a labeled suite.
    Eval { suite: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Usage,
    Endpoint,
    Data,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 2,
            ErrorKind::Endpoint => 3,
            ErrorKind::Data => 4,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CliError {
    #[serde(rename = "error")]
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Usage, message: message.into() }
    }
    fn data(message: impl ToString) -> Self {
        CliError { kind: ErrorKind::Data, message: message.to_string() }
    }
    fn endpoint(message: impl ToString) -> Self {
        CliError { kind: ErrorKind::Endpoint, message: message.to_string() }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::usage(e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::data(e)
    }
}

impl From<ExtractError> for CliError {
    fn from(e: ExtractError) -> Self {
        match e {
            ExtractError::RemoteUnavailable(_) => CliError::endpoint(e),
            ExtractError::Lexicon(_) | ExtractError::Config(_) => CliError::usage(e.to_string()),
            _ => CliError::data(e),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        if e.is_endpoint_failure() {
            CliError::endpoint(e)
        } else {
            CliError::data(e)
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = write!(stdout, "{}", e.render());
                return if e.kind() == K::DisplayHelpOnMissingArgumentOrSubcommand { 2 } else { 0 };
            }
            return report(&CliError::usage(e.render().to_string().trim_end()));
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => 0,
        Err(e) => report(&e),
    }
}

fn report(e: &CliError) -> i32 {
    eprintln!("{}", serde_json::to_string(e).expect("error record serializes"));
    e.kind.exit_code()
}

fn coverage_config(k: usize) -> Result<CoverageConfig, CliError> {
    CoverageConfig::new(k).map_err(|e| CliError::usage(e.to_string()))
}

/// Loads the config (or defaults) and applies the flags on top of it.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.mock {
        cfg.mock_mode = true;
    }
    if let Some(n) = cli.max_inflight {
        cfg.max_inflight = n as usize;
    }
    match &cli.command {
        Command::Coverage { k, .. } | Command::Gaps { k, .. } => {
            if let Some(k) = k {
                cfg.coverage = coverage_config(*k)?;
            }
        }
        Command::Run { corpus, k, budget, chunk_size } => {
            if let Some(k) = k {
                cfg.coverage = coverage_config(*k)?;
            }
            if let Some(b) = budget {
                cfg.augmentor.max_new_sentences = *b;
            }
            if let Some(c) = chunk_size {
                cfg.chunk_size = *c;
            }
            if let Some(p) = corpus {
                cfg.corpus = Some(p.clone());
            }
            if let Some(out) = &cli.out {
                cfg.output_dir = out.clone();
            }
        }
        Command::Label { .. } | Command::Eval { .. } => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_suite(path: &Path) -> Result<TestSuite, CliError> {
    Ok(load_corpus(path, CorpusFormat::from_path(path))?.strict(path)?)
}

fn emit(cli: &Cli, stdout: &mut dyn Write, body: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => std::fs::write(path, body).map_err(|e| CliError::data(format!("cannot write {}: {e}", path.display()))),
        None => stdout.write_all(body.as_bytes()).map_err(|e| CliError::data(format!("cannot write output: {e}"))),
    }
}

fn to_jsonl<T: Serialize>(records: &[T]) -> String {
    records.iter().map(|r| serde_json::to_string(r).expect("record serializes") + "\n").collect()
}

fn coverage_state(cfg: &RunConfig, services: &Services, suite: &TestSuite) -> Result<CoverageState, CliError> {
    let texts: Vec<&str> = suite.sentences().iter().map(|s| s.text.as_str()).collect();
    let vectors = services.extractor.extract_all(&texts, cfg.max_inflight)?;
    let mut state = CoverageState::new(cfg.coverage);
    state.add_suite(&vectors);
    Ok(state)
}

#[derive(Serialize)]
struct GapLine {
    priority: usize,
    cell: String,
    score: usize,
    prompt: String,
}

#[derive(Serialize)]
struct EvalRecord {
    sut: String,
    correct: usize,
    total: usize,
    #[serde(with = "crate::rational")]
    accuracy: rational::Rational,
    accuracy_percent: f64,
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = resolve_config(cli)?;
    let services = Services::build(&cfg)?;
    match &cli.command {
        Command::Coverage { suite, .. } => {
            let suite = load_suite(suite)?;
            let state = coverage_state(&cfg, &services, &suite)?;
            let mut body = serde_json::to_string_pretty(&state.report()).expect("report serializes");
            body.push('\n');
            emit(cli, stdout, &body)
        }
        Command::Gaps { suite, budget, .. } => {
            let suite = load_suite(suite)?;
            let state = coverage_state(&cfg, &services, &suite)?;
            let gaps = plan_gaps(&state, budget.unwrap_or(usize::MAX));
            let lines = gaps
                .iter()
                .map(|g| {
                    Ok(GapLine {
                        priority: g.priority,
                        cell: g.cell.to_string(),
                        score: g.score,
                        prompt: build_prompt(g, &cfg.augmentor).map_err(|e| CliError::usage(e.to_string()))?,
                    })
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            emit(cli, stdout, &to_jsonl(&lines))
        }
        Command::Run { .. } => {
            let corpus_path = cfg.corpus.clone().ok_or_else(|| CliError::usage("no corpus given (argument or `corpus` in config)"))?;
            let corpus = load_suite(&corpus_path)?;
            let ensemble = cfg.resolve_ensemble()?;
            let pipeline = Pipeline {
                extractor: &services.extractor,
                generator: services.generator.as_ref(),
                classifier: services.classifier.as_ref(),
                ensemble: &ensemble,
                sut: &cfg.sut,
                augmentor: &cfg.augmentor,
                max_inflight: cfg.max_inflight,
            };
            let run = run_experiment(&corpus, cfg.coverage.k(), cfg.chunk_size, &pipeline)?;
            run.write_artifacts(&cfg.output_dir)
                .map_err(|e| CliError::data(format!("cannot write artifacts to {}: {e}", cfg.output_dir.display())))?;
            let r = &run.report;
            log::info!(
                "{} subsets, {} skipped; mean cov delta {}, mean acc delta {}; artifacts in {}",
                r.subsets.len(),
                r.skipped.len(),
                rational::decimal(&r.mean_cov_delta, 4),
                rational::decimal(&r.mean_acc_delta, 4),
                cfg.output_dir.display()
            );
            match r.skipped.first() {
                Some(s) => Err(CliError::endpoint(format!("{} subset(s) skipped; first: {}", r.skipped.len(), s.reason))),
                None => Ok(()),
            }
        }
        Command::Label { suite } => {
            let suite = load_suite(suite)?;
            let ensemble = cfg.resolve_ensemble()?;
            let arbiter = Arbiter::new(&ensemble, services.classifier.as_ref(), cfg.max_inflight);
            let items: Vec<(String, String)> = suite.sentences().iter().map(|s| (s.id.clone(), s.text.clone())).collect();
            let verdicts = arbiter.arbitrate_batch(&items).map_err(|e| CliError::from(HarnessError::from(e)))?;
            emit(cli, stdout, &to_jsonl(&verdicts))
        }
        Command::Eval { suite } => {
            let suite = load_suite(suite)?;
            let eval = evaluate_accuracy(&suite, &cfg.sut, services.classifier.as_ref(), cfg.max_inflight)?;
            let accuracy = eval.accuracy();
            let record = EvalRecord {
                sut: cfg.sut.name.clone(),
                correct: eval.correct,
                total: eval.total,
                accuracy_percent: rational::decimal(&(accuracy.clone() * rational::from_int(100)), 4).parse().unwrap_or(f64::NAN),
                accuracy,
            };
            let mut body = serde_json::to_string_pretty(&record).expect("record serializes");
            body.push('\n');
            emit(cli, stdout, &body)
        }
    }
}
