//! Run configuration (TOML) and construction of the services it names.
//!
//! ```toml
//! corpus = "fixture_400.txt"
//! chunk_size = 200
//! output_dir = "out"
//! mock_mode = true
//! max_inflight = 4
//!
//! [coverage]
//! k = 2
//!
//! [augmentor]
//! max_new_sentences = 50
//!
//! [sut]
//! name = "distilbert-base-uncased-emotion"
//! endpoint = "http://127.0.0.1:8000"
//!
//! [mock]
//! seed = 0
//! sut_fault = "mixed-emotion"
//! ```
//!
//! Relative paths are resolved against the config file's directory. The
//! generator's API key is read from `EMOCOV_LLM_API_KEY`, never from the file.

use crate::arbiter::{Ensemble, ModelProfile};
use crate::augmentor::AugmentorConfig;
use crate::coverage::CoverageConfig;
use crate::extractor::{BackendKind, Extractor, ExtractorConfig, Lexicon};
use crate::harness::SutProfile;
use crate::wire::http::{HttpClassifier, HttpClient, HttpGenerator};
use crate::wire::mock::{FaultRegion, MockBackend, MockModel};
use crate::wire::{Classifier, Generator};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub const API_KEY_ENV: &str = "EMOCOV_LLM_API_KEY";
pub const DEFAULT_ENDPOINT: &str = "http://127.0.0.1:8000";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MockConfig {
    pub seed: u64,
    /// Region where the mock SUT mislabels (`mixed-emotion` or a cell such as `verb=sadness,adv=joy`).
    pub sut_fault: Option<FaultRegion>,
    /// Ensemble members answered by the seeded hash instead of the lexicon.
    pub hash_models: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub chunk_size: usize,
    pub output_dir: PathBuf,
    pub mock_mode: bool,
    pub max_inflight: usize,
    pub extractor: ExtractorConfig,
    pub coverage: CoverageConfig,
    pub augmentor: AugmentorConfig,
    /// Inline ensemble; takes precedence over `ensemble_file`.
    pub ensemble: Vec<ModelProfile>,
    pub ensemble_file: Option<PathBuf>,
    pub sut: SutProfile,
    pub mock: MockConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            chunk_size: 200,
            output_dir: PathBuf::from("out"),
            mock_mode: false,
            max_inflight: 4,
            extractor: ExtractorConfig::default(),
            coverage: CoverageConfig::new(2).expect("k=2 is valid"),
            augmentor: AugmentorConfig::default(),
            ensemble: Vec::new(),
            ensemble_file: None,
            sut: SutProfile { name: "distilbert-base-uncased-emotion".into(), endpoint: DEFAULT_ENDPOINT.into() },
            mock: MockConfig::default(),
        }
    }
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.to_string(), message: e.message().to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        let mut cfg = Self::from_toml(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new("."));
        rebase(base, &mut cfg.corpus);
        rebase(base, &mut cfg.extractor.lexicon_path);
        rebase(base, &mut cfg.ensemble_file);
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.chunk_size == 0 {
            return Err(ConfigError::Invalid("chunk_size must be at least 1".into()));
        }
        self.augmentor.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.resolve_ensemble().map(|_| ())
    }

    /// Inline models, else the ensemble file, else the reference ensemble at the SUT endpoint.
    pub fn resolve_ensemble(&self) -> Result<Ensemble, ConfigError> {
        if !self.ensemble.is_empty() {
            return Ensemble::new(self.ensemble.clone()).map_err(|e| ConfigError::Invalid(e.to_string()));
        }
        if let Some(path) = &self.ensemble_file {
            let text = std::fs::read_to_string(path)
                .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
            return Ensemble::from_toml(&text).map_err(|e| ConfigError::Parse {
                path: path.display().to_string(),
                message: e.to_string(),
            });
        }
        Ok(Ensemble::reference(&self.sut.endpoint))
    }
}

/// Extractor, generator and classifier for one run.
pub struct Services {
    pub extractor: Extractor,
    pub generator: Arc<dyn Generator>,
    pub classifier: Arc<dyn Classifier>,
}

impl Services {
    /// In mock mode every endpoint resolves to an in-process [`MockBackend`]
    /// sharing the extractor's lexicon.
    pub fn build(cfg: &RunConfig) -> Result<Self, ConfigError> {
        let invalid = |e: crate::extractor::ExtractError| ConfigError::Invalid(e.to_string());
        if cfg.mock_mode {
            let lexicon = match &cfg.extractor.lexicon_path {
                Some(p) => Lexicon::load(p).map_err(|e| ConfigError::Invalid(e.to_string()))?,
                None => Lexicon::builtin(),
            };
            let mut mock = MockBackend::new(lexicon.clone(), cfg.mock.seed);
            if let Some(region) = &cfg.mock.sut_fault {
                mock = mock.with_model(cfg.sut.name.clone(), MockModel::Faulty(region.clone()));
            }
            for name in &cfg.mock.hash_models {
                mock = mock.with_model(name.clone(), MockModel::Hash);
            }
            let mock = Arc::new(mock);
            let extractor = match cfg.extractor.backend {
                BackendKind::Lexicon => Extractor::with_lexicon(lexicon).lowercase(cfg.extractor.lowercase),
                BackendKind::Remote => Extractor::from_config_with_tagger(&cfg.extractor, mock.clone()).map_err(invalid)?,
            };
            return Ok(Services { extractor, generator: mock.clone(), classifier: mock });
        }
        let extractor = Extractor::from_config(&cfg.extractor).map_err(invalid)?;
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        let generator = HttpGenerator::new(
            HttpClient::new(cfg.augmentor.retry_limit).with_bearer(api_key),
            cfg.augmentor.llm_endpoint.clone(),
        );
        let classifier = HttpClassifier::new(HttpClient::new(cfg.augmentor.retry_limit));
        Ok(Services { extractor, generator: Arc::new(generator), classifier: Arc::new(classifier) })
    }
}
