//! Corpus and suite files.
//!
//! Two formats, one record per line, UTF-8:
//!
//! - `semicolon_text_label`: `text;label`, split at the *last* `;` so text may
//!   contain semicolons. Labels are the six corpus emotions. Blank lines and
//!   lines starting with `#` are skipped. Ids are `<file name>:<line>`.
//! - `jsonl_native`: `{"id", "text", "gold_label", "origin"}` per line.
//!
//! Loading never drops a record silently: every non-blank, non-comment line
//! either becomes a sentence or a [`RecordError`].

use crate::feature::{CorpusLabel, FeatureError, Origin, Sentence, TestSuite};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    SemicolonTextLabel,
    JsonlNative,
}

impl CorpusFormat {
    /// `.jsonl` means native; everything else is the semicolon format.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") => CorpusFormat::JsonlNative,
            _ => CorpusFormat::SemicolonTextLabel,
        }
    }
}

/// A rejected input line.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecordError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: unknown label `{token}`")]
    UnknownLabel { line: usize, token: String },
}

impl RecordError {
    pub fn line(&self) -> usize {
        match self {
            RecordError::Parse { line, .. } | RecordError::UnknownLabel { line, .. } => *line,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {errors} malformed record(s), first: {first}")]
    Malformed { path: String, errors: usize, first: RecordError },
}

#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub suite: TestSuite,
    pub rejected: Vec<RecordError>,
    /// Non-blank, non-comment lines seen.
    pub records: usize,
}

impl LoadedCorpus {
    /// Fails on the first rejected record.
    pub fn strict(self, path: &Path) -> Result<TestSuite, CorpusError> {
        match self.rejected.first() {
            None => Ok(self.suite),
            Some(first) => Err(CorpusError::Malformed {
                path: path.display().to_string(),
                errors: self.rejected.len(),
                first: first.clone(),
            }),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NativeRecord {
    id: String,
    text: String,
    gold_label: Option<String>,
    origin: Origin,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io { path: path.display().to_string(), source }
}

pub fn load_corpus(path: &Path, fmt: CorpusFormat) -> Result<LoadedCorpus, CorpusError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let file_name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let name = path.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(parse_corpus(&text, &file_name, &name, fmt))
}

/// Parses corpus text already in memory; `file_name` seeds the ids.
pub fn parse_corpus(text: &str, file_name: &str, suite_name: &str, fmt: CorpusFormat) -> LoadedCorpus {
    let mut sentences = Vec::new();
    let mut rejected = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut records = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim_end_matches('\r');
        let trimmed = raw.trim();
        if trimmed.is_empty() || (fmt == CorpusFormat::SemicolonTextLabel && trimmed.starts_with('#')) {
            continue;
        }
        records += 1;
        let parsed = match fmt {
            CorpusFormat::SemicolonTextLabel => parse_semicolon(raw, line, file_name),
            CorpusFormat::JsonlNative => parse_native(raw, line),
        };
        match parsed {
            Ok(s) if !seen.insert(s.id.clone()) => {
                rejected.push(RecordError::Parse { line, reason: format!("duplicate id `{}`", s.id) })
            }
            Ok(s) => sentences.push(s),
            Err(e) => rejected.push(e),
        }
    }
    let suite = TestSuite::new(suite_name, sentences).expect("ids deduplicated above");
    LoadedCorpus { suite, rejected, records }
}

fn parse_semicolon(raw: &str, line: usize, file_name: &str) -> Result<Sentence, RecordError> {
    let (text, label) = raw
        .rsplit_once(';')
        .ok_or_else(|| RecordError::Parse { line, reason: "missing `;label`".into() })?;
    let token = label.trim();
    let gold: CorpusLabel = token
        .parse()
        .map_err(|_| RecordError::UnknownLabel { line, token: token.to_string() })?;
    Sentence::new(format!("{file_name}:{line}"), text.trim(), Some(gold), Origin::Corpus)
        .map_err(|e| RecordError::Parse { line, reason: e.to_string() })
}

fn parse_native(raw: &str, line: usize) -> Result<Sentence, RecordError> {
    let rec: NativeRecord =
        serde_json::from_str(raw).map_err(|e| RecordError::Parse { line, reason: e.to_string() })?;
    let gold = rec
        .gold_label
        .map(|l| l.parse::<CorpusLabel>().map_err(|_| RecordError::UnknownLabel { line, token: l }))
        .transpose()?;
    Sentence::new(rec.id, rec.text, gold, rec.origin).map_err(|e: FeatureError| RecordError::Parse {
        line,
        reason: e.to_string(),
    })
}

/// Writes the suite in the native JSONL format.
pub fn save_suite(suite: &TestSuite, path: &Path) -> Result<(), CorpusError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for s in suite.sentences() {
        let rec = NativeRecord {
            id: s.id.clone(),
            text: s.text.clone(),
            gold_label: s.gold_label.map(|l| l.to_string()),
            origin: s.origin,
        };
        serde_json::to_writer(&mut w, &rec).map_err(|e| io_err(path)(e.into()))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Loads a native suite, keeping the file stem as the suite name.
pub fn load_suite(path: &Path) -> Result<TestSuite, CorpusError> {
    load_corpus(path, CorpusFormat::JsonlNative)?.strict(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semicolon_line_parses() {
        let c = parse_corpus("i feel wonderful today;joy\n", "f.txt", "f", CorpusFormat::SemicolonTextLabel);
        assert!(c.rejected.is_empty());
        let s = &c.suite.sentences()[0];
        assert_eq!(s.id, "f.txt:1");
        assert_eq!(s.text, "i feel wonderful today");
        assert_eq!(s.gold_label, Some(CorpusLabel::Joy));
        assert_eq!(s.origin, Origin::Corpus);
    }

    #[test]
    fn last_semicolon_splits() {
        let c = parse_corpus("so tired; so done;sadness", "f", "f", CorpusFormat::SemicolonTextLabel);
        assert_eq!(c.suite.sentences()[0].text, "so tired; so done");
    }

    #[test]
    fn empty_input_is_empty_suite() {
        let c = parse_corpus("", "f", "f", CorpusFormat::SemicolonTextLabel);
        assert!(c.suite.is_empty() && c.rejected.is_empty());
        assert_eq!(c.records, 0);
    }

    #[test]
    fn errors_name_their_lines() {
        let text = "# comment\nok;joy\n\nbad label;bliss\nno separator\n;anger\n";
        let c = parse_corpus(text, "f", "f", CorpusFormat::SemicolonTextLabel);
        assert_eq!(c.suite.len(), 1);
        assert_eq!(c.rejected.len(), 3);
        assert_eq!(c.rejected[0], RecordError::UnknownLabel { line: 4, token: "bliss".into() });
        assert!(matches!(c.rejected[1], RecordError::Parse { line: 5, .. }));
        assert!(matches!(c.rejected[2], RecordError::Parse { line: 6, .. }));
        assert_eq!(c.records, c.suite.len() + c.rejected.len());
    }

    #[test]
    fn native_duplicate_ids_are_rejected() {
        let line = r#"{"id":"a","text":"x","gold_label":null,"origin":"generated"}"#;
        let c = parse_corpus(&format!("{line}\n{line}\n"), "f", "f", CorpusFormat::JsonlNative);
        assert_eq!(c.suite.len(), 1);
        assert!(matches!(&c.rejected[0], RecordError::Parse { line: 2, reason } if reason.contains("duplicate")));
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(CorpusFormat::from_path(Path::new("a/b.jsonl")), CorpusFormat::JsonlNative);
        assert_eq!(CorpusFormat::from_path(Path::new("a/b.txt")), CorpusFormat::SemicolonTextLabel);
    }
}
