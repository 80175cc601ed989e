//! Corpus-scale distill and refine runs.
//!
//! Documents are the unit of work: a reader thread streams JSONL records
//! into a bounded queue, workers process whole documents, and a single
//! writer emits results in input order and checkpoints a cursor so an
//! interrupted run can resume without duplicating or losing records.

mod distill;
mod refine;
mod sink;

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::thread;

use crossbeam_channel::bounded;
use log::info;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chunk::{ChunkConfig, ChunkError};
use crate::distill::Thresholds;
use crate::doc::word_count;
use crate::edit::EditMode;
use crate::expert::{ClientError, EndpointConfig, HttpChatModel};
use crate::metrics::{BucketedStats, StatsReport};

pub use distill::{run_distill, DistillSummary};
pub use refine::{
    load_program_cache, run_execute, run_refine, ProgramRecord, RefineReportLine, RefineSummary,
};
pub use sink::{Cursor, OutputMark, CURSOR_VERSION};

const CHECKPOINT_EVERY: u64 = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    Distill,
    #[default]
    Refine,
    ExecuteOnly,
}

/// Everything a run needs; loaded from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunManifest {
    pub mode: RunMode,
    pub input: PathBuf,
    /// Refined corpus (refine / execute-only) or training records (distill).
    pub output: PathBuf,
    /// Per-document execution report sidecar.
    pub report: Option<PathBuf>,
    /// Reject log (distill).
    pub rejects: Option<PathBuf>,
    /// Program cache: read in execute-only mode, written in refine mode.
    pub programs: Option<PathBuf>,
    pub cursor: Option<PathBuf>,
    pub chunk: ChunkConfig,
    pub thresholds: Thresholds,
    pub edit_mode: EditMode,
    pub endpoint: EndpointConfig,
    pub workers: usize,
    /// Stop after this many records in one invocation.
    pub limit: Option<u64>,
    /// Stop dispatching once this many input words were processed in one
    /// invocation.
    pub word_budget: Option<u64>,
}

impl Default for RunManifest {
    fn default() -> Self {
        Self {
            mode: RunMode::default(),
            input: PathBuf::from("input.jsonl"),
            output: PathBuf::from("output.jsonl"),
            report: None,
            rejects: None,
            programs: None,
            cursor: None,
            chunk: ChunkConfig::default(),
            thresholds: Thresholds::default(),
            edit_mode: EditMode::default(),
            endpoint: EndpointConfig::default(),
            workers: 4,
            limit: None,
            word_budget: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}:{line}: {message}", path.display())]
    InvalidRecord {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error("cursor: {0}")]
    Cursor(String),
    #[error(transparent)]
    Chunk(#[from] ChunkError),
    #[error(transparent)]
    Client(#[from] ClientError),
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_owned(),
            source,
        }
    }
}

impl RunManifest {
    pub fn from_toml_str(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Manifest(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.workers == 0 {
            return Err(PipelineError::Manifest("workers must be at least 1".into()));
        }
        self.chunk.validate()?;
        match self.mode {
            RunMode::ExecuteOnly if self.programs.is_none() => Err(PipelineError::Manifest(
                "execute-only mode needs a programs file".into(),
            )),
            RunMode::ExecuteOnly => Ok(()),
            RunMode::Refine | RunMode::Distill => Ok(self.endpoint.validate()?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum RunSummary {
    Distill(DistillSummary),
    Refine(RefineSummary),
    ExecuteOnly(RefineSummary),
}

impl RunSummary {
    /// Some records fell back or were lost to request failures.
    pub fn is_partial(&self) -> bool {
        match self {
            RunSummary::Distill(s) => s.expert_failures() > 0,
            RunSummary::Refine(s) | RunSummary::ExecuteOnly(s) => s.request_failures > 0,
        }
    }
}

/// Runs a manifest against its configured HTTP endpoint.
pub fn run_manifest(manifest: &RunManifest) -> Result<RunSummary, PipelineError> {
    manifest.validate()?;
    Ok(match manifest.mode {
        RunMode::ExecuteOnly => RunSummary::ExecuteOnly(run_execute(manifest)?),
        RunMode::Refine => {
            let model = HttpChatModel::new(manifest.endpoint.clone())?;
            let summary = run_refine(manifest, &model)?;
            info!("endpoint stats: {:?}", model.stats());
            RunSummary::Refine(summary)
        }
        RunMode::Distill => {
            let model = HttpChatModel::new(manifest.endpoint.clone())?;
            let summary = run_distill(manifest, &model)?;
            info!("endpoint stats: {:?}", model.stats());
            RunSummary::Distill(summary)
        }
    })
}

pub(crate) fn parse_error(path: &Path, line: u64, err: impl std::fmt::Display) -> PipelineError {
    PipelineError::InvalidRecord {
        path: path.to_owned(),
        line,
        message: err.to_string(),
    }
}

fn parse_record(path: &Path, line_no: u64, line: &str) -> Result<CorpusRecord, PipelineError> {
    serde_json::from_str(line).map_err(|e| parse_error(path, line_no, e))
}

/// Reads a whole JSONL corpus; blank lines are ignored.
pub fn read_corpus(path: &Path) -> Result<Vec<CorpusRecord>, PipelineError> {
    let file = File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| PipelineError::io(path, e))?;
        if !line.trim().is_empty() {
            records.push(parse_record(path, idx as u64 + 1, &line)?);
        }
    }
    Ok(records)
}

pub fn write_corpus(path: &Path, records: &[CorpusRecord]) -> Result<(), PipelineError> {
    let mut outputs = sink::Outputs::open(&[path.to_owned()], None)?;
    for record in records {
        outputs.write_json(0, record)?;
    }
    outputs.commit().map(drop)
}

/// Statistics over an original corpus and its refined counterpart, paired
/// by position; ids must agree.
pub fn stats_from_files(original: &Path, refined: &Path) -> Result<StatsReport, PipelineError> {
    let a = read_corpus(original)?;
    let b = read_corpus(refined)?;
    if a.len() != b.len() {
        return Err(PipelineError::Manifest(format!(
            "{} original records but {} refined records",
            a.len(),
            b.len()
        )));
    }
    let mut stats = BucketedStats::default();
    for (idx, (o, r)) in a.iter().zip(&b).enumerate() {
        if o.id != r.id {
            return Err(PipelineError::InvalidRecord {
                path: refined.to_owned(),
                line: idx as u64 + 1,
                message: format!("expected id {:?}, found {:?}", o.id, r.id),
            });
        }
        stats.add_pair(&o.text, &r.text, o.score);
    }
    Ok(stats.report())
}

/// Outcome of one invocation of the ordered engine.
pub(crate) struct Progress<S> {
    pub summary: S,
    pub processed: u64,
}

/// Streams the input through `process` on `manifest.workers` threads and
/// hands results to `write` in input order, checkpointing as it goes.
pub(crate) fn drive<S, R, P, W>(
    manifest: &RunManifest,
    outputs: &[PathBuf],
    process: P,
    mut write: W,
) -> Result<Progress<S>, PipelineError>
where
    S: Serialize + DeserializeOwned + Default,
    R: Send,
    P: Fn(&CorpusRecord) -> R + Sync,
    W: FnMut(&mut S, &mut sink::Outputs, R) -> Result<(), PipelineError>,
{
    let cursor = match &manifest.cursor {
        Some(path) => Cursor::load(path)?,
        None => None,
    };
    if let Some(c) = &cursor {
        if c.input != manifest.input {
            return Err(PipelineError::Cursor(format!(
                "cursor belongs to {}, not {}",
                c.input.display(),
                manifest.input.display()
            )));
        }
    }
    let start = cursor.as_ref().map_or(0, |c| c.next_ordinal);
    let mut summary: S = match &cursor {
        Some(c) => serde_json::from_value(c.summary.clone())
            .map_err(|e| PipelineError::Cursor(format!("summary: {e}")))?,
        None => S::default(),
    };
    let mut sinks = sink::Outputs::open(outputs, cursor.as_ref().map(|c| c.outputs.as_slice()))?;
    if start > 0 {
        info!("resuming at record {start}");
    }

    let workers = manifest.workers.max(1);
    let (job_tx, job_rx) = bounded::<(u64, CorpusRecord)>(workers * 4);
    let (res_tx, res_rx) = bounded::<(u64, R)>(workers * 4);
    let input = manifest.input.as_path();

    let mut next = start;
    let mut since_checkpoint = 0;
    let checkpoint =
        |summary: &S, sinks: &mut sink::Outputs, next: u64| -> Result<(), PipelineError> {
            let marks = sinks.commit()?;
            if let Some(path) = &manifest.cursor {
                Cursor {
                    version: CURSOR_VERSION,
                    input: manifest.input.clone(),
                    next_ordinal: next,
                    outputs: marks,
                    summary: serde_json::to_value(summary).expect("summary serializes"),
                }
                .store(path)?;
            }
            Ok(())
        };

    let (read_result, write_result) = thread::scope(|scope| {
        let reader = scope.spawn(move || -> Result<(), PipelineError> {
            let file = File::open(input).map_err(|e| PipelineError::io(input, e))?;
            let mut seen = HashSet::new();
            let mut ordinal = 0u64;
            let mut dispatched = 0u64;
            let mut words = 0u64;
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| PipelineError::io(input, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let this = ordinal;
                ordinal += 1;
                if this < start {
                    continue;
                }
                if manifest.limit.is_some_and(|l| dispatched >= l)
                    || manifest.word_budget.is_some_and(|b| words >= b)
                {
                    break;
                }
                let record = parse_record(input, idx as u64 + 1, &line)?;
                if !seen.insert(record.id.clone()) {
                    return Err(PipelineError::InvalidRecord {
                        path: input.to_owned(),
                        line: idx as u64 + 1,
                        message: format!("duplicate id {:?}", record.id),
                    });
                }
                words += word_count(&record.text) as u64;
                dispatched += 1;
                if job_tx.send((this, record)).is_err() {
                    break;
                }
            }
            Ok(())
        });

        for _ in 0..workers {
            let job_rx = job_rx.clone();
            let res_tx = res_tx.clone();
            let process = &process;
            scope.spawn(move || {
                for (ordinal, record) in job_rx {
                    if res_tx.send((ordinal, process(&record))).is_err() {
                        break;
                    }
                }
            });
        }
        drop(job_rx);
        drop(res_tx);

        let mut pending: BTreeMap<u64, R> = BTreeMap::new();
        let write_result = (|| -> Result<(), PipelineError> {
            for (ordinal, result) in &res_rx {
                pending.insert(ordinal, result);
                while let Some(result) = pending.remove(&next) {
                    write(&mut summary, &mut sinks, result)?;
                    next += 1;
                    since_checkpoint += 1;
                    if since_checkpoint >= CHECKPOINT_EVERY {
                        checkpoint(&summary, &mut sinks, next)?;
                        since_checkpoint = 0;
                    }
                }
            }
            Ok(())
        })();
        drop(res_rx);
        let read_result = reader.join().expect("reader thread panicked");
        (read_result, write_result)
    });
    write_result?;
    read_result?;
    checkpoint(&summary, &mut sinks, next)?;
    Ok(Progress {
        summary,
        processed: next - start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_toml_round_trip() {
        let text = r#"
            mode = "execute-only"
            input = "in.jsonl"
            output = "out.jsonl"
            programs = "programs.jsonl"
            workers = 2

            [chunk]
            window = 500

            [endpoint]
            base_url = "http://example.invalid/v1"
        "#;
        let m = RunManifest::from_toml_str(text).unwrap();
        assert_eq!(m.mode, RunMode::ExecuteOnly);
        assert_eq!(m.chunk.window, 500);
        assert_eq!(m.endpoint.top_k, 20);
        assert!(m.validate().is_ok());
        let again = RunManifest::from_toml_str(&m.to_toml_string()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn manifest_rejects_unknown_keys_and_bad_values() {
        assert!(RunManifest::from_toml_str("api_key = \"secret\"").is_err());
        let m = RunManifest {
            mode: RunMode::ExecuteOnly,
            ..RunManifest::default()
        };
        assert!(matches!(m.validate(), Err(PipelineError::Manifest(_))));
        let m = RunManifest {
            workers: 0,
            ..RunManifest::default()
        };
        assert!(m.validate().is_err());
    }

    #[test]
    fn corpus_io() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let records = vec![
            CorpusRecord {
                id: "a".into(),
                text: "x\ny".into(),
                score: Some(3.5),
            },
            CorpusRecord {
                id: "b".into(),
                text: String::new(),
                score: None,
            },
        ];
        write_corpus(&path, &records).unwrap();
        assert_eq!(read_corpus(&path).unwrap(), records);
        fs::write(&path, "{\"id\":\"a\",\"text\":\"x\"}\n\nnot json\n").unwrap();
        match read_corpus(&path) {
            Err(PipelineError::InvalidRecord { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
