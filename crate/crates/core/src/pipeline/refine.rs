use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use super::{drive, parse_error, CorpusRecord, PipelineError, RunManifest};
use crate::chunk::{merge_chunk_programs, split_document, ChunkMode, DroppedCall};
use crate::doc::{word_count, LineIndexedDoc};
use crate::expert::{request_program, ChatModel};
use crate::program::{execute_program, parse_program, RefineProgram, SkippedCall};

/// One line of a program cache: a whole-document program by record id.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramRecord {
    pub id: String,
    pub program: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineSummary {
    pub docs: u64,
    pub chunks: u64,
    pub flagged_chunks: u64,
    pub programs_parsed: u64,
    pub parse_failures: u64,
    pub request_failures: u64,
    pub missing_programs: u64,
    pub skipped_calls: u64,
    pub dropped_calls: u64,
    pub input_words: u64,
    pub output_words: u64,
    /// Output words over input words across the run.
    pub refined_tokens_ratio: f64,
    pub untouched: u64,
    pub empty: u64,
}

impl RefineSummary {
    pub fn merge(&mut self, other: &Self) {
        self.docs += other.docs;
        self.chunks += other.chunks;
        self.flagged_chunks += other.flagged_chunks;
        self.programs_parsed += other.programs_parsed;
        self.parse_failures += other.parse_failures;
        self.request_failures += other.request_failures;
        self.missing_programs += other.missing_programs;
        self.skipped_calls += other.skipped_calls;
        self.dropped_calls += other.dropped_calls;
        self.input_words += other.input_words;
        self.output_words += other.output_words;
        self.untouched += other.untouched;
        self.empty += other.empty;
        self.refined_tokens_ratio = if self.input_words == 0 {
            0.0
        } else {
            self.output_words as f64 / self.input_words as f64
        };
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineReportLine {
    pub id: String,
    pub chunks: usize,
    pub program: String,
    pub applied: usize,
    pub skipped: Vec<SkippedCall>,
    pub dropped: Vec<DroppedCall>,
    pub parse_failures: usize,
    pub request_failures: usize,
    pub untouched: bool,
    pub output_empty: bool,
}

struct DocResult {
    refined: CorpusRecord,
    program: RefineProgram,
    report: RefineReportLine,
    counts: RefineSummary,
}

fn finish_doc(
    record: &CorpusRecord,
    program: RefineProgram,
    dropped: Vec<DroppedCall>,
    mut counts: RefineSummary,
    chunks: usize,
) -> DocResult {
    let doc = LineIndexedDoc::new(&record.text);
    let (text, exec) = execute_program(&doc, &program);
    counts.docs = 1;
    counts.skipped_calls = exec.skipped.len() as u64;
    counts.dropped_calls = dropped.len() as u64;
    counts.input_words = word_count(&record.text) as u64;
    counts.output_words = word_count(&text) as u64;
    counts.untouched = exec.untouched as u64;
    counts.empty = exec.output_empty as u64;
    let report = RefineReportLine {
        id: record.id.clone(),
        chunks,
        program: program.serialize(),
        applied: exec.applied,
        skipped: exec.skipped,
        dropped,
        parse_failures: counts.parse_failures as usize,
        request_failures: counts.request_failures as usize,
        untouched: exec.untouched,
        output_empty: exec.output_empty,
    };
    DocResult {
        refined: CorpusRecord {
            id: record.id.clone(),
            text,
            score: record.score,
        },
        program,
        report,
        counts,
    }
}

fn refine_doc(record: &CorpusRecord, model: &dyn ChatModel, manifest: &RunManifest) -> DocResult {
    let mut cfg = manifest.chunk;
    cfg.mode = ChunkMode::InferenceGreedy;
    let doc = LineIndexedDoc::new(&record.text);
    let chunks = split_document(&doc, &cfg);
    let mut counts = RefineSummary {
        chunks: chunks.len() as u64,
        ..RefineSummary::default()
    };
    let programs: Vec<RefineProgram> = chunks
        .iter()
        .map(|chunk| {
            if chunk.flagged_skipped {
                counts.flagged_chunks += 1;
                return RefineProgram::keep_all();
            }
            match request_program(model, &chunk.text) {
                Ok(completion) => match parse_program(&completion.text) {
                    Ok(p) => {
                        counts.programs_parsed += 1;
                        p
                    }
                    Err(e) => {
                        debug!("{} chunk {}: {e}", record.id, chunk.index);
                        counts.parse_failures += 1;
                        RefineProgram::keep_all()
                    }
                },
                Err(e) => {
                    warn!("{} chunk {}: {e}", record.id, chunk.index);
                    counts.request_failures += 1;
                    RefineProgram::keep_all()
                }
            }
        })
        .collect();
    let merged = merge_chunk_programs(&chunks, &programs).expect("one program per chunk");
    finish_doc(record, merged.program, merged.dropped, counts, chunks.len())
}

fn cached_doc(record: &CorpusRecord, cache: &HashMap<String, String>) -> DocResult {
    let mut counts = RefineSummary::default();
    let program = match cache.get(&record.id) {
        None => {
            counts.missing_programs += 1;
            RefineProgram::keep_all()
        }
        Some(text) => match parse_program(text) {
            Ok(p) => {
                counts.programs_parsed += 1;
                p
            }
            Err(e) => {
                debug!("{}: {e}", record.id);
                counts.parse_failures += 1;
                RefineProgram::keep_all()
            }
        },
    };
    finish_doc(record, program, Vec::new(), counts, 0)
}

fn output_paths(manifest: &RunManifest, write_programs: bool) -> Vec<PathBuf> {
    let mut paths = vec![manifest.output.clone()];
    paths.extend(manifest.report.clone());
    if write_programs {
        paths.extend(manifest.programs.clone());
    }
    paths
}

fn write_doc(
    manifest: &RunManifest,
    write_programs: bool,
) -> impl FnMut(&mut RefineSummary, &mut super::sink::Outputs, DocResult) -> Result<(), PipelineError> + '_
{
    let report_idx = manifest.report.as_ref().map(|_| 1);
    let programs_idx =
        (write_programs && manifest.programs.is_some()).then(|| 1 + report_idx.is_some() as usize);
    move |summary, outputs, result| {
        outputs.write_json(0, &result.refined)?;
        if let Some(i) = report_idx {
            outputs.write_json(i, &result.report)?;
        }
        if let Some(i) = programs_idx {
            outputs.write_json(
                i,
                &ProgramRecord {
                    id: result.refined.id.clone(),
                    program: result.program.serialize(),
                },
            )?;
        }
        summary.merge(&result.counts);
        Ok(())
    }
}

/// Chunks every document, asks `model` for a program per chunk, merges and
/// executes. Failed requests and unparsable programs fall back to
/// `keep_all()`, so every input record yields exactly one output record.
pub fn run_refine(
    manifest: &RunManifest,
    model: &dyn ChatModel,
) -> Result<RefineSummary, PipelineError> {
    manifest.chunk.validate()?;
    let progress = drive(
        manifest,
        &output_paths(manifest, true),
        |record| refine_doc(record, model, manifest),
        write_doc(manifest, true),
    )?;
    info!("refined {} records", progress.processed);
    Ok(progress.summary)
}

/// Executes cached whole-document programs; records without a program are
/// copied unchanged.
pub fn run_execute(manifest: &RunManifest) -> Result<RefineSummary, PipelineError> {
    let path = manifest
        .programs
        .as_ref()
        .ok_or_else(|| PipelineError::Manifest("execute-only mode needs a programs file".into()))?;
    let cache = load_program_cache(path)?;
    let progress = drive(
        manifest,
        &output_paths(manifest, false),
        |record| cached_doc(record, &cache),
        write_doc(manifest, false),
    )?;
    info!("executed {} records", progress.processed);
    Ok(progress.summary)
}

pub fn load_program_cache(path: &Path) -> Result<HashMap<String, String>, PipelineError> {
    let file = File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let mut cache = HashMap::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| PipelineError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ProgramRecord =
            serde_json::from_str(&line).map_err(|e| parse_error(path, idx as u64 + 1, e))?;
        cache.insert(record.id, record.program);
    }
    Ok(cache)
}
