use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{generate_corpus, score_recovery, LabeledDoc, NoiseSpec, OracleExpert, RecoveryScore};
use crate::chunk::{merge_chunk_programs, split_document, Chunk, ChunkConfig, ChunkMode};
use crate::distill::{Thresholds, TrainingRecord};
use crate::doc::LineIndexedDoc;
use crate::edit::{remove_char_ranges, EditMode};
use crate::pipeline::{
    run_distill, write_corpus, CorpusRecord, DistillSummary, PipelineError, RunManifest, RunMode,
};
use crate::program::{execute_program, parse_program, RefineProgram};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClosureConfig {
    pub spec: NoiseSpec,
    pub docs: usize,
    pub chunk: ChunkConfig,
    pub edit_mode: EditMode,
    pub workers: usize,
}

impl Default for ClosureConfig {
    fn default() -> Self {
        Self {
            spec: NoiseSpec::standard(7),
            docs: 1000,
            // small enough that most documents span several chunks
            chunk: ChunkConfig {
                window: 60,
                mode: ChunkMode::TrainingOverlap,
                overlap_target: 20,
            },
            edit_mode: EditMode::Hierarchical,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureReport {
    pub distill: DistillSummary,
    pub rejection_rate: f64,
    pub multi_chunk_docs: usize,
    pub recovery: RecoveryScore,
    pub elapsed_secs: f64,
}

/// The chunk text an oracle expert would return: the chunk with every
/// injected span inside it removed.
pub fn oracle_chunk_text(doc: &LabeledDoc, ldoc: &LineIndexedDoc<'_>, chunk: &Chunk) -> String {
    let first_line = chunk.line_offset - chunk.context_lines;
    let start = ldoc.spans()[first_line].chars.start;
    let end = start + chunk.text.chars().count();
    let local: Vec<_> = doc
        .injected_spans
        .iter()
        .filter(|s| start <= s.start && s.end <= end)
        .map(|s| s.start - start..s.end - start)
        .collect();
    remove_char_ranges(&chunk.text, &local)
}

/// Generates a labelled corpus, distils it through an oracle expert, then
/// replays the distilled chunk programs over the noisy documents and scores
/// the result against the injected spans.
pub fn run_oracle_closure(
    cfg: &ClosureConfig,
    workdir: &Path,
) -> Result<ClosureReport, PipelineError> {
    let started = Instant::now();
    let docs = generate_corpus(&cfg.spec, cfg.docs);

    let mut expert = OracleExpert::new();
    let mut doc_chunks: Vec<Vec<Chunk>> = Vec::with_capacity(docs.len());
    for doc in &docs {
        let ldoc = LineIndexedDoc::new(&doc.noisy_text);
        let chunks = split_document(&ldoc, &cfg.chunk);
        for chunk in &chunks {
            expert.insert(chunk.text.clone(), oracle_chunk_text(doc, &ldoc, chunk));
        }
        doc_chunks.push(chunks);
    }

    let input = workdir.join("closure-corpus.jsonl");
    let records: Vec<CorpusRecord> = docs
        .iter()
        .map(|d| CorpusRecord {
            id: d.id.clone(),
            text: d.noisy_text.clone(),
            score: None,
        })
        .collect();
    write_corpus(&input, &records)?;
    let manifest = RunManifest {
        mode: RunMode::Distill,
        input,
        output: workdir.join("closure-train.jsonl"),
        rejects: Some(workdir.join("closure-rejects.jsonl")),
        chunk: cfg.chunk,
        thresholds: Thresholds::default(),
        edit_mode: cfg.edit_mode,
        workers: cfg.workers,
        ..RunManifest::default()
    };
    let summary = run_distill(&manifest, &expert)?;

    let mut programs: HashMap<(String, usize), RefineProgram> = HashMap::new();
    let file =
        fs::File::open(&manifest.output).map_err(|e| PipelineError::io(&manifest.output, e))?;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| PipelineError::io(&manifest.output, e))?;
        let record: TrainingRecord = serde_json::from_str(&line)
            .map_err(|e| PipelineError::Manifest(format!("training record: {e}")))?;
        let program = parse_program(&record.output)
            .map_err(|e| PipelineError::Manifest(format!("training program: {e}")))?;
        programs.insert((record.doc_id, record.chunk_index), program);
    }

    let refined: Vec<String> = docs
        .iter()
        .zip(&doc_chunks)
        .map(|(doc, chunks)| {
            let chunk_programs: Vec<RefineProgram> = chunks
                .iter()
                .map(|c| {
                    programs
                        .get(&(doc.id.clone(), c.index))
                        .cloned()
                        .unwrap_or_else(RefineProgram::keep_all)
                })
                .collect();
            let merged = merge_chunk_programs(chunks, &chunk_programs).expect("aligned programs");
            execute_program(&LineIndexedDoc::new(&doc.noisy_text), &merged.program).0
        })
        .collect();
    let recovery = score_recovery(&docs, &refined).expect("aligned corpus");

    let rejection_rate = if summary.pairs_attempted == 0 {
        0.0
    } else {
        summary.rejected() as f64 / summary.pairs_attempted as f64
    };
    Ok(ClosureReport {
        rejection_rate,
        multi_chunk_docs: doc_chunks.iter().filter(|c| c.len() > 1).count(),
        distill: summary,
        recovery,
        elapsed_secs: started.elapsed().as_secs_f64(),
    })
}
