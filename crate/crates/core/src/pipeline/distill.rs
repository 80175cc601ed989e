use std::collections::BTreeMap;
use std::path::PathBuf;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::{drive, CorpusRecord, PipelineError, RunManifest};
use crate::chunk::split_document;
use crate::distill::{distill_chunk, DistillConfig, RejectReason, RejectRecord, TrainingRecord};
use crate::doc::LineIndexedDoc;
use crate::expert::{request_e2e_refinement, ChatModel, ClientError};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistillSummary {
    pub docs: u64,
    pub pairs_attempted: u64,
    pub accepted: u64,
    /// Accepted pairs whose program is `keep_all()`.
    pub accepted_keep_all: u64,
    pub rejected_by_reason: BTreeMap<RejectReason, u64>,
    /// Chunks longer than the window; never sent to the expert.
    pub skipped_chunks: u64,
}

impl DistillSummary {
    pub fn rejected(&self) -> u64 {
        self.rejected_by_reason.values().sum()
    }

    pub fn expert_failures(&self) -> u64 {
        self.rejected_by_reason
            .get(&RejectReason::ExpertError)
            .copied()
            .unwrap_or(0)
    }

    pub fn merge(&mut self, other: &Self) {
        self.docs += other.docs;
        self.pairs_attempted += other.pairs_attempted;
        self.accepted += other.accepted;
        self.accepted_keep_all += other.accepted_keep_all;
        self.skipped_chunks += other.skipped_chunks;
        for (reason, n) in &other.rejected_by_reason {
            *self.rejected_by_reason.entry(*reason).or_default() += n;
        }
    }
}

struct DocResult {
    accepted: Vec<TrainingRecord>,
    rejected: Vec<RejectRecord>,
    counts: DistillSummary,
}

fn distill_doc(record: &CorpusRecord, model: &dyn ChatModel, manifest: &RunManifest) -> DocResult {
    let cfg = DistillConfig {
        thresholds: manifest.thresholds,
        edit_mode: manifest.edit_mode,
    };
    let doc = LineIndexedDoc::new(&record.text);
    let mut out = DocResult {
        accepted: Vec::new(),
        rejected: Vec::new(),
        counts: DistillSummary {
            docs: 1,
            ..DistillSummary::default()
        },
    };
    for chunk in split_document(&doc, &manifest.chunk) {
        if chunk.flagged_skipped {
            out.counts.skipped_chunks += 1;
            continue;
        }
        out.counts.pairs_attempted += 1;
        let outcome = match request_e2e_refinement(model, &chunk.text) {
            Ok(response) => distill_chunk(&chunk, &response.refined_text, &cfg),
            Err(ClientError::Malformed(msg)) => {
                warn!(
                    "{} chunk {}: malformed response: {msg}",
                    record.id, chunk.index
                );
                Err(RejectReason::MalformedResponse)
            }
            Err(e) => {
                warn!("{} chunk {}: {e}", record.id, chunk.index);
                Err(RejectReason::ExpertError)
            }
        };
        match outcome {
            Ok(pair) => {
                out.counts.accepted += 1;
                out.counts.accepted_keep_all += pair.program.is_keep_all() as u64;
                out.accepted.push(TrainingRecord {
                    doc_id: record.id.clone(),
                    chunk_index: chunk.index,
                    input: chunk.text,
                    output: pair.program.serialize(),
                });
            }
            Err(reason) => {
                *out.counts.rejected_by_reason.entry(reason).or_default() += 1;
                out.rejected.push(RejectRecord {
                    doc_id: record.id.clone(),
                    chunk_index: chunk.index,
                    reason,
                });
            }
        }
    }
    out
}

/// Sends every chunk to the expert, converts accepted refinements into
/// programs and writes training records plus a reject log.
///
/// `accepted + rejected == pairs_attempted` always holds.
pub fn run_distill(
    manifest: &RunManifest,
    model: &dyn ChatModel,
) -> Result<DistillSummary, PipelineError> {
    manifest.chunk.validate()?;
    let mut paths: Vec<PathBuf> = vec![manifest.output.clone()];
    paths.extend(manifest.rejects.clone());
    let has_rejects = manifest.rejects.is_some();
    let progress = drive(
        manifest,
        &paths,
        |record| distill_doc(record, model, manifest),
        |summary: &mut DistillSummary, outputs, result: DocResult| {
            for record in &result.accepted {
                outputs.write_json(0, record)?;
            }
            if has_rejects {
                for record in &result.rejected {
                    outputs.write_json(1, record)?;
                }
            }
            summary.merge(&result.counts);
            Ok(())
        },
    )?;
    info!(
        "distilled {} records: {} accepted, {} rejected",
        progress.processed,
        progress.summary.accepted,
        progress.summary.rejected()
    );
    Ok(progress.summary)
}
