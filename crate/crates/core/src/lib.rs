//! Deletion-only refinement of text corpora.
//!
//! Expert rewrites are reduced to edit scripts, filtered down to their
//! deletions and encoded as small programs (`remove_lines`, `remove_str`,
//! `keep_all`). The same programs are executed over large corpora with
//! strict safety checks, so refined text is always a subsequence of the
//! original.
//!
//! ```
//! use delrefine_core::{distill_pair, execute_program, DistillConfig, LineIndexedDoc};
//!
//! let original = "Home | About\nThe article.\n";
//! let refined = "The article.\n";
//! let pair = distill_pair(original, refined, &DistillConfig::default()).unwrap();
//! assert_eq!(pair.program.serialize(), "remove_lines(1, 1)");
//! let (out, _) = execute_program(&LineIndexedDoc::new(original), &pair.program);
//! assert_eq!(out, refined);
//! ```

pub mod chunk;
pub mod distill;
pub mod doc;
pub mod edit;
pub mod expert;
pub mod metrics;
pub mod pipeline;
pub mod program;
pub mod synth;

pub use chunk::{merge_chunk_programs, split_document, Chunk, ChunkConfig, ChunkMode};
pub use distill::{
    distill_chunk, distill_pair, emit_reject_log, emit_training_records, map_deletions_to_calls,
    DistillConfig, DistilledPair, RejectReason, RejectRecord, Thresholds, TrainingRecord,
};
pub use doc::{word_count, LineIndexedDoc};
pub use edit::{
    apply_edit_script, compute_edit_script, extract_deletions, span_stats, EditMode, EditOp,
    EditScript, OpcodeTag, SpanStats,
};
pub use expert::{
    parse_e2e_response, request_e2e_refinement, request_program, ChatModel, ClientError,
    Completion, E2EResponse, EndpointConfig, HttpChatModel,
};
pub use metrics::{compute_stats, RefineStats, StatsAccumulator};
pub use pipeline::{
    run_distill, run_execute, run_manifest, run_refine, CorpusRecord, DistillSummary,
    RefineSummary, RunManifest, RunMode, RunSummary,
};
pub use program::{
    execute_program, offset_program, parse_program, serialize_program, Call, ExecutionReport,
    RefineProgram, SkipReason,
};
pub use synth::{generate_corpus, score_recovery, LabeledDoc, NoiseKind, NoiseSpec};
