//! Window-bounded document chunking and merging of per-chunk programs.
//!
//! Lines are packed greedily while the running word count stays within the
//! window. A single line longer than the window becomes its own chunk and is
//! flagged so it passes through unrefined. Chunk programs use chunk-local
//! 1-based line numbers and are shifted back to document lines on merge.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doc::{word_count, LineIndexedDoc};
use crate::program::{Call, ProgramError, RefineProgram};

pub const DEFAULT_WINDOW_WORDS: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChunkMode {
    /// Disjoint chunks for inference; texts concatenate back to the document.
    #[default]
    InferenceGreedy,
    /// Each chunk after the first is prefixed with trailing lines of the
    /// preceding text as read-only context.
    TrainingOverlap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChunkConfig {
    /// Maximum chunk length in whitespace-delimited words.
    pub window: usize,
    pub mode: ChunkMode,
    /// Words of backward context in training mode.
    pub overlap_target: usize,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self::with_window(DEFAULT_WINDOW_WORDS)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChunkError {
    #[error("window must be positive")]
    ZeroWindow,
    #[error("overlap target {overlap} must be smaller than the window {window}")]
    OverlapTooLarge { overlap: usize, window: usize },
    #[error("{chunks} chunks but {programs} programs")]
    LengthMismatch { chunks: usize, programs: usize },
    #[error(transparent)]
    Program(#[from] ProgramError),
}

impl ChunkConfig {
    /// Inference-mode config with the default 10% training overlap.
    pub fn with_window(window: usize) -> Self {
        Self {
            window,
            mode: ChunkMode::InferenceGreedy,
            overlap_target: window / 10,
        }
    }

    pub fn validate(&self) -> Result<(), ChunkError> {
        if self.window == 0 {
            return Err(ChunkError::ZeroWindow);
        }
        if self.overlap_target >= self.window {
            return Err(ChunkError::OverlapTooLarge {
                overlap: self.overlap_target,
                window: self.window,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub index: usize,
    /// 0-based index of the chunk's first own (non-context) document line.
    pub line_offset: usize,
    /// Number of own lines.
    pub line_count: usize,
    /// Leading context lines in `text` (training mode only).
    pub context_lines: usize,
    /// Byte length of the context prefix of `text`.
    pub context_bytes: usize,
    pub text: String,
    pub flagged_skipped: bool,
}

impl Chunk {
    /// The chunk text without its context prefix.
    pub fn own_text(&self) -> &str {
        &self.text[self.context_bytes..]
    }

    /// Character length of the context prefix.
    pub fn context_chars(&self) -> usize {
        self.text[..self.context_bytes].chars().count()
    }
}

/// Splits a document into chunks of at most `cfg.window` words.
///
/// # Panics
/// If `cfg` fails [`ChunkConfig::validate`].
pub fn split_document(doc: &LineIndexedDoc<'_>, cfg: &ChunkConfig) -> Vec<Chunk> {
    cfg.validate().expect("invalid chunk config");
    let words: Vec<usize> = doc.lines().map(word_count).collect();
    let n = words.len();

    // (first line, last line exclusive, flagged), 0-based
    let mut groups: Vec<(usize, usize, bool)> = Vec::new();
    let mut start = 0;
    let mut current_words = 0;
    let mut open = false;
    for (idx, &w) in words.iter().enumerate() {
        if open && current_words + w <= cfg.window {
            current_words += w;
            continue;
        }
        if open {
            groups.push((start, idx, false));
            open = false;
        }
        if w <= cfg.window {
            start = idx;
            current_words = w;
            open = true;
        } else {
            groups.push((idx, idx + 1, true));
        }
    }
    if open {
        groups.push((start, n, false));
    }

    let byte_start = |line: usize| doc.spans()[line].bytes.start;
    let byte_end = |last_line: usize| doc.line_bytes_with_newline(last_line + 1).end;

    groups
        .into_iter()
        .enumerate()
        .map(|(index, (first, end, flagged))| {
            let own_words: usize = words[first..end].iter().sum();
            let mut context_lines = 0;
            if cfg.mode == ChunkMode::TrainingOverlap && !flagged {
                let mut ctx_words = 0;
                while context_lines < first {
                    let w = words[first - context_lines - 1];
                    if ctx_words + w > cfg.overlap_target || own_words + ctx_words + w > cfg.window
                    {
                        break;
                    }
                    ctx_words += w;
                    context_lines += 1;
                }
            }
            let text_start = byte_start(first - context_lines);
            let own_start = byte_start(first);
            Chunk {
                index,
                line_offset: first,
                line_count: end - first,
                context_lines,
                context_bytes: own_start - text_start,
                text: doc.text()[text_start..byte_end(end - 1)].to_owned(),
                flagged_skipped: flagged,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropReason {
    CallReferencesContextLine,
    CallOutsideChunk,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DroppedCall {
    pub chunk_index: usize,
    pub call: Call,
    pub reason: DropReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergedProgram {
    pub program: RefineProgram,
    pub dropped: Vec<DroppedCall>,
}

/// Shifts each chunk's program into document coordinates and concatenates.
///
/// Flagged chunks and `keep_all()` programs contribute nothing. Calls that
/// touch context lines or lines past the chunk's own lines are dropped and
/// reported. With no surviving calls the result is `keep_all()`.
pub fn merge_chunk_programs(
    chunks: &[Chunk],
    programs: &[RefineProgram],
) -> Result<MergedProgram, ChunkError> {
    if chunks.len() != programs.len() {
        return Err(ChunkError::LengthMismatch {
            chunks: chunks.len(),
            programs: programs.len(),
        });
    }
    let mut calls = Vec::new();
    let mut dropped = Vec::new();
    for (chunk, program) in chunks.iter().zip(programs) {
        if chunk.flagged_skipped || program.is_keep_all() {
            continue;
        }
        let first_own = chunk.context_lines + 1;
        let last_own = chunk.context_lines + chunk.line_count;
        // executed alone, text ending in a newline has one more (empty) line
        let local_lines = chunk.text.matches('\n').count() + 1;
        let empty_tail = (local_lines > last_own).then_some(local_lines);
        for call in program.calls() {
            let Some((lo, hi)) = call.line_bounds() else {
                continue;
            };
            // the empty line is not an own line; a range ending on it loses nothing
            let (call, hi) = match *call {
                Call::RemoveLines { start_line, .. }
                    if Some(hi) == empty_tail && lo <= last_own =>
                {
                    (
                        Call::RemoveLines {
                            start_line,
                            end_line: last_own,
                        },
                        last_own,
                    )
                }
                _ => (call.clone(), hi),
            };
            let reason = if lo < first_own {
                Some(DropReason::CallReferencesContextLine)
            } else if hi > last_own {
                Some(DropReason::CallOutsideChunk)
            } else {
                None
            };
            match reason {
                Some(reason) => dropped.push(DroppedCall {
                    chunk_index: chunk.index,
                    call,
                    reason,
                }),
                // local line l maps to document line l - context + line_offset
                None => {
                    calls.push(shift_down(&call, chunk.context_lines)?.offset(chunk.line_offset)?)
                }
            }
        }
    }
    Ok(MergedProgram {
        program: RefineProgram::from_deletions(calls)?,
        dropped,
    })
}

fn shift_down(call: &Call, by: usize) -> Result<Call, ProgramError> {
    Ok(match call {
        Call::RemoveLines {
            start_line,
            end_line,
        } => Call::RemoveLines {
            start_line: start_line - by,
            end_line: end_line - by,
        },
        Call::RemoveStr { line, del_str } => Call::RemoveStr {
            line: line - by,
            del_str: del_str.clone(),
        },
        Call::KeepAll => Call::KeepAll,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::{execute_program, parse_program};

    fn greedy(window: usize) -> ChunkConfig {
        ChunkConfig::with_window(window)
    }

    #[test]
    fn small_doc_is_one_chunk() {
        let doc = LineIndexedDoc::new("a b\nc d\ne f");
        let chunks = split_document(&doc, &greedy(100));
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].line_offset, 0);
        assert_eq!(chunks[0].line_count, 3);
        assert_eq!(chunks[0].text, doc.text());
    }

    #[test]
    fn five_word_lines_pair_up_under_window_ten() {
        let line = "w w w w w";
        let text = [line; 5].join("\n");
        let doc = LineIndexedDoc::new(&text);
        let chunks = split_document(&doc, &greedy(10));
        let counts: Vec<_> = chunks.iter().map(|c| c.line_count).collect();
        assert_eq!(counts, vec![2, 2, 1]);
        let offsets: Vec<_> = chunks.iter().map(|c| c.line_offset).collect();
        assert_eq!(offsets, vec![0, 2, 4]);
        assert_eq!(
            chunks.iter().map(|c| c.text.as_str()).collect::<String>(),
            text
        );
    }

    #[test]
    fn long_line_is_flagged() {
        let text = vec!["word"; 10_000].join(" ");
        let doc = LineIndexedDoc::new(&text);
        let chunks = split_document(&doc, &greedy(3000));
        assert_eq!(chunks.len(), 1);
        assert!(chunks[0].flagged_skipped);
        assert_eq!(chunks[0].line_count, 1);
    }

    #[test]
    fn flagged_line_between_normal_lines() {
        let long = vec!["x"; 20].join(" ");
        let text = format!("a b\n{long}\nc d\n");
        let doc = LineIndexedDoc::new(&text);
        let chunks = split_document(&doc, &greedy(5));
        let shape: Vec<_> = chunks
            .iter()
            .map(|c| (c.line_offset, c.line_count, c.flagged_skipped))
            .collect();
        assert_eq!(shape, vec![(0, 1, false), (1, 1, true), (2, 2, false)]);
        assert_eq!(
            chunks.iter().map(|c| c.text.as_str()).collect::<String>(),
            text
        );
    }

    #[test]
    fn training_overlap_prefixes_context() {
        let text = "a a\nb b\nc c\nd d";
        let doc = LineIndexedDoc::new(text);
        let cfg = ChunkConfig {
            window: 4,
            mode: ChunkMode::TrainingOverlap,
            overlap_target: 2,
        };
        let chunks = split_document(&doc, &cfg);
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[1].context_lines, 0, "window already full");

        let cfg = ChunkConfig {
            window: 6,
            mode: ChunkMode::TrainingOverlap,
            overlap_target: 2,
        };
        let text = "a a\nb b\nc c\nd d\ne e";
        let doc = LineIndexedDoc::new(text);
        let chunks = split_document(&doc, &cfg);
        assert_eq!(chunks[1].line_offset, 3);
        assert_eq!(chunks[1].context_lines, 1);
        assert_eq!(chunks[1].text, "c c\nd d\ne e");
        assert_eq!(chunks[1].own_text(), "d d\ne e");
        assert_eq!(chunks[1].context_chars(), 4);
    }

    #[test]
    fn merge_offsets_second_chunk() {
        let text = "1 1 1\n2 2 2\n3 3 3\n4 4 4\n5 5 5\n6 6 6";
        let doc = LineIndexedDoc::new(text);
        let chunks = split_document(&doc, &greedy(9));
        assert_eq!(chunks.len(), 2);
        let programs = vec![
            RefineProgram::keep_all(),
            parse_program("remove_lines(1, 1)").unwrap(),
        ];
        let merged = merge_chunk_programs(&chunks, &programs).unwrap();
        assert_eq!(merged.program.serialize(), "remove_lines(4, 4)");

        let whole = execute_program(&doc, &merged.program).0;
        let per_chunk: String = chunks
            .iter()
            .zip(&programs)
            .map(|(c, p)| execute_program(&LineIndexedDoc::new(&c.text), p).0)
            .collect();
        assert_eq!(whole, per_chunk);
    }

    #[test]
    fn all_keep_all_merges_to_keep_all() {
        let doc = LineIndexedDoc::new("a\nb\nc");
        let chunks = split_document(&doc, &greedy(1));
        let programs = vec![RefineProgram::keep_all(); chunks.len()];
        let merged = merge_chunk_programs(&chunks, &programs).unwrap();
        assert!(merged.program.is_keep_all());
        assert!(merged.dropped.is_empty());
    }

    #[test]
    fn flagged_chunk_contributes_nothing() {
        let text = vec!["x"; 50].join(" ");
        let doc = LineIndexedDoc::new(&text);
        let chunks = split_document(&doc, &greedy(10));
        let programs = vec![parse_program("remove_lines(1, 1)").unwrap()];
        let merged = merge_chunk_programs(&chunks, &programs).unwrap();
        assert!(merged.program.is_keep_all());
    }

    #[test]
    fn context_and_out_of_chunk_calls_are_dropped() {
        let cfg = ChunkConfig {
            window: 6,
            mode: ChunkMode::TrainingOverlap,
            overlap_target: 2,
        };
        let doc = LineIndexedDoc::new("a a\nb b\nc c\nd d\ne e");
        let chunks = split_document(&doc, &cfg);
        let programs = vec![
            RefineProgram::keep_all(),
            parse_program("remove_lines(1, 2)\nremove_str(2, \"d\")\nremove_lines(3, 4)").unwrap(),
        ];
        let merged = merge_chunk_programs(&chunks, &programs).unwrap();
        let reasons: Vec<_> = merged.dropped.iter().map(|d| d.reason).collect();
        assert_eq!(
            reasons,
            vec![
                DropReason::CallReferencesContextLine,
                DropReason::CallOutsideChunk
            ]
        );
        assert!(matches!(
            &merged.program.calls()[0],
            Call::RemoveStr { line: 4, .. }
        ));
    }

    #[test]
    fn mismatched_lengths() {
        let doc = LineIndexedDoc::new("a");
        let chunks = split_document(&doc, &greedy(3));
        assert_eq!(
            merge_chunk_programs(&chunks, &[]),
            Err(ChunkError::LengthMismatch {
                chunks: 1,
                programs: 0
            })
        );
    }

    #[test]
    fn config_validation() {
        assert_eq!(greedy(0).validate(), Err(ChunkError::ZeroWindow));
        let bad = ChunkConfig {
            window: 5,
            mode: ChunkMode::TrainingOverlap,
            overlap_target: 5,
        };
        assert!(matches!(
            bad.validate(),
            Err(ChunkError::OverlapTooLarge { .. })
        ));
        assert_eq!(ChunkConfig::default().overlap_target, 300);
    }
}
