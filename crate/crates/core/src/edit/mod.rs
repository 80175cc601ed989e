//! Character-level edit scripts between an original and a refined text.
//!
//! Indices are Unicode scalar positions, never byte offsets. A script is a
//! monotone tiling of both sides by `Equal`/`Delete`/`Insert`/`Replace` spans,
//! with adjacent spans of the same tag coalesced into maximal runs.

mod exact;
mod hierarchical;

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound on `|source| * |target|` for a single exact DP table.
pub const EXACT_CELL_LIMIT: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpcodeTag {
    Equal,
    Delete,
    Insert,
    Replace,
}

/// One span of an edit script.
///
/// `inserted` holds the target characters for `Insert` and `Replace` spans so
/// that a script can be replayed against the source alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditOp {
    pub tag: OpcodeTag,
    pub src: Range<usize>,
    pub dst: Range<usize>,
    pub inserted: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditScript {
    pub ops: Vec<EditOp>,
    pub src_len: usize,
    pub dst_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EditMode {
    /// Full Levenshtein DP with deterministic backtracking; minimal cost.
    ExactDp,
    /// Line-level matching first, then character DP inside changed regions.
    #[default]
    Hierarchical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct SpanStats {
    pub max_insert_chars: usize,
    pub max_replace_chars: usize,
    pub total_deleted_chars: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EditError {
    #[error("exact DP needs {cells} cells, limit is {limit}")]
    SizeLimitExceeded { cells: u128, limit: usize },
    #[error("input is not valid UTF-8: {0}")]
    InvalidUnicode(#[from] std::str::Utf8Error),
    #[error("script expects a source of {expected} chars, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
}

/// Computes an edit script turning `source` into `target`.
pub fn compute_edit_script(
    source: &str,
    target: &str,
    mode: EditMode,
) -> Result<EditScript, EditError> {
    let a: Vec<char> = source.chars().collect();
    let b: Vec<char> = target.chars().collect();
    compute_edit_script_chars(&a, &b, mode)
}

/// Same as [`compute_edit_script`] for raw bytes that still need validating.
pub fn compute_edit_script_utf8(
    source: &[u8],
    target: &[u8],
    mode: EditMode,
) -> Result<EditScript, EditError> {
    let source = std::str::from_utf8(source)?;
    let target = std::str::from_utf8(target)?;
    compute_edit_script(source, target, mode)
}

pub fn compute_edit_script_chars(
    a: &[char],
    b: &[char],
    mode: EditMode,
) -> Result<EditScript, EditError> {
    let mut builder = ScriptBuilder::new(b);
    match mode {
        EditMode::ExactDp => {
            let cells = a.len() as u128 * b.len() as u128;
            if cells > EXACT_CELL_LIMIT as u128 {
                return Err(EditError::SizeLimitExceeded {
                    cells,
                    limit: EXACT_CELL_LIMIT,
                });
            }
            exact::align(a, b, &mut builder);
        }
        EditMode::Hierarchical => hierarchical::align(a, b, &mut builder),
    }
    Ok(builder.finish(a.len(), b.len()))
}

/// Source ranges of the `Delete` spans, ascending and non-overlapping.
pub fn extract_deletions(script: &EditScript) -> Vec<Range<usize>> {
    script
        .ops
        .iter()
        .filter(|op| op.tag == OpcodeTag::Delete)
        .map(|op| op.src.clone())
        .collect()
}

pub fn span_stats(script: &EditScript) -> SpanStats {
    let mut stats = SpanStats::default();
    for op in &script.ops {
        match op.tag {
            OpcodeTag::Equal => {}
            OpcodeTag::Delete => stats.total_deleted_chars += op.src.len(),
            OpcodeTag::Insert => stats.max_insert_chars = stats.max_insert_chars.max(op.dst.len()),
            OpcodeTag::Replace => {
                stats.max_replace_chars = stats.max_replace_chars.max(op.dst.len())
            }
        }
    }
    stats
}

/// Replays `script` against `source`.
pub fn apply_edit_script(source: &str, script: &EditScript) -> Result<String, EditError> {
    let chars: Vec<char> = source.chars().collect();
    if chars.len() != script.src_len {
        return Err(EditError::LengthMismatch {
            expected: script.src_len,
            actual: chars.len(),
        });
    }
    let mut out = String::with_capacity(source.len());
    for op in &script.ops {
        match op.tag {
            OpcodeTag::Equal => out.extend(&chars[op.src.clone()]),
            OpcodeTag::Delete => {}
            OpcodeTag::Insert | OpcodeTag::Replace => out.push_str(&op.inserted),
        }
    }
    Ok(out)
}

/// Removes `deletions` (ascending, non-overlapping char ranges) from `source`.
pub fn remove_char_ranges(source: &str, deletions: &[Range<usize>]) -> String {
    let mut out = String::with_capacity(source.len());
    let mut next = deletions.iter().peekable();
    for (idx, ch) in source.chars().enumerate() {
        while next.peek().is_some_and(|r| r.end <= idx) {
            next.next();
        }
        if next.peek().is_some_and(|r| r.contains(&idx)) {
            continue;
        }
        out.push(ch);
    }
    out
}

/// The source with only the script's deletions applied; inserts and replaces
/// are ignored, so replaced source text survives unchanged.
pub fn deletion_projection(source: &str, script: &EditScript) -> String {
    remove_char_ranges(source, &extract_deletions(script))
}

impl EditScript {
    /// Unit-cost edit distance represented by this script.
    pub fn cost(&self) -> usize {
        self.ops
            .iter()
            .map(|op| match op.tag {
                OpcodeTag::Equal => 0,
                OpcodeTag::Delete => op.src.len(),
                OpcodeTag::Insert => op.dst.len(),
                OpcodeTag::Replace => op.src.len().max(op.dst.len()),
            })
            .sum()
    }

    /// Checks the tiling and span-shape invariants against the two texts.
    pub fn is_valid_for(&self, source: &[char], target: &[char]) -> bool {
        if source.len() != self.src_len || target.len() != self.dst_len {
            return false;
        }
        let (mut i, mut j) = (0, 0);
        for (k, op) in self.ops.iter().enumerate() {
            if op.src.start != i || op.dst.start != j {
                return false;
            }
            if op.src.end < op.src.start || op.dst.end < op.dst.start {
                return false;
            }
            if k > 0 && self.ops[k - 1].tag == op.tag {
                return false;
            }
            let shape_ok = match op.tag {
                OpcodeTag::Equal => {
                    !op.src.is_empty()
                        && op.src.len() == op.dst.len()
                        && source.get(op.src.clone()) == target.get(op.dst.clone())
                }
                OpcodeTag::Delete => !op.src.is_empty() && op.dst.is_empty(),
                OpcodeTag::Insert => op.src.is_empty() && !op.dst.is_empty(),
                OpcodeTag::Replace => !op.src.is_empty() && !op.dst.is_empty(),
            };
            let text_ok = match op.tag {
                OpcodeTag::Insert | OpcodeTag::Replace => target
                    .get(op.dst.clone())
                    .is_some_and(|t| t.iter().copied().eq(op.inserted.chars())),
                _ => op.inserted.is_empty(),
            };
            if !shape_ok || !text_ok {
                return false;
            }
            i = op.src.end;
            j = op.dst.end;
        }
        i == self.src_len && j == self.dst_len
    }
}

/// Accumulates runs left to right, merging neighbours with the same tag.
pub(crate) struct ScriptBuilder<'t> {
    target: &'t [char],
    ops: Vec<EditOp>,
    i: usize,
    j: usize,
}

impl<'t> ScriptBuilder<'t> {
    pub(crate) fn new(target: &'t [char]) -> Self {
        Self {
            target,
            ops: Vec::new(),
            i: 0,
            j: 0,
        }
    }

    pub(crate) fn push(&mut self, tag: OpcodeTag, src_len: usize, dst_len: usize) {
        if src_len == 0 && dst_len == 0 {
            return;
        }
        let src = self.i..self.i + src_len;
        let dst = self.j..self.j + dst_len;
        self.i += src_len;
        self.j += dst_len;
        let text = matches!(tag, OpcodeTag::Insert | OpcodeTag::Replace);
        if let Some(last) = self.ops.last_mut() {
            if last.tag == tag {
                last.src.end = src.end;
                last.dst.end = dst.end;
                if text {
                    last.inserted.extend(&self.target[dst]);
                }
                return;
            }
        }
        let inserted = if text {
            self.target[dst.clone()].iter().collect()
        } else {
            String::new()
        };
        self.ops.push(EditOp {
            tag,
            src,
            dst,
            inserted,
        });
    }

    fn finish(self, src_len: usize, dst_len: usize) -> EditScript {
        debug_assert_eq!((self.i, self.j), (src_len, dst_len));
        EditScript {
            ops: self.ops,
            src_len,
            dst_len,
        }
    }
}
