//! Turns (original, expert-refined) pairs into deletion-only programs.
//!
//! The expert output is aligned against the original, inserted and replaced
//! text is discarded, and the remaining deletions are mapped onto
//! `remove_lines` / `remove_str` calls. Pairs whose edits are too heavy, too
//! small or not expressible as calls are rejected with a reason.

use std::io::{self, Write};
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chunk::Chunk;
use crate::doc::LineIndexedDoc;
use crate::edit::{
    compute_edit_script_chars, extract_deletions, remove_char_ranges, span_stats, EditError,
    EditMode, OpcodeTag, SpanStats,
};
use crate::program::{count_occurrences, execute_program, Call, RefineProgram};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// Reject when any inserted or replacing span reaches this many chars.
    pub max_insert_chars: usize,
    /// Reject when fewer than this many chars are deleted (but some are).
    pub min_deleted_chars: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            max_insert_chars: 20,
            min_deleted_chars: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DistillConfig {
    pub thresholds: Thresholds,
    pub edit_mode: EditMode,
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Error, Serialize, Deserialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    #[error("expert inserted or replaced too much text")]
    OverEdit,
    #[error("expert deleted too little text")]
    TooSmallDeletion,
    #[error("deletions cannot be expressed as program calls")]
    AmbiguousMapping,
    #[error("edit script could not be computed")]
    EditFailed,
    #[error("expert request failed")]
    ExpertError,
    #[error("expert response was malformed")]
    MalformedResponse,
}

impl RejectReason {
    pub fn code(self) -> &'static str {
        match self {
            Self::OverEdit => "over-edit",
            Self::TooSmallDeletion => "too-small-deletion",
            Self::AmbiguousMapping => "ambiguous-mapping",
            Self::EditFailed => "edit-failed",
            Self::ExpertError => "expert-error",
            Self::MalformedResponse => "malformed-response",
        }
    }
}

impl From<EditError> for RejectReason {
    fn from(_: EditError) -> Self {
        Self::EditFailed
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistilledPair {
    pub program: RefineProgram,
    pub stats: SpanStats,
    /// Char ranges of the original that the program removes.
    pub deletions: Vec<Range<usize>>,
}

impl DistilledPair {
    pub fn deleted_chars(&self) -> usize {
        self.deletions.iter().map(|r| r.len()).sum()
    }
}

/// Distils a whole-text pair.
pub fn distill_pair(
    original: &str,
    refined: &str,
    cfg: &DistillConfig,
) -> Result<DistilledPair, RejectReason> {
    distill_with_context(original, refined, 0, cfg)
}

/// Distils a chunk; `refined` is the expert output for the whole chunk text.
///
/// Deletions inside the context prefix are ignored, so the program only
/// touches the chunk's own lines.
pub fn distill_chunk(
    chunk: &Chunk,
    refined: &str,
    cfg: &DistillConfig,
) -> Result<DistilledPair, RejectReason> {
    distill_with_context(&chunk.text, refined, chunk.context_chars(), cfg)
}

fn distill_with_context(
    original: &str,
    refined: &str,
    context_chars: usize,
    cfg: &DistillConfig,
) -> Result<DistilledPair, RejectReason> {
    let a: Vec<char> = original.chars().collect();
    let b: Vec<char> = refined.chars().collect();
    let script = compute_edit_script_chars(&a, &b, cfg.edit_mode)?;
    let stats = span_stats(&script);
    if stats.max_insert_chars.max(stats.max_replace_chars) >= cfg.thresholds.max_insert_chars {
        return Err(RejectReason::OverEdit);
    }

    // normalise before clipping so a run straddling the context boundary
    // does not leave a fragment behind
    let doc = LineIndexedDoc::new(original);
    let full = slide_to_line_boundaries(&a, extract_deletions(&script), 0);
    let clipped: Vec<Range<usize>> = normalise_newlines(&doc, &full)
        .into_iter()
        .filter_map(|r| (r.end > context_chars).then(|| r.start.max(context_chars)..r.end))
        .collect();
    let total: usize = clipped.iter().map(|r| r.len()).sum();
    if total == 0 {
        let rewrites = script
            .ops
            .iter()
            .any(|op| matches!(op.tag, OpcodeTag::Insert | OpcodeTag::Replace));
        return if rewrites {
            Err(RejectReason::TooSmallDeletion)
        } else {
            Ok(DistilledPair {
                program: RefineProgram::keep_all(),
                stats,
                deletions: Vec::new(),
            })
        };
    }
    if total < cfg.thresholds.min_deleted_chars {
        return Err(RejectReason::TooSmallDeletion);
    }

    let deletions = if context_chars > 0 {
        slide_to_line_boundaries(&a, clipped, context_chars)
    } else {
        clipped
    };
    let program = map_deletions_to_calls(&doc, &deletions)?;
    let (executed, _) = execute_program(&doc, &program);
    if executed != remove_char_ranges(original, &deletions) {
        return Err(RejectReason::AmbiguousMapping);
    }
    Ok(DistilledPair {
        program,
        stats,
        deletions,
    })
}

/// Merges neighbouring deletions when one can slide across the kept gap
/// between them without changing the output.
fn coalesce(text: &[char], deletions: Vec<Range<usize>>, floor: usize) -> Vec<Range<usize>> {
    let mut out: Vec<Range<usize>> = Vec::with_capacity(deletions.len());
    for next in deletions {
        let Some(prev) = out.last_mut() else {
            out.push(next);
            continue;
        };
        let gap = next.start - prev.end;
        // prev slides right over the gap, or next slides left over it
        let right = (0..gap).all(|i| text[prev.start + i] == text[prev.end + i]);
        let left = next.start - gap >= floor
            && (1..=gap).all(|i| text[next.start - i] == text[next.end - i]);
        if gap == 0 || right {
            prev.end = next.end;
            if gap > 0 {
                prev.start += gap;
            }
        } else if left {
            prev.end = next.end - gap;
        } else {
            out.push(next);
        }
    }
    out
}

/// Shifts each deletion across equal characters so that it starts at a line
/// start and ends after a newline where possible. Deletions that can be
/// joined by such shifts are merged first. Deletions never move into the
/// context prefix or touch a neighbour.
pub fn slide_to_line_boundaries(
    text: &[char],
    deletions: Vec<Range<usize>>,
    floor: usize,
) -> Vec<Range<usize>> {
    let mut deletions = coalesce(text, deletions, floor);
    let n = text.len();
    let score = |r: &Range<usize>| {
        let starts_line = r.start == 0 || text[r.start - 1] == '\n';
        let ends_line = r.end == n || text[r.end - 1] == '\n';
        starts_line as u8 + ends_line as u8
    };
    for idx in 0..deletions.len() {
        let lo = if idx == 0 {
            floor
        } else {
            (deletions[idx - 1].end + 1).max(floor)
        };
        let hi = deletions.get(idx + 1).map_or(n, |r| r.start - 1);
        let cur = deletions[idx].clone();

        let mut best = (score(&cur), 0usize, cur.clone());
        let mut left = cur.clone();
        let mut k = 0;
        while left.start > lo && text[left.start - 1] == text[left.end - 1] {
            left = left.start - 1..left.end - 1;
            k += 1;
            let s = score(&left);
            if s > best.0 {
                best = (s, k, left.clone());
            }
        }
        let mut right = cur.clone();
        k = 0;
        while right.end < hi && text[right.start] == text[right.end] {
            right = right.start + 1..right.end + 1;
            k += 1;
            let s = score(&right);
            if s > best.0 || (s == best.0 && k < best.1) {
                best = (s, k, right.clone());
            }
        }
        deletions[idx] = best.2;
    }
    deletions
}

/// A partly kept line whose newline is deleted can keep that newline instead
/// of the next one when everything in between is deleted; the output is
/// unchanged and the lines in between become whole-line deletions.
fn exchange_newlines(doc: &LineIndexedDoc<'_>, mask: &mut [bool]) {
    let newlines: Vec<usize> = doc.spans().iter().map(|s| s.chars.end).collect();
    for (idx, span) in doc.spans().iter().enumerate() {
        let nl = span.chars.end;
        if !doc.has_newline(idx + 1) || !mask[nl] || mask[span.chars.clone()].iter().all(|&d| d) {
            continue;
        }
        let mut next = nl + 1;
        while next < mask.len() && mask[next] {
            next += 1;
        }
        if next < mask.len() && newlines[idx + 1..].binary_search(&next).is_ok() {
            mask[nl] = false;
            mask[next] = true;
        }
    }
}

fn normalise_newlines(doc: &LineIndexedDoc<'_>, deletions: &[Range<usize>]) -> Vec<Range<usize>> {
    let mut mask = vec![false; doc.char_len()];
    for r in deletions {
        mask[r.clone()].fill(true);
    }
    exchange_newlines(doc, &mut mask);
    let mut out: Vec<Range<usize>> = Vec::new();
    for (idx, _) in mask.iter().enumerate().filter(|(_, &d)| d) {
        match out.last_mut() {
            Some(r) if r.end == idx => r.end += 1,
            _ => out.push(idx..idx + 1),
        }
    }
    out
}

/// Encodes char-range deletions as calls, ordered by line.
///
/// A line whose content and newline are all deleted becomes part of a
/// `remove_lines` range; other deleted segments become `remove_str` calls,
/// which must be unique within their line.
pub fn map_deletions_to_calls(
    doc: &LineIndexedDoc<'_>,
    deletions: &[Range<usize>],
) -> Result<RefineProgram, RejectReason> {
    let mut mask = vec![false; doc.char_len()];
    for r in deletions {
        mask[r.clone()].fill(true);
    }
    exchange_newlines(doc, &mut mask);

    let mut calls = Vec::new();
    let mut run_start: Option<usize> = None;
    let close_run = |calls: &mut Vec<Call>, run: &mut Option<usize>, last: usize| {
        if let Some(start) = run.take() {
            calls.push(Call::RemoveLines {
                start_line: start,
                end_line: last,
            });
        }
    };

    for (idx, span) in doc.spans().iter().enumerate() {
        let number = idx + 1;
        let has_nl = doc.has_newline(number);
        let content = &mask[span.chars.clone()];
        let nl_deleted = has_nl && mask[span.chars.end];
        let all_content = content.iter().all(|&d| d);
        let empty_last = span.chars.is_empty() && !has_nl;
        let full = !empty_last && all_content && (nl_deleted || !has_nl);
        if full {
            run_start.get_or_insert(number);
            continue;
        }
        close_run(&mut calls, &mut run_start, number - 1);
        if nl_deleted {
            return Err(RejectReason::AmbiguousMapping);
        }

        let line: Vec<char> = doc.line(number).unwrap_or_default().chars().collect();
        let line_str: String = line.iter().collect();
        let mut pos = 0;
        while pos < content.len() {
            if !content[pos] {
                pos += 1;
                continue;
            }
            let start = pos;
            while pos < content.len() && content[pos] {
                pos += 1;
            }
            let segment: String = line[start..pos].iter().collect();
            if count_occurrences(&line_str, &segment) != 1 {
                return Err(RejectReason::AmbiguousMapping);
            }
            calls.push(Call::RemoveStr {
                line: number,
                del_str: segment,
            });
        }
    }
    close_run(&mut calls, &mut run_start, doc.line_count());
    RefineProgram::from_deletions(calls).map_err(|_| RejectReason::AmbiguousMapping)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub doc_id: String,
    pub chunk_index: usize,
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectRecord {
    pub doc_id: String,
    pub chunk_index: usize,
    pub reason: RejectReason,
}

fn write_jsonl<W: Write, T: Serialize>(mut out: W, records: &[T]) -> io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Writes one JSON object per line.
pub fn emit_training_records<W: Write>(out: W, records: &[TrainingRecord]) -> io::Result<()> {
    write_jsonl(out, records)
}

pub fn emit_reject_log<W: Write>(out: W, records: &[RejectRecord]) -> io::Result<()> {
    write_jsonl(out, records)
}

#[cfg(test)]
#[allow(clippy::single_range_in_vec_init)]
mod tests {
    use super::*;
    use crate::chunk::{split_document, ChunkConfig, ChunkMode};

    fn cfg() -> DistillConfig {
        DistillConfig::default()
    }

    fn program_of(original: &str, refined: &str) -> Result<String, RejectReason> {
        distill_pair(original, refined, &cfg()).map(|d| d.program.serialize())
    }

    #[test]
    fn identity_is_keep_all() {
        assert_eq!(
            program_of("same text\n", "same text\n").unwrap(),
            "keep_all()"
        );
    }

    #[test]
    fn whole_line_removal() {
        let original = "Intro line\nBUY NOW cheap pills\nBody text\n";
        let refined = "Intro line\nBody text\n";
        assert_eq!(program_of(original, refined).unwrap(), "remove_lines(2, 2)");
    }

    #[test]
    fn consecutive_lines_are_grouped() {
        let original = "keep\nad one here\nad two here\nkeep too\nmenu menu menu\n";
        let refined = "keep\nkeep too\n";
        assert_eq!(
            program_of(original, refined).unwrap(),
            "remove_lines(2, 3)\nremove_lines(5, 5)"
        );
    }

    #[test]
    fn inline_removal_becomes_remove_str() {
        let original = "Read this article (sponsored link) today.\nNext.";
        let refined = "Read this article today.\nNext.";
        let d = distill_pair(original, refined, &cfg()).unwrap();
        assert_eq!(d.program.calls().len(), 1);
        assert!(matches!(
            &d.program.calls()[0],
            Call::RemoveStr { line: 1, .. }
        ));
        let (out, _) = execute_program(&LineIndexedDoc::new(original), &d.program);
        assert_eq!(out, refined);
    }

    #[test]
    fn threshold_boundaries() {
        let base = "alpha beta gamma delta";
        let ins19 = format!("{base}{}", "x".repeat(19));
        let ins20 = format!("{base}{}", "x".repeat(20));
        // 19 inserted chars passes the edit check but deletes nothing
        assert_eq!(
            program_of(base, &ins19),
            Err(RejectReason::TooSmallDeletion)
        );
        assert_eq!(program_of(base, &ins20), Err(RejectReason::OverEdit));

        let text = "0123456789 tail";
        assert_eq!(
            program_of(text, &text[9..]),
            Err(RejectReason::TooSmallDeletion)
        );
        assert_eq!(
            program_of(text, &text[10..]).unwrap(),
            r#"remove_str(1, "0123456789")"#
        );
    }

    #[test]
    fn ambiguous_substring_rejected() {
        assert_eq!(
            program_of("ab ab ab ab ab ab ab", "ab ab ab"),
            Err(RejectReason::AmbiguousMapping)
        );
    }

    #[test]
    fn final_footer_without_newline_is_unrepresentable() {
        assert_eq!(
            program_of("body text\nfooter footer", "body text"),
            Err(RejectReason::AmbiguousMapping)
        );
        assert_eq!(
            program_of("body text\nfooter footer", "body text\n").unwrap(),
            "remove_lines(2, 2)"
        );
    }

    #[test]
    fn deleted_newline_moves_to_the_removed_line() {
        let original = "keep this AAAAAAA\nAD LINE HERE NOW\nrest of it";
        let doc = LineIndexedDoc::new(original);
        let a = original.find(" AAAAAAA").unwrap();
        let b = original.find("\nrest").unwrap();
        let program = map_deletions_to_calls(&doc, &[a..b]).unwrap();
        assert_eq!(
            program.serialize(),
            "remove_str(1, \" AAAAAAA\")\nremove_lines(2, 2)"
        );
        assert_eq!(
            execute_program(&doc, &program).0,
            remove_char_ranges(original, &[a..b])
        );
        // merging into the next line's content stays unrepresentable
        let c = original.find("rest").unwrap() + 2;
        assert_eq!(
            map_deletions_to_calls(&doc, &[a..c]),
            Err(RejectReason::AmbiguousMapping)
        );
    }

    #[test]
    fn slide_prefers_line_boundaries() {
        // "x\n" removed from "x\nx\n": any alignment slides to a full line
        let text: Vec<char> = "a\nx\nx\nb".chars().collect();
        let out = slide_to_line_boundaries(&text, vec![3..5], 0);
        assert_eq!(out, vec![2..4]);
        let out = slide_to_line_boundaries(&text, vec![1..3], 0);
        assert_eq!(out, vec![2..4]);
    }

    #[test]
    fn slide_respects_floor_and_neighbours() {
        let text: Vec<char> = "a\na".chars().collect();
        assert_eq!(slide_to_line_boundaries(&text, vec![1..3], 0), vec![0..2]);
        assert_eq!(slide_to_line_boundaries(&text, vec![1..3], 1), vec![1..3]);
        let text: Vec<char> = "\na\na".chars().collect();
        assert_eq!(slide_to_line_boundaries(&text, vec![2..4], 0), vec![1..3]);
        // the second run can slide onto the first, so they merge
        let out = slide_to_line_boundaries(&text, vec![0..1, 2..4], 0);
        assert_eq!(out, vec![0..3]);
        let text: Vec<char> = "xa
b
b"
        .chars()
        .collect();
        assert_eq!(
            slide_to_line_boundaries(&text, vec![0..1, 4..6], 0),
            vec![0..1, 3..5]
        );
    }

    #[test]
    fn scattered_runs_coalesce() {
        // exact DP may keep the "e" of "noise" instead of the one in "one"
        let text: Vec<char> = "one
noise here
next"
            .chars()
            .collect();
        let out = slide_to_line_boundaries(&text, vec![2..8, 9..14], 0);
        assert_eq!(out, vec![4..15]);
    }

    #[test]
    fn context_deletions_are_clipped() {
        let text = "ctx one two\nown line one\nspam spam spam spam\nown end\n";
        let doc = LineIndexedDoc::new(text);
        let cc = ChunkConfig {
            window: 9,
            mode: ChunkMode::TrainingOverlap,
            overlap_target: 3,
        };
        let chunks = split_document(&doc, &cc);
        let chunk = chunks.iter().find(|c| c.context_lines > 0).unwrap();
        let lines: Vec<&str> = chunk.text.split_inclusive('\n').collect();
        let spam = lines.iter().position(|l| l.starts_with("spam")).unwrap();
        let refined: String = lines
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != 0 && i != spam)
            .map(|(_, l)| *l)
            .collect();
        let d = distill_chunk(chunk, &refined, &cfg()).unwrap();
        let line = spam + 1;
        assert_eq!(
            d.program.serialize(),
            format!("remove_lines({line}, {line})")
        );
    }

    #[test]
    fn jsonl_output() {
        let mut buf = Vec::new();
        emit_training_records(
            &mut buf,
            &[TrainingRecord {
                doc_id: "d1".into(),
                chunk_index: 0,
                input: "a\nb".into(),
                output: "keep_all()".into(),
            }],
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"doc_id\":\"d1\",\"chunk_index\":0,\"input\":\"a\\nb\",\"output\":\"keep_all()\"}\n"
        );
        let mut buf = Vec::new();
        emit_reject_log(
            &mut buf,
            &[RejectRecord {
                doc_id: "d1".into(),
                chunk_index: 2,
                reason: RejectReason::OverEdit,
            }],
        )
        .unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .contains("\"reason\":\"over-edit\""));
    }
}
