use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{Call, RefineProgram};
use crate::doc::LineIndexedDoc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    AmbiguousSubstring,
    NotFound,
    LineOutOfRange,
    ShadowedByLineRemoval,
}

impl SkipReason {
    pub fn code(self) -> &'static str {
        match self {
            Self::AmbiguousSubstring => "ambiguous-substring",
            Self::NotFound => "not-found",
            Self::LineOutOfRange => "line-out-of-range",
            Self::ShadowedByLineRemoval => "shadowed-by-line-removal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SkippedCall {
    pub call: Call,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct ExecutionReport {
    pub applied: usize,
    pub skipped: Vec<SkippedCall>,
    /// Output is empty or whitespace only.
    pub output_empty: bool,
    /// Output is byte-identical to the input.
    pub untouched: bool,
}

/// Number of (possibly overlapping) occurrences of `needle` in `haystack`.
pub fn count_occurrences(haystack: &str, needle: &str) -> usize {
    occurrences(haystack, needle).count()
}

fn occurrences<'h>(haystack: &'h str, needle: &'h str) -> impl Iterator<Item = usize> + 'h {
    let mut from = 0;
    std::iter::from_fn(move || {
        if needle.is_empty() || from > haystack.len() {
            return None;
        }
        let at = from + haystack[from..].find(needle)?;
        from = at + haystack[at..].chars().next().map_or(1, char::len_utf8);
        Some(at)
    })
}

fn unique_occurrence(haystack: &str, needle: &str) -> Result<usize, SkipReason> {
    let mut hits = occurrences(haystack, needle);
    match (hits.next(), hits.next()) {
        (Some(at), None) => Ok(at),
        (None, _) => Err(SkipReason::NotFound),
        (Some(_), Some(_)) => Err(SkipReason::AmbiguousSubstring),
    }
}

/// Runs `program` against `doc`.
///
/// Every call is resolved against the original document; the union of all
/// deletions is materialised once at the end. `remove_lines` takes each
/// line's own trailing newline with it. `remove_str` applies only when its
/// string occurs exactly once in the original line. Calls that cannot apply
/// are reported, never fatal.
pub fn execute_program(
    doc: &LineIndexedDoc<'_>,
    program: &RefineProgram,
) -> (String, ExecutionReport) {
    let text = doc.text();
    if program.is_keep_all() {
        let report = ExecutionReport {
            applied: 1,
            skipped: Vec::new(),
            output_empty: text.trim().is_empty(),
            untouched: true,
        };
        return (text.to_owned(), report);
    }

    let n = doc.line_count();
    let mut line_removed = vec![false; n];
    for call in program.calls() {
        if let Call::RemoveLines {
            start_line,
            end_line,
        } = *call
        {
            if end_line <= n {
                line_removed[start_line - 1..end_line].fill(true);
            }
        }
    }

    let mut report = ExecutionReport::default();
    let mut cuts: Vec<Range<usize>> = Vec::new();
    for call in program.calls() {
        let outcome = match call {
            Call::RemoveLines { end_line, .. } => {
                if *end_line <= n {
                    Ok(())
                } else {
                    Err(SkipReason::LineOutOfRange)
                }
            }
            Call::RemoveStr { line, del_str } => {
                if *line > n {
                    Err(SkipReason::LineOutOfRange)
                } else if line_removed[line - 1] {
                    Err(SkipReason::ShadowedByLineRemoval)
                } else {
                    let span = &doc.spans()[line - 1].bytes;
                    unique_occurrence(&text[span.clone()], del_str).map(|at| {
                        cuts.push(span.start + at..span.start + at + del_str.len());
                    })
                }
            }
            Call::KeepAll => Ok(()),
        };
        match outcome {
            Ok(()) => report.applied += 1,
            Err(reason) => report.skipped.push(SkippedCall {
                call: call.clone(),
                reason,
            }),
        }
    }

    let mut number = 0;
    while number < n {
        if line_removed[number] {
            let first = number + 1;
            while number < n && line_removed[number] {
                number += 1;
            }
            let start = doc.line_bytes_with_newline(first).start;
            let end = doc.line_bytes_with_newline(number).end;
            cuts.push(start..end);
        } else {
            number += 1;
        }
    }
    cuts.sort_unstable_by_key(|r| r.start);

    let mut out = String::with_capacity(text.len());
    let mut kept_from = 0;
    for cut in cuts {
        if cut.start > kept_from {
            out.push_str(&text[kept_from..cut.start]);
        }
        kept_from = kept_from.max(cut.end);
    }
    out.push_str(&text[kept_from..]);

    report.untouched = out.len() == text.len();
    report.output_empty = out.trim().is_empty();
    (out, report)
}
