//! The deletion-only refinement program language.
//!
//! Three calls exist: `remove_lines(start, end)`, `remove_str(line, "text")`
//! and `keep_all()`. Line numbers are 1-based and always refer to the
//! original document, so calls never interfere with each other's indices.

mod exec;
mod parse;

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

pub use exec::{count_occurrences, execute_program, ExecutionReport, SkipReason, SkippedCall};
pub use parse::{parse_program, ParseError, ParseErrorKind};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Call {
    RemoveLines { start_line: usize, end_line: usize },
    RemoveStr { line: usize, del_str: String },
    KeepAll,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProgramError {
    #[error("invalid line range {start}..={end}")]
    InvalidLineRange { start: usize, end: usize },
    #[error("line numbers start at 1")]
    ZeroLine,
    #[error("remove_str needs a non-empty string")]
    EmptyDeletion,
    #[error("remove_str strings cannot contain a newline")]
    NewlineInDeletion,
    #[error("keep_all() cannot be combined with other calls")]
    KeepAllMixed,
    #[error("a program needs at least one call")]
    EmptyProgram,
    #[error("line offset {offset} overflows line {line}")]
    Overflow { line: usize, offset: usize },
}

impl Call {
    pub fn remove_lines(start_line: usize, end_line: usize) -> Result<Self, ProgramError> {
        let call = Call::RemoveLines {
            start_line,
            end_line,
        };
        call.validate()?;
        Ok(call)
    }

    pub fn remove_str(line: usize, del_str: impl Into<String>) -> Result<Self, ProgramError> {
        let call = Call::RemoveStr {
            line,
            del_str: del_str.into(),
        };
        call.validate()?;
        Ok(call)
    }

    pub fn validate(&self) -> Result<(), ProgramError> {
        match self {
            Call::RemoveLines {
                start_line,
                end_line,
            } => {
                if *start_line == 0 {
                    Err(ProgramError::ZeroLine)
                } else if start_line > end_line {
                    Err(ProgramError::InvalidLineRange {
                        start: *start_line,
                        end: *end_line,
                    })
                } else {
                    Ok(())
                }
            }
            Call::RemoveStr { line, del_str } => {
                if *line == 0 {
                    Err(ProgramError::ZeroLine)
                } else if del_str.is_empty() {
                    Err(ProgramError::EmptyDeletion)
                } else if del_str.contains('\n') {
                    Err(ProgramError::NewlineInDeletion)
                } else {
                    Ok(())
                }
            }
            Call::KeepAll => Ok(()),
        }
    }

    /// Shifts every line index by `offset`.
    pub fn offset(&self, offset: usize) -> Result<Self, ProgramError> {
        let shift = |line: usize| {
            line.checked_add(offset)
                .ok_or(ProgramError::Overflow { line, offset })
        };
        Ok(match self {
            Call::RemoveLines {
                start_line,
                end_line,
            } => Call::RemoveLines {
                start_line: shift(*start_line)?,
                end_line: shift(*end_line)?,
            },
            Call::RemoveStr { line, del_str } => Call::RemoveStr {
                line: shift(*line)?,
                del_str: del_str.clone(),
            },
            Call::KeepAll => Call::KeepAll,
        })
    }

    /// Smallest and largest line the call touches.
    pub fn line_bounds(&self) -> Option<(usize, usize)> {
        match self {
            Call::RemoveLines {
                start_line,
                end_line,
            } => Some((*start_line, *end_line)),
            Call::RemoveStr { line, .. } => Some((*line, *line)),
            Call::KeepAll => None,
        }
    }
}

impl fmt::Display for Call {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Call::RemoveLines {
                start_line,
                end_line,
            } => write!(f, "remove_lines({start_line}, {end_line})"),
            Call::RemoveStr { line, del_str } => {
                write!(f, "remove_str({line}, \"")?;
                for ch in del_str.chars() {
                    match ch {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\")")
            }
            Call::KeepAll => f.write_str("keep_all()"),
        }
    }
}

impl Serialize for Call {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A validated, non-empty call list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RefineProgram {
    calls: Vec<Call>,
}

impl RefineProgram {
    pub fn new(calls: Vec<Call>) -> Result<Self, ProgramError> {
        if calls.is_empty() {
            return Err(ProgramError::EmptyProgram);
        }
        if calls.len() > 1 && calls.contains(&Call::KeepAll) {
            return Err(ProgramError::KeepAllMixed);
        }
        for call in &calls {
            call.validate()?;
        }
        Ok(Self { calls })
    }

    pub fn keep_all() -> Self {
        Self {
            calls: vec![Call::KeepAll],
        }
    }

    /// A program from deletion calls, or `keep_all()` when there are none.
    pub fn from_deletions(calls: Vec<Call>) -> Result<Self, ProgramError> {
        if calls.is_empty() {
            Ok(Self::keep_all())
        } else {
            Self::new(calls)
        }
    }

    pub fn calls(&self) -> &[Call] {
        &self.calls
    }

    pub fn into_calls(self) -> Vec<Call> {
        self.calls
    }

    pub fn is_keep_all(&self) -> bool {
        matches!(self.calls.as_slice(), [Call::KeepAll])
    }

    /// Canonical wire form: one call per line, no trailing newline.
    pub fn serialize(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for RefineProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (idx, call) in self.calls.iter().enumerate() {
            if idx > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{call}")?;
        }
        Ok(())
    }
}

impl FromStr for RefineProgram {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_program(s)
    }
}

pub fn serialize_program(program: &RefineProgram) -> String {
    program.serialize()
}

/// Adds `line_offset` to every line index; `keep_all()` passes through.
pub fn offset_program(
    program: &RefineProgram,
    line_offset: usize,
) -> Result<RefineProgram, ProgramError> {
    let calls = program
        .calls
        .iter()
        .map(|c| c.offset(line_offset))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RefineProgram { calls })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_forms() {
        assert_eq!(RefineProgram::keep_all().serialize(), "keep_all()");
        let p = RefineProgram::new(vec![Call::remove_lines(1, 2).unwrap()]).unwrap();
        assert_eq!(p.serialize(), "remove_lines(1, 2)");
        let p = RefineProgram::new(vec![Call::remove_str(4, "a\"b").unwrap()]).unwrap();
        assert_eq!(p.serialize(), r#"remove_str(4, "a\"b")"#);
        let p = RefineProgram::new(vec![Call::remove_str(1, r"C:\tmp").unwrap()]).unwrap();
        assert_eq!(p.serialize(), r#"remove_str(1, "C:\\tmp")"#);
    }

    #[test]
    fn construction_invariants() {
        assert_eq!(Call::remove_lines(0, 1), Err(ProgramError::ZeroLine));
        assert_eq!(
            Call::remove_lines(3, 2),
            Err(ProgramError::InvalidLineRange { start: 3, end: 2 })
        );
        assert_eq!(Call::remove_str(1, ""), Err(ProgramError::EmptyDeletion));
        assert_eq!(
            Call::remove_str(1, "a\nb"),
            Err(ProgramError::NewlineInDeletion)
        );
        assert_eq!(RefineProgram::new(vec![]), Err(ProgramError::EmptyProgram));
        assert_eq!(
            RefineProgram::new(vec![Call::KeepAll, Call::remove_lines(1, 1).unwrap()]),
            Err(ProgramError::KeepAllMixed)
        );
        assert!(RefineProgram::from_deletions(vec![]).unwrap().is_keep_all());
    }

    #[test]
    fn offsets() {
        let p = RefineProgram::new(vec![Call::remove_lines(1, 2).unwrap()]).unwrap();
        assert_eq!(
            offset_program(&p, 10).unwrap().calls(),
            &[Call::remove_lines(11, 12).unwrap()]
        );
        let k = RefineProgram::keep_all();
        assert_eq!(offset_program(&k, 5).unwrap(), k);
        let s = RefineProgram::new(vec![Call::remove_str(3, "x").unwrap()]).unwrap();
        assert_eq!(offset_program(&s, 0).unwrap(), s);
        let big = RefineProgram::new(vec![Call::remove_lines(2, usize::MAX - 1).unwrap()]).unwrap();
        assert!(matches!(
            offset_program(&big, 5),
            Err(ProgramError::Overflow { .. })
        ));
    }
}
