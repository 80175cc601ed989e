//! Tolerant parser for program text produced by a model.
//!
//! Grammar, informally:
//!
//! ```text
//! program := call ((";" | whitespace)* call)*
//! call    := name "(" [arg ("," arg)* [","]] ")"
//! arg     := [name "="] (integer | string)
//! string  := '"' (char | '\"' | '\\' | '\n' | '\t')* '"'
//! ```
//!
//! Whitespace is free around punctuation. Keyword arguments are accepted when
//! they name the positional slot they occupy.

use thiserror::Error;

use super::{Call, ProgramError, RefineProgram};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnknownFunction(String),
    Arity {
        function: &'static str,
        expected: usize,
        found: usize,
    },
    NonInteger(String),
    ExpectedString,
    UnterminatedString,
    InvalidEscape(char),
    KeepAllMixed,
    EmptyProgram,
    InvalidArgument(String),
    Unexpected(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind} at {line}:{column}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
}

impl std::fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::UnknownFunction(name) => write!(f, "unknown function `{name}`"),
            Self::Arity {
                function,
                expected,
                found,
            } => write!(f, "{function} takes {expected} arguments, got {found}"),
            Self::NonInteger(tok) => write!(f, "expected an integer, found `{tok}`"),
            Self::ExpectedString => f.write_str("expected a string literal"),
            Self::UnterminatedString => f.write_str("unterminated string literal"),
            Self::InvalidEscape(c) => write!(f, "invalid escape `\\{c}`"),
            Self::KeepAllMixed => f.write_str("keep_all() mixed with other calls"),
            Self::EmptyProgram => f.write_str("empty program"),
            Self::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Self::Unexpected(what) => write!(f, "unexpected {what}"),
        }
    }
}

impl ParseErrorKind {
    /// Stable kebab-case code for reports.
    pub fn code(&self) -> &'static str {
        match self {
            Self::UnknownFunction(_) => "unknown-function",
            Self::Arity { .. } => "arity-error",
            Self::NonInteger(_) => "non-integer-argument",
            Self::ExpectedString => "expected-string",
            Self::UnterminatedString => "unterminated-string",
            Self::InvalidEscape(_) => "invalid-escape",
            Self::KeepAllMixed => "keep_all-mixed-with-other-calls",
            Self::EmptyProgram => "empty-program",
            Self::InvalidArgument(_) => "invalid-argument",
            Self::Unexpected(_) => "syntax-error",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    LParen,
    RParen,
    Comma,
    Equals,
    Semi,
}

#[derive(Debug, Clone, Copy, Default)]
struct Pos {
    line: usize,
    column: usize,
}

fn err(kind: ParseErrorKind, pos: Pos) -> ParseError {
    ParseError {
        kind,
        line: pos.line,
        column: pos.column,
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let mut toks = Vec::new();
    let mut chars = text.chars().peekable();
    let mut pos = Pos { line: 1, column: 1 };
    let advance = |c: char, pos: &mut Pos| {
        if c == '\n' {
            pos.line += 1;
            pos.column = 1;
        } else {
            pos.column += 1;
        }
    };
    while let Some(&c) = chars.peek() {
        let start = pos;
        match c {
            c if c.is_whitespace() => {
                chars.next();
                advance(c, &mut pos);
            }
            '(' | ')' | ',' | '=' | ';' => {
                chars.next();
                advance(c, &mut pos);
                toks.push((
                    match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        ',' => Tok::Comma,
                        '=' => Tok::Equals,
                        _ => Tok::Semi,
                    },
                    start,
                ));
            }
            '"' => {
                chars.next();
                advance(c, &mut pos);
                let mut value = String::new();
                loop {
                    let Some(c) = chars.next() else {
                        return Err(err(ParseErrorKind::UnterminatedString, start));
                    };
                    if c == '\n' {
                        return Err(err(ParseErrorKind::UnterminatedString, start));
                    }
                    advance(c, &mut pos);
                    match c {
                        '"' => break,
                        '\\' => {
                            let Some(e) = chars.next() else {
                                return Err(err(ParseErrorKind::UnterminatedString, start));
                            };
                            advance(e, &mut pos);
                            value.push(match e {
                                '"' => '"',
                                '\\' => '\\',
                                'n' => '\n',
                                't' => '\t',
                                other => {
                                    return Err(err(ParseErrorKind::InvalidEscape(other), pos))
                                }
                            });
                        }
                        c => value.push(c),
                    }
                }
                toks.push((Tok::Str(value), start));
            }
            _ => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || "(),=;\"".contains(c) {
                        break;
                    }
                    word.push(c);
                    chars.next();
                    advance(c, &mut pos);
                }
                toks.push((Tok::Word(word), start));
            }
        }
    }
    Ok(toks)
}

struct Arg {
    name: Option<String>,
    value: Tok,
    pos: Pos,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    end: Pos,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.at).map_or(self.end, |(_, p)| *p)
    }

    fn next(&mut self) -> Option<(Tok, Pos)> {
        let t = self.toks.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        match self.next() {
            Some((t, _)) if t == want => Ok(()),
            Some((t, p)) => Err(err(
                ParseErrorKind::Unexpected(format!("{} (expected {what})", describe(&t))),
                p,
            )),
            None => Err(err(
                ParseErrorKind::Unexpected(format!("end of input (expected {what})")),
                self.end,
            )),
        }
    }

    fn call(&mut self) -> Result<(Call, Pos), ParseError> {
        let (name, pos) = match self.next() {
            Some((Tok::Word(w), p)) => (w, p),
            Some((t, p)) => {
                return Err(err(
                    ParseErrorKind::Unexpected(format!("{} (expected a call)", describe(&t))),
                    p,
                ))
            }
            None => unreachable!("caller checks for more tokens"),
        };
        let function: &'static str = match name.as_str() {
            "remove_lines" => "remove_lines",
            "remove_str" => "remove_str",
            "keep_all" => "keep_all",
            _ => return Err(err(ParseErrorKind::UnknownFunction(name), pos)),
        };
        self.expect(Tok::LParen, "`(`")?;
        let args = self.args()?;
        let arity = |expected: usize| -> Result<(), ParseError> {
            if args.len() == expected {
                Ok(())
            } else {
                Err(err(
                    ParseErrorKind::Arity {
                        function,
                        expected,
                        found: args.len(),
                    },
                    pos,
                ))
            }
        };
        let call = match function {
            "keep_all" => {
                arity(0)?;
                Call::KeepAll
            }
            "remove_lines" => {
                arity(2)?;
                let start = int_arg(&args[0], "start_line")?;
                let end = int_arg(&args[1], "end_line")?;
                Call::RemoveLines {
                    start_line: start,
                    end_line: end,
                }
            }
            _ => {
                arity(2)?;
                let line = int_arg(&args[0], "line")?;
                let del_str = str_arg(&args[1], "del_str")?;
                Call::RemoveStr { line, del_str }
            }
        };
        call.validate()
            .map_err(|e| err(ParseErrorKind::InvalidArgument(e.to_string()), pos))?;
        Ok((call, pos))
    }

    fn args(&mut self) -> Result<Vec<Arg>, ParseError> {
        let mut args = Vec::new();
        loop {
            if self.peek() == Some(&Tok::RParen) {
                self.next();
                return Ok(args);
            }
            let pos = self.pos();
            let mut name = None;
            if let (Some(Tok::Word(w)), Some((Tok::Equals, _))) =
                (self.peek().cloned(), self.toks.get(self.at + 1))
            {
                name = Some(w);
                self.at += 2;
            }
            let value = match self.next() {
                Some((t @ (Tok::Word(_) | Tok::Str(_)), _)) => t,
                Some((t, p)) => {
                    return Err(err(
                        ParseErrorKind::Unexpected(format!(
                            "{} (expected an argument)",
                            describe(&t)
                        )),
                        p,
                    ))
                }
                None => {
                    return Err(err(
                        ParseErrorKind::Unexpected("end of input (expected `)`)".into()),
                        self.end,
                    ))
                }
            };
            args.push(Arg { name, value, pos });
            match self.next() {
                Some((Tok::Comma, _)) => {}
                Some((Tok::RParen, _)) => return Ok(args),
                Some((t, p)) => {
                    return Err(err(
                        ParseErrorKind::Unexpected(format!(
                            "{} (expected `,` or `)`)",
                            describe(&t)
                        )),
                        p,
                    ))
                }
                None => {
                    return Err(err(
                        ParseErrorKind::Unexpected("end of input (expected `)`)".into()),
                        self.end,
                    ))
                }
            }
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Word(w) => format!("`{w}`"),
        Tok::Str(_) => "string literal".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Equals => "`=`".into(),
        Tok::Semi => "`;`".into(),
    }
}

fn check_name(arg: &Arg, slot: &str) -> Result<(), ParseError> {
    match &arg.name {
        Some(n) if n != slot => Err(err(
            ParseErrorKind::InvalidArgument(format!("`{n}` given where `{slot}` is expected")),
            arg.pos,
        )),
        _ => Ok(()),
    }
}

fn int_arg(arg: &Arg, slot: &str) -> Result<usize, ParseError> {
    check_name(arg, slot)?;
    match &arg.value {
        Tok::Word(w) => {
            let digits = w.strip_prefix('+').unwrap_or(w);
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                digits.parse().map_err(|_| {
                    err(
                        ParseErrorKind::InvalidArgument(format!("`{w}` is out of range")),
                        arg.pos,
                    )
                })
            } else if w.starts_with('-')
                && w[1..].bytes().all(|b| b.is_ascii_digit())
                && w.len() > 1
            {
                Err(err(
                    ParseErrorKind::InvalidArgument(format!("negative line `{w}`")),
                    arg.pos,
                ))
            } else {
                Err(err(ParseErrorKind::NonInteger(w.clone()), arg.pos))
            }
        }
        Tok::Str(s) => Err(err(ParseErrorKind::NonInteger(format!("\"{s}\"")), arg.pos)),
        _ => unreachable!("args are words or strings"),
    }
}

fn str_arg(arg: &Arg, slot: &str) -> Result<String, ParseError> {
    check_name(arg, slot)?;
    match &arg.value {
        Tok::Str(s) => Ok(s.clone()),
        _ => Err(err(ParseErrorKind::ExpectedString, arg.pos)),
    }
}

/// Parses program text into a validated [`RefineProgram`].
pub fn parse_program(text: &str) -> Result<RefineProgram, ParseError> {
    let toks = lex(text)?;
    let end = {
        let line = text.matches('\n').count() + 1;
        let column = text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        Pos { line, column }
    };
    let mut p = Parser { toks, at: 0, end };
    let mut calls = Vec::new();
    let mut keep_all_at = None;
    loop {
        while p.peek() == Some(&Tok::Semi) {
            p.next();
        }
        if p.peek().is_none() {
            break;
        }
        let (call, pos) = p.call()?;
        if call == Call::KeepAll && keep_all_at.is_none() {
            keep_all_at = Some(pos);
        }
        calls.push(call);
    }
    if calls.is_empty() {
        return Err(err(
            ParseErrorKind::EmptyProgram,
            Pos { line: 1, column: 1 },
        ));
    }
    RefineProgram::new(calls).map_err(|e| match e {
        ProgramError::KeepAllMixed => err(
            ParseErrorKind::KeepAllMixed,
            keep_all_at.unwrap_or(Pos { line: 1, column: 1 }),
        ),
        other => err(
            ParseErrorKind::InvalidArgument(other.to_string()),
            Pos { line: 1, column: 1 },
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(text: &str) -> ParseErrorKind {
        parse_program(text).unwrap_err().kind
    }

    #[test]
    fn keep_all() {
        assert_eq!(
            parse_program("keep_all()").unwrap(),
            RefineProgram::keep_all()
        );
        assert_eq!(
            parse_program("  keep_all ( )\n").unwrap(),
            RefineProgram::keep_all()
        );
    }

    #[test]
    fn two_calls() {
        let p = parse_program("remove_lines(3, 5)\nremove_str(7, \"ads\")").unwrap();
        assert_eq!(
            p.calls(),
            &[
                Call::RemoveLines {
                    start_line: 3,
                    end_line: 5
                },
                Call::RemoveStr {
                    line: 7,
                    del_str: "ads".into()
                }
            ]
        );
    }

    #[test]
    fn tolerant_spacing_and_keywords() {
        let p =
            parse_program("remove_lines( 3 ,5 );remove_str(line=7, del_str=\"a\\tb\",)").unwrap();
        assert_eq!(p.serialize(), "remove_lines(3, 5)\nremove_str(7, \"a\tb\")");
    }

    #[test]
    fn escapes() {
        let p = parse_program(r#"remove_str(1, "say \"hi\" \\ now")"#).unwrap();
        assert_eq!(
            p.calls()[0],
            Call::RemoveStr {
                line: 1,
                del_str: r#"say "hi" \ now"#.into()
            }
        );
        assert_eq!(
            kind(r#"remove_str(1, "a\qb")"#),
            ParseErrorKind::InvalidEscape('q')
        );
        assert_eq!(
            kind(r#"remove_str(1, "a\nb")"#),
            ParseErrorKind::InvalidArgument("remove_str strings cannot contain a newline".into())
        );
    }

    #[test]
    fn unbalanced_quote_is_unterminated() {
        assert_eq!(
            kind(r#"remove_str(1, "a"b")"#),
            ParseErrorKind::UnterminatedString
        );
        assert_eq!(
            kind("remove_str(1, \"abc\n)"),
            ParseErrorKind::UnterminatedString
        );
    }

    #[test]
    fn error_kinds() {
        assert_eq!(
            kind("delete_all()"),
            ParseErrorKind::UnknownFunction("delete_all".into())
        );
        assert_eq!(
            kind("remove_lines(1)"),
            ParseErrorKind::Arity {
                function: "remove_lines",
                expected: 2,
                found: 1
            }
        );
        assert_eq!(
            kind("remove_lines(1, 2.5)"),
            ParseErrorKind::NonInteger("2.5".into())
        );
        assert_eq!(
            kind("remove_lines(a, 2)"),
            ParseErrorKind::NonInteger("a".into())
        );
        assert_eq!(kind("remove_str(1, 2)"), ParseErrorKind::ExpectedString);
        assert_eq!(
            kind("keep_all()\nremove_lines(1, 1)"),
            ParseErrorKind::KeepAllMixed
        );
        assert_eq!(kind(""), ParseErrorKind::EmptyProgram);
        assert_eq!(kind(" \n ;; "), ParseErrorKind::EmptyProgram);
        assert!(matches!(
            kind("remove_lines(0, 1)"),
            ParseErrorKind::InvalidArgument(_)
        ));
        assert!(matches!(
            kind("remove_lines(-1, 1)"),
            ParseErrorKind::InvalidArgument(_)
        ));
        assert!(matches!(
            kind("remove_lines(2, 1)"),
            ParseErrorKind::InvalidArgument(_)
        ));
        assert!(matches!(
            kind("remove_lines(1, 2"),
            ParseErrorKind::Unexpected(_)
        ));
        assert!(matches!(
            kind("remove_lines 1, 2)"),
            ParseErrorKind::Unexpected(_)
        ));
        assert!(matches!(
            kind("remove_lines(end_line=1, start_line=2)"),
            ParseErrorKind::InvalidArgument(_)
        ));
    }

    #[test]
    fn error_positions() {
        let e = parse_program("keep_all()\nremove_lines(1, x)").unwrap_err();
        assert_eq!((e.line, e.column), (2, 17));
        assert_eq!(e.kind.code(), "non-integer-argument");
    }
}
