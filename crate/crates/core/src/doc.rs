use std::ops::Range;

/// Position of one line inside its document, excluding the `\n` terminator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineSpan {
    pub bytes: Range<usize>,
    pub chars: Range<usize>,
}

/// A document split on `\n`, with byte and character spans for every line.
///
/// Lines are numbered from 1 in every public API. A text ending in `\n` has a
/// final empty line, so joining the lines with `\n` always reproduces the
/// text exactly.
#[derive(Debug, Clone)]
pub struct LineIndexedDoc<'a> {
    text: &'a str,
    spans: Vec<LineSpan>,
    char_len: usize,
}

impl<'a> LineIndexedDoc<'a> {
    pub fn new(text: &'a str) -> Self {
        let mut spans = Vec::new();
        let (mut byte_start, mut char_start, mut char_idx) = (0, 0, 0);
        for (byte_idx, ch) in text.char_indices() {
            if ch == '\n' {
                spans.push(LineSpan {
                    bytes: byte_start..byte_idx,
                    chars: char_start..char_idx,
                });
                byte_start = byte_idx + 1;
                char_start = char_idx + 1;
            }
            char_idx += 1;
        }
        spans.push(LineSpan {
            bytes: byte_start..text.len(),
            chars: char_start..char_idx,
        });
        Self {
            text,
            spans,
            char_len: char_idx,
        }
    }

    pub fn text(&self) -> &'a str {
        self.text
    }

    pub fn char_len(&self) -> usize {
        self.char_len
    }

    pub fn line_count(&self) -> usize {
        self.spans.len()
    }

    pub fn spans(&self) -> &[LineSpan] {
        &self.spans
    }

    /// Content of the 1-based line `number`, without its newline.
    pub fn line(&self, number: usize) -> Option<&'a str> {
        let span = self.spans.get(number.checked_sub(1)?)?;
        Some(&self.text[span.bytes.clone()])
    }

    pub fn lines(&self) -> impl Iterator<Item = &'a str> + '_ {
        self.spans.iter().map(|s| &self.text[s.bytes.clone()])
    }

    /// Whether the 1-based line is followed by a `\n`.
    pub fn has_newline(&self, number: usize) -> bool {
        number >= 1 && number < self.spans.len()
    }

    /// Byte range of a line including its trailing newline, if any.
    pub fn line_bytes_with_newline(&self, number: usize) -> Range<usize> {
        let span = &self.spans[number - 1];
        let end = if self.has_newline(number) {
            span.bytes.end + 1
        } else {
            span.bytes.end
        };
        span.bytes.start..end
    }
}

/// Number of whitespace-delimited words.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}
