//! Seeded noise injection with ground-truth labels, oracle refinements and
//! recovery scoring.
//!
//! Clean documents are assembled from a bundled sentence pool; noise lines
//! and inline fragments are injected at recorded character ranges. Every
//! injected span is at least 10 characters long and occurs once in its
//! line, and lines are only ever injected *before* an existing line, so an
//! oracle deletion of all spans is expressible as a program.

mod closure;
mod pool;

use std::collections::{BTreeMap, HashMap};
use std::ops::Range;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edit::{compute_edit_script, extract_deletions, remove_char_ranges, EditMode};
use crate::expert::{
    format_e2e_response, prompt_document, ChatModel, ClientError, Completion, E2E_PROMPT_V1,
};
use crate::program::count_occurrences;

pub use closure::{run_oracle_closure, ClosureConfig, ClosureReport};

pub const MIN_SPAN_CHARS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    AdLine,
    NavHeader,
    UrlLine,
    GibberishLine,
    InlineUrl,
    InlineGibberish,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 6] = [
        NoiseKind::AdLine,
        NoiseKind::NavHeader,
        NoiseKind::UrlLine,
        NoiseKind::GibberishLine,
        NoiseKind::InlineUrl,
        NoiseKind::InlineGibberish,
    ];

    pub fn is_inline(self) -> bool {
        matches!(self, NoiseKind::InlineUrl | NoiseKind::InlineGibberish)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseSpec {
    /// Expected injections per document for each enabled kind.
    pub rates: BTreeMap<NoiseKind, f64>,
    pub seed: u64,
    pub min_lines: usize,
    pub max_lines: usize,
    pub max_sentences_per_line: usize,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::standard(0)
    }
}

impl NoiseSpec {
    /// No noise at all.
    pub fn clean(seed: u64) -> Self {
        Self {
            rates: BTreeMap::new(),
            seed,
            min_lines: 3,
            max_lines: 12,
            max_sentences_per_line: 4,
        }
    }

    /// Every kind enabled at moderate rates.
    pub fn standard(seed: u64) -> Self {
        let mut spec = Self::clean(seed);
        spec.rates = NoiseKind::ALL
            .iter()
            .map(|&k| (k, if k == NoiseKind::NavHeader { 0.3 } else { 0.7 }))
            .collect();
        spec
    }

    pub fn with_rate(mut self, kind: NoiseKind, rate: f64) -> Self {
        self.rates.insert(kind, rate);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InjectedSpan {
    /// Character range in `noisy_text`.
    pub start: usize,
    pub end: usize,
    pub kind: NoiseKind,
}

impl InjectedSpan {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDoc {
    pub id: String,
    pub clean_text: String,
    pub noisy_text: String,
    pub injected_spans: Vec<InjectedSpan>,
    pub oracle_refined: String,
}

fn injections(rng: &mut ChaCha8Rng, rate: f64) -> usize {
    let rate = rate.max(0.0);
    let whole = rate.floor();
    whole as usize + rng.random_bool((rate - whole).min(1.0)) as usize
}

fn token(rng: &mut ChaCha8Rng, len: usize) -> String {
    const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
    (0..len)
        .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())] as char)
        .collect()
}

fn gibberish_word(rng: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    const CONSONANTS: &[u8] = b"bcdfghjklmnpqrstvwxz";
    let len = rng.random_range(min..=max);
    (0..len)
        .map(|_| CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char)
        .collect()
}

fn domain(rng: &mut ChaCha8Rng) -> String {
    let name = pool::DOMAINS.choose(rng).unwrap();
    let tld = pool::TLDS.choose(rng).unwrap();
    format!("{name}.{tld}")
}

fn noise_line(rng: &mut ChaCha8Rng, kind: NoiseKind) -> String {
    match kind {
        NoiseKind::AdLine => {
            let product = pool::PRODUCTS.choose(rng).unwrap();
            let pct = rng.random_range(2..9) * 10;
            match rng.random_range(0..3) {
                0 => format!("Sponsored: {product} now {pct}% off at {}", domain(rng)),
                1 => format!("ADVERTISEMENT - Buy {product} today and save {pct}%"),
                _ => format!(
                    "Click here to win free {product}! Offer code {}",
                    token(rng, 6).to_uppercase()
                ),
            }
        }
        NoiseKind::NavHeader => {
            let mut items: Vec<&str> = pool::NAV_ITEMS.to_vec();
            items.shuffle(rng);
            let n = rng.random_range(2..=4);
            format!("Home | {} | Contact", items[..n].join(" | "))
        }
        NoiseKind::UrlLine => format!(
            "https://{}/{}?utm_source={}",
            domain(rng),
            token(rng, 8),
            token(rng, 5)
        ),
        NoiseKind::GibberishLine => {
            let n = rng.random_range(4..=8);
            (0..n)
                .map(|_| gibberish_word(rng, 3, 8))
                .collect::<Vec<_>>()
                .join(" ")
        }
        NoiseKind::InlineUrl => {
            if rng.random_bool(0.5) {
                format!(" (https://{}/{})", domain(rng), token(rng, 7))
            } else {
                format!(" https://{}/r/{}", domain(rng), token(rng, 6))
            }
        }
        NoiseKind::InlineGibberish => {
            let mut span = String::new();
            while span.chars().count() < MIN_SPAN_CHARS {
                span.push(' ');
                span.push_str(&gibberish_word(rng, 4, 8));
            }
            span
        }
    }
}

fn paragraph(rng: &mut ChaCha8Rng, max_sentences: usize) -> String {
    let n = rng.random_range(1..=max_sentences.max(1));
    (0..n)
        .map(|_| *pool::SENTENCES.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

fn generate_doc(spec: &NoiseSpec, index: usize) -> LabeledDoc {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);

    let n = rng.random_range(spec.min_lines.max(1)..=spec.max_lines.max(spec.min_lines.max(1)));
    let lines: Vec<String> = (0..n)
        .map(|_| paragraph(&mut rng, spec.max_sentences_per_line))
        .collect();
    let trailing_newline = rng.random_bool(0.5);

    let mut before: Vec<Vec<(NoiseKind, String)>> = vec![Vec::new(); n];
    let mut inline: Vec<Option<(usize, NoiseKind, String)>> = vec![None; n];
    for (&kind, &rate) in &spec.rates {
        for _ in 0..injections(&mut rng, rate) {
            if kind.is_inline() {
                let free: Vec<usize> = (0..n).filter(|&i| inline[i].is_none()).collect();
                let Some(&line) = free.choose(&mut rng) else {
                    break;
                };
                let text = &lines[line];
                let mut slots: Vec<usize> = text.match_indices(' ').map(|(i, _)| i).collect();
                slots.push(text.len());
                let at = *slots.choose(&mut rng).unwrap();
                loop {
                    let span = noise_line(&mut rng, kind);
                    let noisy = format!("{}{}{}", &text[..at], span, &text[at..]);
                    if count_occurrences(&noisy, &span) == 1 {
                        inline[line] = Some((at, kind, span));
                        break;
                    }
                }
            } else {
                let line = if kind == NoiseKind::NavHeader {
                    0
                } else {
                    rng.random_range(0..n)
                };
                let text = noise_line(&mut rng, kind);
                before[line].push((kind, text));
            }
        }
    }

    let mut noisy = String::new();
    let mut spans = Vec::new();
    let mut chars = 0;
    for (idx, line) in lines.iter().enumerate() {
        for (kind, text) in &before[idx] {
            let start = chars;
            noisy.push_str(text);
            noisy.push('\n');
            chars += text.chars().count() + 1;
            spans.push(InjectedSpan {
                start,
                end: chars,
                kind: *kind,
            });
        }
        match &inline[idx] {
            Some((at, kind, span)) => {
                let head = &line[..*at];
                noisy.push_str(head);
                chars += head.chars().count();
                let start = chars;
                noisy.push_str(span);
                chars += span.chars().count();
                spans.push(InjectedSpan {
                    start,
                    end: chars,
                    kind: *kind,
                });
                let tail = &line[*at..];
                noisy.push_str(tail);
                chars += tail.chars().count();
            }
            None => {
                noisy.push_str(line);
                chars += line.chars().count();
            }
        }
        if idx + 1 < n || trailing_newline {
            noisy.push('\n');
            chars += 1;
        }
    }

    let mut clean_text = lines.join("\n");
    if trailing_newline {
        clean_text.push('\n');
    }
    let ranges: Vec<Range<usize>> = spans.iter().map(InjectedSpan::range).collect();
    let oracle_refined = remove_char_ranges(&noisy, &ranges);
    debug_assert_eq!(oracle_refined, clean_text);
    LabeledDoc {
        id: format!("synth-{}-{index:06}", spec.seed),
        clean_text,
        noisy_text: noisy,
        injected_spans: spans,
        oracle_refined,
    }
}

/// Generates `n_docs` labelled documents; identical specs give identical
/// corpora.
pub fn generate_corpus(spec: &NoiseSpec, n_docs: usize) -> Vec<LabeledDoc> {
    (0..n_docs).map(|i| generate_doc(spec, i)).collect()
}

/// A pair built to hit one specific distillation reject path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdversarialCase {
    pub original: String,
    pub refined: String,
    pub expected: crate::distill::RejectReason,
}

/// Short, ambiguous, rewriting and end-of-document deletions.
pub fn generate_adversarial(seed: u64, n: usize) -> Vec<AdversarialCase> {
    use crate::distill::RejectReason;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    (0..n)
        .map(|i| {
            let base = paragraph(&mut rng, 3);
            match i % 4 {
                0 => {
                    let len = rng.random_range(2..8);
                    let short = format!(" {}", token(&mut rng, len));
                    AdversarialCase {
                        original: format!("{base}{short}\n{base}"),
                        refined: format!("{base}\n{base}"),
                        expected: RejectReason::TooSmallDeletion,
                    }
                }
                1 => {
                    // bracketed so the deletion cannot slide onto a unique neighbour
                    let dup = format!("[{}]", token(&mut rng, 12));
                    AdversarialCase {
                        original: format!("{base} {dup} middle {dup}"),
                        refined: format!("{base}  middle {dup}"),
                        expected: RejectReason::AmbiguousMapping,
                    }
                }
                2 => {
                    let addition = format!(" {}", paragraph(&mut rng, 1));
                    AdversarialCase {
                        original: base.clone(),
                        refined: format!("{base}{addition}"),
                        expected: RejectReason::OverEdit,
                    }
                }
                _ => {
                    let footer = noise_line(&mut rng, NoiseKind::UrlLine);
                    AdversarialCase {
                        original: format!("{base}\n{footer}"),
                        refined: base,
                        expected: RejectReason::AmbiguousMapping,
                    }
                }
            }
        })
        .collect()
}

/// A chat model that answers end-to-end refinement prompts with a fixed
/// refined text per input document; unknown inputs are returned unchanged.
#[derive(Debug, Default, Clone)]
pub struct OracleExpert {
    answers: HashMap<String, String>,
}

impl OracleExpert {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, input: impl Into<String>, refined: impl Into<String>) {
        self.answers.insert(input.into(), refined.into());
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }
}

impl ChatModel for OracleExpert {
    fn complete(&self, prompt: &str) -> Result<Completion, ClientError> {
        let doc = prompt_document(E2E_PROMPT_V1, prompt)
            .ok_or_else(|| ClientError::Malformed("prompt does not match template".into()))?;
        let refined = self.answers.get(doc).map_or(doc, String::as_str);
        Ok(Completion::new(format_e2e_response(
            "Removed injected noise.",
            refined,
        )))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("{labeled} labeled documents but {refined} refined texts")]
    Misaligned { labeled: usize, refined: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryScore {
    pub span_precision: f64,
    pub span_recall: f64,
    pub exact_match_rate: f64,
    pub docs: usize,
    pub docs_preserved: usize,
    pub spans_total: usize,
    pub spans_recovered: usize,
    pub deletion_runs: usize,
    pub deletion_runs_in_spans: usize,
    /// Set when nothing was deleted; precision is then reported as 1.0.
    pub no_deletions: bool,
}

#[derive(Debug, Default)]
struct DocScore {
    preserved: bool,
    recovered: usize,
    runs: usize,
    runs_in_spans: usize,
}

/// Scores refined texts against the injected spans.
///
/// A document is preserved when every non-injected character survives in
/// order and nothing foreign appears. A span is recovered when it is fully
/// removed from a preserved document. Precision is the share of deletion
/// runs that fall entirely inside injected spans.
pub fn score_recovery<S: AsRef<str>>(
    labeled: &[LabeledDoc],
    refined: &[S],
) -> Result<RecoveryScore, SynthError> {
    if labeled.len() != refined.len() {
        return Err(SynthError::Misaligned {
            labeled: labeled.len(),
            refined: refined.len(),
        });
    }
    let mut score = RecoveryScore {
        span_precision: 1.0,
        span_recall: 1.0,
        exact_match_rate: 1.0,
        docs: labeled.len(),
        docs_preserved: 0,
        spans_total: 0,
        spans_recovered: 0,
        deletion_runs: 0,
        deletion_runs_in_spans: 0,
        no_deletions: false,
    };
    let mut exact = 0;
    for (doc, out) in labeled.iter().zip(refined) {
        let out = out.as_ref();
        let s = score_doc(doc, out);
        exact += (out == doc.oracle_refined) as usize;
        score.docs_preserved += s.preserved as usize;
        score.spans_total += doc.injected_spans.len();
        score.spans_recovered += s.recovered;
        score.deletion_runs += s.runs;
        score.deletion_runs_in_spans += s.runs_in_spans;
    }
    if !labeled.is_empty() {
        score.exact_match_rate = exact as f64 / labeled.len() as f64;
    }
    if score.spans_total > 0 {
        score.span_recall = score.spans_recovered as f64 / score.spans_total as f64;
    }
    if score.deletion_runs == 0 {
        score.no_deletions = true;
    } else {
        score.span_precision = score.deletion_runs_in_spans as f64 / score.deletion_runs as f64;
    }
    Ok(score)
}

/// Splits `noisy` into alternating clean and span segments (byte ranges).
fn segments(doc: &LabeledDoc) -> (Vec<Range<usize>>, Vec<Range<usize>>) {
    let byte_of: Vec<usize> = doc
        .noisy_text
        .char_indices()
        .map(|(b, _)| b)
        .chain(std::iter::once(doc.noisy_text.len()))
        .collect();
    let mut clean = Vec::new();
    let mut spans = Vec::new();
    let mut at = 0;
    for span in &doc.injected_spans {
        let (s, e) = (byte_of[span.start], byte_of[span.end]);
        clean.push(at..s);
        spans.push(s..e);
        at = e;
    }
    clean.push(at..doc.noisy_text.len());
    (clean, spans)
}

fn is_subsequence(small: &str, big: &str) -> bool {
    let mut it = big.chars();
    small.chars().all(|c| it.any(|b| b == c))
}

/// Byte ranges of `span` (offset by `base`) left out of a greedy embedding
/// of `kept`.
fn dropped_runs(span: &str, kept: &str, base: usize, out: &mut Vec<Range<usize>>) {
    let mut want = kept.chars().peekable();
    for (off, c) in span.char_indices() {
        if want.peek() == Some(&c) {
            want.next();
            continue;
        }
        let at = base + off;
        match out.last_mut() {
            Some(last) if last.end == at => last.end = at + c.len_utf8(),
            _ => out.push(at..at + c.len_utf8()),
        }
    }
}

fn score_doc(doc: &LabeledDoc, out: &str) -> DocScore {
    let noisy = doc.noisy_text.as_str();
    let (clean, spans) = segments(doc);

    // layer[k]: refined position after clean segment k -> (recovered, prev pos, split)
    let mut layers: Vec<BTreeMap<usize, (usize, usize, usize)>> = Vec::new();
    let first = &noisy[clean[0].clone()];
    let mut current = BTreeMap::new();
    if out.starts_with(first) {
        current.insert(first.len(), (0, 0, 0));
    }
    layers.push(current);
    for (k, span) in spans.iter().enumerate() {
        let span_text = &noisy[span.clone()];
        let next_clean = &noisy[clean[k + 1].clone()];
        let mut next: BTreeMap<usize, (usize, usize, usize)> = BTreeMap::new();
        for (&p, &(rec, _, _)) in &layers[k] {
            let limit = (p + span_text.len()).min(out.len());
            for q in p..=limit {
                if !out.is_char_boundary(q)
                    || !out[q..].starts_with(next_clean)
                    || !is_subsequence(&out[p..q], span_text)
                {
                    continue;
                }
                let candidate = (rec + (q == p) as usize, p, q);
                let end = q + next_clean.len();
                if next.get(&end).map_or(true, |best| candidate.0 > best.0) {
                    next.insert(end, candidate);
                }
            }
        }
        layers.push(next);
    }

    let Some(&(recovered, _, _)) = layers.last().and_then(|l| l.get(&out.len())) else {
        return unpreserved(doc, out);
    };
    let mut runs: Vec<Range<usize>> = Vec::new();
    let mut pos = out.len();
    let mut splits = vec![(0, 0); spans.len()];
    for k in (0..spans.len()).rev() {
        let (_, p, q) = layers[k + 1][&pos];
        splits[k] = (p, q);
        pos = p;
    }
    for (k, span) in spans.iter().enumerate() {
        let (p, q) = splits[k];
        dropped_runs(&noisy[span.clone()], &out[p..q], span.start, &mut runs);
    }
    DocScore {
        preserved: true,
        recovered,
        runs: runs.len(),
        runs_in_spans: runs.len(),
    }
}

fn unpreserved(doc: &LabeledDoc, out: &str) -> DocScore {
    let runs = compute_edit_script(&doc.noisy_text, out, EditMode::Hierarchical)
        .map(|s| extract_deletions(&s))
        .unwrap_or_default();
    let mut merged: Vec<Range<usize>> = Vec::new();
    for span in &doc.injected_spans {
        match merged.last_mut() {
            Some(last) if last.end == span.start => last.end = span.end,
            _ => merged.push(span.range()),
        }
    }
    let inside = runs
        .iter()
        .filter(|r| merged.iter().any(|m| m.start <= r.start && r.end <= m.end))
        .count();
    DocScore {
        preserved: false,
        recovered: 0,
        runs: runs.len(),
        runs_in_spans: inside,
    }
}
