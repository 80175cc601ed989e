//! Instance-level refinement statistics over (original, refined) pairs.
//!
//! "Words" are whitespace-delimited tokens. Accumulators are plain sums, so
//! per-worker partials can be merged in any order.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::doc::word_count;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("{originals} originals but {refined} refined texts")]
    LengthMismatch { originals: usize, refined: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineStats {
    pub doc_count: u64,
    /// Mean per-document output/input word ratio; documents with no input
    /// words are left out.
    pub token_ratio: f64,
    pub untouched_pct: f64,
    pub empty_pct: f64,
    pub new_words_per_1000: f64,
    pub input_words: u64,
    pub output_words: u64,
    pub new_word_types: u64,
    /// Externally supplied quality scores; never computed here.
    pub score_before: Option<f64>,
    pub score_after: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct StatsAccumulator {
    docs: u64,
    ratio_sum: f64,
    ratio_docs: u64,
    untouched: u64,
    empty: u64,
    input_words: u64,
    output_words: u64,
    new_word_types: u64,
}

/// Lowercased word with leading/trailing non-alphanumerics removed.
pub fn normalize_word(word: &str) -> String {
    word.trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

/// Distinct normalized words of `refined` that never occur in `original`.
pub fn new_word_types(original: &str, refined: &str) -> HashSet<String> {
    let known: HashSet<String> = original.split_whitespace().map(normalize_word).collect();
    refined
        .split_whitespace()
        .map(normalize_word)
        .filter(|w| !w.is_empty() && !known.contains(w))
        .collect()
}

impl StatsAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_pair(&mut self, original: &str, refined: &str) {
        let input = word_count(original) as u64;
        let output = word_count(refined) as u64;
        self.docs += 1;
        if input > 0 {
            self.ratio_sum += output as f64 / input as f64;
            self.ratio_docs += 1;
        }
        self.untouched += (original == refined) as u64;
        self.empty += refined.trim().is_empty() as u64;
        self.input_words += input;
        self.output_words += output;
        if original != refined {
            self.new_word_types += new_word_types(original, refined).len() as u64;
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.docs += other.docs;
        self.ratio_sum += other.ratio_sum;
        self.ratio_docs += other.ratio_docs;
        self.untouched += other.untouched;
        self.empty += other.empty;
        self.input_words += other.input_words;
        self.output_words += other.output_words;
        self.new_word_types += other.new_word_types;
    }

    pub fn doc_count(&self) -> u64 {
        self.docs
    }

    pub fn finish(&self) -> RefineStats {
        let pct = |n: u64| {
            if self.docs == 0 {
                0.0
            } else {
                100.0 * n as f64 / self.docs as f64
            }
        };
        RefineStats {
            doc_count: self.docs,
            token_ratio: if self.ratio_docs == 0 {
                0.0
            } else {
                self.ratio_sum / self.ratio_docs as f64
            },
            untouched_pct: pct(self.untouched),
            empty_pct: pct(self.empty),
            new_words_per_1000: if self.output_words == 0 {
                0.0
            } else {
                1000.0 * self.new_word_types as f64 / self.output_words as f64
            },
            input_words: self.input_words,
            output_words: self.output_words,
            new_word_types: self.new_word_types,
            score_before: None,
            score_after: None,
        }
    }
}

/// Overall statistics plus per-score-bucket groups.
#[derive(Debug, Clone, Default)]
pub struct BucketedStats {
    pub overall: StatsAccumulator,
    pub by_score: BTreeMap<String, StatsAccumulator>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub overall: RefineStats,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub by_score: BTreeMap<String, RefineStats>,
}

/// Bucket label for an external score: its integer part.
pub fn score_bucket(score: f64) -> String {
    format!("{}", score.floor() as i64)
}

impl BucketedStats {
    pub fn add_pair(&mut self, original: &str, refined: &str, score: Option<f64>) {
        self.overall.add_pair(original, refined);
        if let Some(score) = score.filter(|s| s.is_finite()) {
            self.by_score
                .entry(score_bucket(score))
                .or_default()
                .add_pair(original, refined);
        }
    }

    pub fn merge(&mut self, other: &Self) {
        self.overall.merge(&other.overall);
        for (key, acc) in &other.by_score {
            self.by_score.entry(key.clone()).or_default().merge(acc);
        }
    }

    pub fn report(&self) -> StatsReport {
        StatsReport {
            overall: self.overall.finish(),
            by_score: self
                .by_score
                .iter()
                .map(|(k, v)| (k.clone(), v.finish()))
                .collect(),
        }
    }
}

pub fn compute_stats<A: AsRef<str>, B: AsRef<str>>(
    originals: &[A],
    refined: &[B],
) -> Result<RefineStats, MetricsError> {
    if originals.len() != refined.len() {
        return Err(MetricsError::LengthMismatch {
            originals: originals.len(),
            refined: refined.len(),
        });
    }
    let mut acc = StatsAccumulator::new();
    for (o, r) in originals.iter().zip(refined) {
        acc.add_pair(o.as_ref(), r.as_ref());
    }
    Ok(acc.finish())
}
