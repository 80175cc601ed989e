//! Shared input generators for the benchmarks.

use delrefine_core::synth::{generate_corpus, LabeledDoc, NoiseSpec};
use delrefine_core::{Call, RefineProgram};

/// Labelled synthetic documents with the standard noise mix.
pub fn noisy_docs(n: usize) -> Vec<LabeledDoc> {
    generate_corpus(&NoiseSpec::standard(11), n)
}

/// The first document at least `min_chars` long, for single-pair benches.
pub fn doc_of_length(min_chars: usize) -> LabeledDoc {
    noisy_docs(500)
        .into_iter()
        .find(|d| d.noisy_text.chars().count() >= min_chars)
        .unwrap_or_else(|| noisy_docs(1).remove(0))
}

/// A program removing every third line and a short substring from the others.
pub fn busy_program(text: &str) -> RefineProgram {
    let calls: Vec<Call> = text
        .lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let n = i + 1;
            if n % 3 == 0 {
                Call::remove_lines(n, n).ok()
            } else {
                line.get(..4).and_then(|s| Call::remove_str(n, s).ok())
            }
        })
        .collect();
    if calls.is_empty() {
        RefineProgram::keep_all()
    } else {
        RefineProgram::new(calls).expect("non-empty")
    }
}
