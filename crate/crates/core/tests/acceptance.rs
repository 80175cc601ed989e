//! Acceptance suite: one PASS/FAIL line per primary criterion.
//!
//! Runs as a plain binary (`harness = false`). The process fails if any
//! criterion fails, except those listed in `KNOWN_UNATTAINABLE`, which
//! still print FAIL together with the reason.

use std::collections::HashMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use delrefine_core::chunk::{merge_chunk_programs, split_document, ChunkConfig, ChunkMode};
use delrefine_core::distill::{distill_pair, DistillConfig, RejectReason};
use delrefine_core::doc::LineIndexedDoc;
use delrefine_core::edit::{
    apply_edit_script, compute_edit_script, compute_edit_script_chars, EditMode,
};
use delrefine_core::expert::{
    parse_e2e_response, prompt_document, ClientError, Completion, REFINE_PROMPT_V1,
};
use delrefine_core::metrics::StatsAccumulator;
use delrefine_core::pipeline::{
    run_execute, run_refine, write_corpus, CorpusRecord, RunManifest, RunMode,
};
use delrefine_core::program::{execute_program, parse_program, Call, RefineProgram, SkipReason};
use delrefine_core::synth::{generate_corpus, run_oracle_closure, ClosureConfig, NoiseSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const ORACLE_MAX_LEN: usize = 7;
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const SCRIPT_PAIRS: usize = 10_000;
const SCRIPT_MAX_LEN: usize = 300;
const THEOREM_CASES: usize = 10_000;
const CLOSURE_DOCS: usize = 1_000;
const CLOSURE_BUDGET: Duration = Duration::from_secs(120);
/// Recovery scores must equal 1.0 exactly; rejection rate exactly 0.
const CLOSURE_TOLERANCE: f64 = 0.0;
const MERGE_DOCS: usize = 1_000;
const RESUME_DOCS: usize = 1_500;
const THROUGHPUT_DOCS: usize = 100_000;
const THROUGHPUT_BUDGET: Duration = Duration::from_secs(60);

/// Criteria that cannot hold as stated, with the reason.
const KNOWN_UNATTAINABLE: &[(&str, &str)] = &[(
    "deletion-only-theorem",
    "remove_str may delete part of a word (\"cart\" minus \"ar\" is \"ct\"), so executed outputs can contain \
     word types absent from the original even though they are character subsequences",
)];

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------------------
// 1. edit-distance oracle

/// Recursive Levenshtein over the suffixes `a[i..]`, `b[j..]`, memoised.
fn oracle_distance(a: &[u8], b: &[u8]) -> usize {
    fn go(a: &[u8], b: &[u8], i: usize, j: usize, memo: &mut [[u8; 8]; 8]) -> u8 {
        if i == a.len() {
            return (b.len() - j) as u8;
        }
        if j == b.len() {
            return (a.len() - i) as u8;
        }
        if memo[i][j] != u8::MAX {
            return memo[i][j];
        }
        let v = if a[i] == b[j] {
            go(a, b, i + 1, j + 1, memo)
        } else {
            1 + go(a, b, i + 1, j, memo)
                .min(go(a, b, i, j + 1, memo))
                .min(go(a, b, i + 1, j + 1, memo))
        };
        memo[i][j] = v;
        v
    }
    let mut memo = [[u8::MAX; 8]; 8];
    go(a, b, 0, 0, &mut memo) as usize
}

fn all_strings(max_len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * 3);
        for s in &frontier {
            for c in *b"abc" {
                let mut t = s.clone();
                t.push(c);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn edit_oracle() -> Outcome {
    let started = Instant::now();
    let strings = all_strings(ORACLE_MAX_LEN);
    let chars: Vec<Vec<char>> = strings
        .iter()
        .map(|s| s.iter().map(|&b| b as char).collect())
        .collect();
    let (pairs, mismatches): (u64, u64) = (0..strings.len())
        .into_par_iter()
        .map(|i| {
            let mut bad = 0;
            for j in 0..strings.len() {
                let script = compute_edit_script_chars(&chars[i], &chars[j], EditMode::ExactDp)
                    .expect("small");
                if script.cost() != oracle_distance(&strings[i], &strings[j]) {
                    bad += 1;
                }
            }
            (strings.len() as u64, bad)
        })
        .reduce(|| (0, 0), |x, y| (x.0 + y.0, x.1 + y.1));
    let elapsed = started.elapsed();
    outcome(
        mismatches == 0 && elapsed < ORACLE_BUDGET,
        format!(
            "{pairs} pairs, {mismatches} mismatches, {:.1}s (budget {}s)",
            elapsed.as_secs_f64(),
            ORACLE_BUDGET.as_secs()
        ),
    )
}

// ---------------------------------------------------------------------------
// 2. script validity

const ALPHABET: &[char] = &[
    'a', 'b', 'c', 'd', 'e', ' ', ' ', '\n', '.', 'é', 'ß', 'Ж', '中', '文', '🙂', '🚀', '\u{301}',
    '\t', '"', '\\',
];

fn random_text(rng: &mut ChaCha8Rng, max: usize) -> String {
    let len = rng.random_range(0..=max);
    (0..len)
        .map(|_| ALPHABET[rng.random_range(0..ALPHABET.len())])
        .collect()
}

/// Either an unrelated string or a mutation of `a` (runs removed, inserted
/// and rewritten), clipped to the length limit.
fn random_target(rng: &mut ChaCha8Rng, a: &str) -> String {
    if rng.random_bool(0.3) {
        return random_text(rng, SCRIPT_MAX_LEN);
    }
    let mut out: Vec<char> = Vec::new();
    let src: Vec<char> = a.chars().collect();
    let mut i = 0;
    while i < src.len() {
        let run = rng.random_range(1..20).min(src.len() - i);
        match rng.random_range(0..10) {
            0 | 1 => {}
            2 => out.extend(random_text(rng, 15).chars()),
            3 => {
                out.extend(random_text(rng, 10).chars());
                out.extend(&src[i..i + run]);
            }
            _ => out.extend(&src[i..i + run]),
        }
        i += run;
    }
    out.truncate(SCRIPT_MAX_LEN);
    out.into_iter().collect()
}

fn script_validity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c21);
    let mut failures = 0;
    let mut first = None;
    for case in 0..SCRIPT_PAIRS {
        let a = random_text(&mut rng, SCRIPT_MAX_LEN);
        let b = random_target(&mut rng, &a);
        for mode in [EditMode::ExactDp, EditMode::Hierarchical] {
            let ok = compute_edit_script(&a, &b, mode)
                .ok()
                .and_then(|s| apply_edit_script(&a, &s).ok())
                .is_some_and(|out| out.as_bytes() == b.as_bytes());
            if !ok {
                failures += 1;
                first.get_or_insert((case, mode));
            }
        }
    }
    outcome(
        failures == 0,
        format!(
            "{SCRIPT_PAIRS} pairs x 2 modes, {failures} failures{}",
            first.map_or(String::new(), |f| format!(", first {f:?}"))
        ),
    )
}

// ---------------------------------------------------------------------------
// 3. deletion-only theorem

fn random_program(rng: &mut ChaCha8Rng, doc: &LineIndexedDoc<'_>) -> RefineProgram {
    let n = doc.line_count();
    let mut calls = Vec::new();
    for _ in 0..rng.random_range(0..6) {
        if rng.random_bool(0.4) {
            let start = rng.random_range(1..=n + 1);
            let end = start + rng.random_range(0..3);
            calls.push(Call::remove_lines(start, end).expect("valid range"));
        } else {
            let line = rng.random_range(1..=n);
            let text: Vec<char> = doc.line(line).unwrap_or("").chars().collect();
            if text.is_empty() {
                continue;
            }
            let from = rng.random_range(0..text.len());
            let to = rng.random_range(from + 1..=text.len().min(from + 30));
            let s: String = text[from..to].iter().collect();
            calls.push(Call::remove_str(line, s).expect("non-empty"));
        }
    }
    if calls.is_empty() {
        RefineProgram::keep_all()
    } else {
        RefineProgram::new(calls).expect("valid calls")
    }
}

fn deletion_theorem() -> Outcome {
    let docs = generate_corpus(&NoiseSpec::standard(3), 500);
    let mut rng = ChaCha8Rng::seed_from_u64(0xde1e7e);
    let mut violations = 0;
    let mut not_subsequence = 0;
    let mut example = None;
    let mut overall = StatsAccumulator::new();
    for case in 0..THEOREM_CASES {
        let text = &docs[case % docs.len()].noisy_text;
        let doc = LineIndexedDoc::new(text);
        let program = random_program(&mut rng, &doc);
        let (out, _) = execute_program(&doc, &program);
        let mut it = text.chars();
        if !out.chars().all(|c| it.any(|x| x == c)) {
            not_subsequence += 1;
        }
        let mut one = StatsAccumulator::new();
        one.add_pair(text, &out);
        overall.merge(&one);
        if one.finish().new_words_per_1000 != 0.0 {
            violations += 1;
            if example.is_none() {
                let fresh = delrefine_core::metrics::new_word_types(text, &out);
                example = Some(format!(
                    "{:?} via {}",
                    fresh.into_iter().next().unwrap_or_default(),
                    program.serialize().replace('\n', "; ")
                ));
            }
        }
    }
    outcome(
        violations == 0,
        format!(
            "{THEOREM_CASES} fuzz cases, {violations} with new words (corpus {:.3}/1000), {not_subsequence} non-subsequence outputs{}",
            overall.finish().new_words_per_1000,
            example.map_or(String::new(), |e| format!("; e.g. new word {e}"))
        ),
    )
}

// ---------------------------------------------------------------------------
// 4. ambiguity guard

fn ambiguity_guard() -> Outcome {
    let doc = LineIndexedDoc::new("abab");
    let program = parse_program(r#"remove_str(1, "ab")"#).expect("fixture parses");
    let (out, report) = execute_program(&doc, &program);
    let reason = report.skipped.first().map(|s| s.reason);
    outcome(
        out == "abab" && reason == Some(SkipReason::AmbiguousSubstring) && report.applied == 0,
        format!("output {out:?}, skip {:?}", reason.map(SkipReason::code)),
    )
}

// ---------------------------------------------------------------------------
// 5. threshold fidelity

fn threshold_fidelity() -> Outcome {
    // A long, varied middle keeps the pure delete + insert alignment strictly
    // cheaper than any substitution-based one, in both modes.
    let middle = "Copper wires carry the signal from the antenna to the receiver.\n\
                  Old ledgers show the price of tea rising every decade.\n\
                  Bees visit the clover first, then move to the taller flowers by noon.\n";
    let original =
        format!("alpha line one\nnoise line removed entirely\n{middle}gamma line three\n");
    let without_noise = format!("alpha line one\n{middle}gamma line three\n");
    let inserted =
        |n: usize| without_noise.replace("three\n", &format!("three{}\n", "Z".repeat(n)));
    let line = "The market opens at dawn and closes when the fish run out.\n";
    let deleted = |n: usize| {
        let cut = &"ABCDEFGHIJKLMNOP"[..n];
        (line.replace("dawn", &format!("dawn{cut}")), line.to_owned())
    };
    let mut results = Vec::new();
    let mut pass = true;
    for mode in [EditMode::Hierarchical, EditMode::ExactDp] {
        let cfg = DistillConfig {
            edit_mode: mode,
            ..DistillConfig::default()
        };
        let ins19 = distill_pair(&original, &inserted(19), &cfg);
        let ins20 = distill_pair(&original, &inserted(20), &cfg);
        let (o9, r9) = deleted(9);
        let (o10, r10) = deleted(10);
        let del9 = distill_pair(&o9, &r9, &cfg);
        let del10 = distill_pair(&o10, &r10, &cfg);
        pass &= ins19.is_ok()
            && ins20.as_ref().err() == Some(&RejectReason::OverEdit)
            && del9.as_ref().err() == Some(&RejectReason::TooSmallDeletion)
            && del10.as_ref().is_ok_and(|p| p.deleted_chars() == 10);
        let code =
            |r: &Result<_, RejectReason>| r.as_ref().map_or_else(|e| e.code(), |_| "accepted");
        results.push(format!(
            "{mode:?}: insert19 {}, insert20 {}, delete9 {}, delete10 {}",
            code(&ins19),
            code(&ins20),
            code(&del9),
            code(&del10)
        ));
    }
    outcome(pass, results.join("; "))
}

// ---------------------------------------------------------------------------
// 6. oracle closure

fn oracle_closure() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg = ClosureConfig {
        docs: CLOSURE_DOCS,
        workers: 1,
        ..ClosureConfig::default()
    };
    let report = match run_oracle_closure(&cfg, dir.path()) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("closure failed: {e}")),
    };
    let r = &report.recovery;
    let exact = |v: f64, target: f64| (v - target).abs() <= CLOSURE_TOLERANCE;
    outcome(
        exact(r.exact_match_rate, 1.0)
            && exact(report.rejection_rate, 0.0)
            && exact(r.span_precision, 1.0)
            && exact(r.span_recall, 1.0)
            && report.elapsed_secs < CLOSURE_BUDGET.as_secs_f64(),
        format!(
            "seed {}, {} docs ({} multi-chunk), {} chunk pairs: exact_match {:.4}, rejection {:.4}, precision {:.4}, recall {:.4}, {:.1}s",
            cfg.spec.seed,
            r.docs,
            report.multi_chunk_docs,
            report.distill.pairs_attempted,
            r.exact_match_rate,
            report.rejection_rate,
            r.span_precision,
            r.span_recall,
            report.elapsed_secs
        ),
    )
}

// ---------------------------------------------------------------------------
// 7. chunk merge identity

fn chunk_merge_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3e7e);
    let cfg = ChunkConfig {
        window: 40,
        mode: ChunkMode::InferenceGreedy,
        overlap_target: 0,
    };
    let mut checked = 0;
    let mut mismatches = 0;
    let mut seed = 100;
    while checked < MERGE_DOCS {
        for ldoc in generate_corpus(&NoiseSpec::standard(seed), 500) {
            if checked == MERGE_DOCS {
                break;
            }
            let doc = LineIndexedDoc::new(&ldoc.noisy_text);
            let chunks = split_document(&doc, &cfg);
            if chunks.len() < 2 {
                continue;
            }
            checked += 1;
            let programs: Vec<RefineProgram> = chunks
                .iter()
                .map(|c| random_program(&mut rng, &LineIndexedDoc::new(&c.text)))
                .collect();
            let merged = merge_chunk_programs(&chunks, &programs).expect("aligned");
            let whole = execute_program(&doc, &merged.program).0;
            let pieces: String = chunks
                .iter()
                .zip(&programs)
                .map(|(c, p)| {
                    if c.flagged_skipped {
                        c.text.clone()
                    } else {
                        execute_program(&LineIndexedDoc::new(&c.text), p).0
                    }
                })
                .collect();
            mismatches += (whole != pieces) as usize;
        }
        seed += 1;
    }
    outcome(
        mismatches == 0,
        format!("{checked} multi-chunk documents, {mismatches} mismatches"),
    )
}

// ---------------------------------------------------------------------------
// 8. resume idempotence

/// Deterministic stand-in for the program model.
fn scripted_program(prompt: &str) -> Result<Completion, ClientError> {
    let chunk = prompt_document(REFINE_PROMPT_V1, prompt)
        .ok_or_else(|| ClientError::Malformed("prompt".into()))?;
    let doc = LineIndexedDoc::new(chunk);
    let calls: Vec<String> = (1..=doc.line_count())
        .filter(|&n| {
            doc.line(n)
                .is_some_and(|l| l.starts_with("http") || l.contains("ADVERTISEMENT"))
        })
        .map(|n| format!("remove_lines({n}, {n})"))
        .collect();
    Ok(Completion::new(if calls.is_empty() {
        "keep_all()".to_owned()
    } else {
        calls.join("\n")
    }))
}

fn sorted_lines(path: &Path) -> Vec<String> {
    let mut lines: Vec<(String, String)> = fs::read_to_string(path)
        .unwrap_or_default()
        .lines()
        .map(|l| {
            let id = serde_json::from_str::<serde_json::Value>(l)
                .ok()
                .and_then(|v| v["id"].as_str().map(str::to_owned))
                .unwrap_or_default();
            (id, l.to_owned())
        })
        .collect();
    lines.sort();
    lines.into_iter().map(|(_, l)| l).collect()
}

fn resume_idempotence() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let docs = generate_corpus(&NoiseSpec::standard(21), RESUME_DOCS);
    let records: Vec<CorpusRecord> = docs
        .iter()
        .map(|d| CorpusRecord {
            id: d.id.clone(),
            text: d.noisy_text.clone(),
            score: None,
        })
        .collect();
    let input = dir.path().join("in.jsonl");
    write_corpus(&input, &records).expect("write corpus");
    let manifest = |tag: &str| RunManifest {
        mode: RunMode::Refine,
        input: input.clone(),
        output: dir.path().join(format!("{tag}.jsonl")),
        report: Some(dir.path().join(format!("{tag}.report.jsonl"))),
        programs: Some(dir.path().join(format!("{tag}.programs.jsonl"))),
        cursor: Some(dir.path().join(format!("{tag}.cursor.json"))),
        chunk: ChunkConfig::with_window(80),
        workers: 4,
        ..RunManifest::default()
    };

    let straight = manifest("straight");
    if let Err(e) = run_refine(&straight, &scripted_program) {
        return outcome(false, format!("uninterrupted run failed: {e}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0x0e5e);
    let victim = rng.random_range(0..RESUME_DOCS);
    let victim_chunk = split_document(
        &LineIndexedDoc::new(&records[victim].text),
        &ChunkConfig::with_window(80),
    )
    .remove(0)
    .text;
    let interrupted = manifest("interrupted");
    let armed = AtomicBool::new(true);
    let model = |prompt: &str| {
        if prompt_document(REFINE_PROMPT_V1, prompt) == Some(victim_chunk.as_str())
            && armed.swap(false, Ordering::SeqCst)
        {
            panic!("simulated interruption at record {victim}");
        }
        scripted_program(prompt)
    };
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let first = catch_unwind(AssertUnwindSafe(|| run_refine(&interrupted, &model)));
    std::panic::set_hook(hook);
    if first.is_ok() {
        return outcome(false, "interruption did not happen");
    }
    let partial = sorted_lines(&interrupted.output).len();
    if let Err(e) = run_refine(&interrupted, &model) {
        return outcome(false, format!("resume failed: {e}"));
    }
    let same = [
        (&straight.output, &interrupted.output),
        (
            straight.report.as_ref().unwrap(),
            interrupted.report.as_ref().unwrap(),
        ),
        (
            straight.programs.as_ref().unwrap(),
            interrupted.programs.as_ref().unwrap(),
        ),
    ]
    .iter()
    .all(|(a, b)| sorted_lines(a) == sorted_lines(b));
    outcome(
        same,
        format!(
            "interrupted at record {victim} of {RESUME_DOCS} with {partial} records on disk; resumed outputs {}",
            if same { "byte-identical" } else { "differ" }
        ),
    )
}

// ---------------------------------------------------------------------------
// 9. E2E response parsing

fn e2e_parsing() -> Outcome {
    let both = "modification_reason:\n[doc]Removed the navigation bar.[/doc]\nrefined_text:\n[doc]Welcome to the guide.\nBody text.[/doc]";
    let empty = "refined_text:\n[doc][/doc]";
    let missing = "modification_reason:\n[doc]Removed a link.[/doc]\n[doc]Body text.[/doc]";
    let a = parse_e2e_response(both);
    let b = parse_e2e_response(empty);
    let c = parse_e2e_response(missing);
    let pass = a.as_ref().is_ok_and(|r| {
        r.modification_reason == "Removed the navigation bar."
            && r.refined_text == "Welcome to the guide.\nBody text."
    }) && b.as_ref().is_ok_and(|r| r.refined_text.is_empty())
        && matches!(c, Err(ClientError::Malformed(_)));
    let show = |r: &Result<delrefine_core::expert::E2EResponse, ClientError>| match r {
        Ok(r) => format!("ok({:?})", r.refined_text),
        Err(e) => e.code().to_owned(),
    };
    outcome(
        pass,
        format!(
            "both-blocks {}, empty-doc {}, missing-label {}",
            show(&a),
            show(&b),
            show(&c)
        ),
    )
}

// ---------------------------------------------------------------------------
// 10. throughput

const SENTENCES: &[&str] = &[
    "The river widens below the old mill and slows to a walking pace.",
    "Copper wires carry the signal from the antenna to the receiver.",
    "Fresh herbs lose their flavour quickly once they are chopped.",
    "Subscribe now for exclusive deals delivered to your inbox daily.",
    "Sailors once judged their speed by counting knots on a rope.",
    "Glass was once so costly that windows were taxed by number.",
];

fn throughput() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut rng = ChaCha8Rng::seed_from_u64(0x7407);
    let input = dir.path().join("in.jsonl");
    let programs_path = dir.path().join("programs.jsonl");
    let mut records = Vec::with_capacity(THROUGHPUT_DOCS);
    let mut programs = String::new();
    let mut total_chars = 0;
    for i in 0..THROUGHPUT_DOCS {
        let mut text = String::new();
        while text.len() < 500 {
            text.push_str(SENTENCES[rng.random_range(0..SENTENCES.len())]);
            text.push(if rng.random_bool(0.5) { '\n' } else { ' ' });
        }
        total_chars += text.chars().count();
        let id = format!("t{i:06}");
        let program = format!("remove_lines(2, 2)\nremove_str(1, {:?})", &text[4..16]);
        programs.push_str(&serde_json::json!({"id": id, "program": program}).to_string());
        programs.push('\n');
        records.push(CorpusRecord {
            id,
            text,
            score: None,
        });
    }
    write_corpus(&input, &records).expect("write corpus");
    fs::write(&programs_path, programs).expect("write programs");
    let manifest = RunManifest {
        mode: RunMode::ExecuteOnly,
        input,
        output: dir.path().join("out.jsonl"),
        programs: Some(programs_path),
        workers: 1,
        ..RunManifest::default()
    };
    let started = Instant::now();
    let summary = match run_execute(&manifest) {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("execute failed: {e}")),
    };
    let elapsed = started.elapsed();
    outcome(
        summary.docs == THROUGHPUT_DOCS as u64
            && summary.programs_parsed == THROUGHPUT_DOCS as u64
            && elapsed < THROUGHPUT_BUDGET,
        format!(
            "{} docs (mean {} chars), {} programs, {:.2}s on 1 worker (budget {}s)",
            summary.docs,
            total_chars / THROUGHPUT_DOCS,
            summary.programs_parsed,
            elapsed.as_secs_f64(),
            THROUGHPUT_BUDGET.as_secs()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("edit-distance-oracle", edit_oracle),
        ("script-validity", script_validity),
        ("deletion-only-theorem", deletion_theorem),
        ("ambiguity-guard", ambiguity_guard),
        ("threshold-fidelity", threshold_fidelity),
        ("oracle-closure", oracle_closure),
        ("chunk-merge-identity", chunk_merge_identity),
        ("resume-idempotence", resume_idempotence),
        ("e2e-response-parsing", e2e_parsing),
        ("throughput-budget", throughput),
    ];
    let known: HashMap<&str, &str> = KNOWN_UNATTAINABLE.iter().copied().collect();
    let mut unexpected = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let result = catch_unwind(check).unwrap_or_else(|_| outcome(false, "panicked"));
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {name}: {} [{:.1}s]",
            result.detail,
            started.elapsed().as_secs_f64()
        );
        if !result.pass {
            match known.get(name) {
                Some(reason) => println!("     known unattainable: {reason}"),
                None => unexpected += 1,
            }
        }
    }
    if unexpected > 0 {
        eprintln!("{unexpected} acceptance criteria failed");
        std::process::exit(1);
    }
}
