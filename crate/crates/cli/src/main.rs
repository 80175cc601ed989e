mod args;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use delrefine_core::metrics::StatsReport;
use delrefine_core::pipeline::{read_corpus, stats_from_files};
use delrefine_core::synth::{run_oracle_closure, ClosureConfig, NoiseSpec};
use delrefine_core::{
    run_manifest, split_document, ChunkMode, LineIndexedDoc, RunManifest, RunMode,
};
use log::info;
use serde::Serialize;
use serde_json::{json, Value};

use args::{
    ChunkCmd, Cli, Command, DistillCmd, ExecuteCmd, IoArgs, RefineCmd, StatsCmd, SynthEvalCmd,
};

/// Version of the `--json` envelope.
const SCHEMA_VERSION: u32 = 1;

const EXIT_FATAL: u8 = 1;
const EXIT_PARTIAL: u8 = 2;

/// What a subcommand hands back for printing.
struct Outcome {
    config: Value,
    summary: Value,
    partial: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_FATAL)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    init_logging(cli.verbose);

    match run(&cli) {
        Ok(outcome) => {
            if let Err(e) = print_outcome(&cli, &outcome) {
                eprintln!("error: {e:#}");
                return ExitCode::from(EXIT_FATAL);
            }
            if outcome.partial {
                eprintln!("warning: some records failed after retries");
                ExitCode::from(EXIT_PARTIAL)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FATAL)
        }
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        2 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp_millis()
        .init();
}

fn run(cli: &Cli) -> Result<Outcome> {
    let base = match &cli.manifest {
        Some(path) => RunManifest::load(path)
            .with_context(|| format!("loading manifest {}", path.display()))?,
        None => RunManifest::default(),
    };
    match &cli.command {
        Command::Chunk(cmd) => chunk(base, cmd),
        Command::Distill(cmd) => distill(base, cli.manifest.is_some(), cmd),
        Command::Refine(cmd) => refine(base, cmd),
        Command::Execute(cmd) => execute(base, cmd),
        Command::Stats(cmd) => stats(base, cmd),
        Command::SynthEval(cmd) => synth_eval(base, cli.manifest.is_some(), cmd),
    }
}

fn apply_io(m: &mut RunManifest, io: &IoArgs) {
    if let Some(p) = &io.input {
        m.input = p.clone();
    }
    if let Some(p) = &io.out {
        m.output = p.clone();
    }
    if io.cursor.is_some() {
        m.cursor = io.cursor.clone();
    }
    if io.limit.is_some() {
        m.limit = io.limit;
    }
    if let Some(w) = io.workers {
        m.workers = w;
    }
}

fn set_if(slot: &mut Option<PathBuf>, value: &Option<PathBuf>) {
    if value.is_some() {
        slot.clone_from(value);
    }
}

/// Runs a manifest through the pipeline and wraps its summary.
fn pipeline(manifest: RunManifest) -> Result<Outcome> {
    info!("effective manifest:\n{}", manifest.to_toml_string());
    let summary = run_manifest(&manifest)?;
    Ok(Outcome {
        config: serde_json::to_value(&manifest)?,
        partial: summary.is_partial(),
        summary: serde_json::to_value(&summary)?,
    })
}

fn distill(mut m: RunManifest, from_manifest: bool, cmd: &DistillCmd) -> Result<Outcome> {
    m.mode = RunMode::Distill;
    if !from_manifest {
        m.chunk.mode = ChunkMode::TrainingOverlap;
    }
    apply_io(&mut m, &cmd.io);
    set_if(&mut m.rejects, &cmd.rejects);
    if let Some(mode) = cmd.mode {
        m.chunk.mode = mode.into();
    }
    if let Some(mode) = cmd.edit_mode {
        m.edit_mode = mode.into();
    }
    cmd.chunk.apply(&mut m.chunk);
    cmd.thresholds.apply(&mut m.thresholds);
    cmd.endpoint.apply(&mut m.endpoint);
    pipeline(m)
}

fn refine(mut m: RunManifest, cmd: &RefineCmd) -> Result<Outcome> {
    m.mode = RunMode::Refine;
    apply_io(&mut m, &cmd.io);
    set_if(&mut m.report, &cmd.report);
    set_if(&mut m.programs, &cmd.programs);
    if cmd.word_budget.is_some() {
        m.word_budget = cmd.word_budget;
    }
    cmd.chunk.apply(&mut m.chunk);
    m.chunk.mode = ChunkMode::InferenceGreedy;
    cmd.endpoint.apply(&mut m.endpoint);
    pipeline(m)
}

fn execute(mut m: RunManifest, cmd: &ExecuteCmd) -> Result<Outcome> {
    m.mode = RunMode::ExecuteOnly;
    apply_io(&mut m, &cmd.io);
    set_if(&mut m.programs, &cmd.programs);
    set_if(&mut m.report, &cmd.report);
    if m.programs.is_none() {
        bail!("execute needs --programs (or `programs` in the manifest)");
    }
    pipeline(m)
}

#[derive(Serialize)]
struct ChunkLine<'a> {
    id: &'a str,
    #[serde(flatten)]
    chunk: &'a delrefine_core::Chunk,
}

fn chunk(m: RunManifest, cmd: &ChunkCmd) -> Result<Outcome> {
    let mut cfg = m.chunk;
    if let Some(mode) = cmd.mode {
        cfg.mode = mode.into();
    }
    cmd.chunk.apply(&mut cfg);
    cfg.validate()?;
    let input = cmd.input.clone().unwrap_or(m.input);
    let records = read_corpus(&input)?;

    let mut out: Box<dyn Write> = match &cmd.out {
        Some(path) => Box::new(BufWriter::new(create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let (mut chunks, mut flagged) = (0u64, 0u64);
    for record in &records {
        let doc = LineIndexedDoc::new(&record.text);
        for c in split_document(&doc, &cfg) {
            chunks += 1;
            flagged += u64::from(c.flagged_skipped);
            serde_json::to_writer(
                &mut out,
                &ChunkLine {
                    id: &record.id,
                    chunk: &c,
                },
            )?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(Outcome {
        config: json!({ "input": input, "output": cmd.out, "chunk": cfg }),
        summary: json!({ "docs": records.len(), "chunks": chunks, "flagged_chunks": flagged }),
        partial: false,
    })
}

fn stats(m: RunManifest, cmd: &StatsCmd) -> Result<Outcome> {
    let original = cmd.original.clone().unwrap_or(m.input);
    let refined = cmd.refined.clone().unwrap_or(m.output);
    let report: StatsReport = stats_from_files(&original, &refined)?;
    Ok(Outcome {
        config: json!({ "original": original, "refined": refined }),
        summary: serde_json::to_value(report)?,
        partial: false,
    })
}

fn synth_eval(m: RunManifest, from_manifest: bool, cmd: &SynthEvalCmd) -> Result<Outcome> {
    let mut cfg = ClosureConfig {
        spec: NoiseSpec::standard(cmd.seed),
        docs: cmd.docs,
        ..ClosureConfig::default()
    };
    if from_manifest {
        cfg.chunk = m.chunk;
        cfg.edit_mode = m.edit_mode;
        cfg.workers = m.workers;
    }
    if let Some(mode) = cmd.edit_mode {
        cfg.edit_mode = mode.into();
    }
    if let Some(w) = cmd.workers {
        cfg.workers = w;
    }
    cmd.chunk.apply(&mut cfg.chunk);
    cfg.chunk.validate()?;
    if cfg.workers == 0 {
        bail!("workers must be at least 1");
    }

    let tmp;
    let workdir: &Path = match &cmd.workdir {
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            dir
        }
        None => {
            tmp = tempfile::tempdir()?;
            tmp.path()
        }
    };
    if let Some(path) = &cmd.corpus_out {
        let mut out = BufWriter::new(create(path)?);
        for doc in delrefine_core::generate_corpus(&cfg.spec, cfg.docs) {
            serde_json::to_writer(&mut out, &doc)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
    }
    let report = run_oracle_closure(&cfg, workdir)?;
    let mut summary = serde_json::to_value(&report)?;
    summary["exact_match_rate"] = json!(report.recovery.exact_match_rate);
    Ok(Outcome {
        config: serde_json::to_value(&cfg)?,
        partial: false,
        summary,
    })
}

fn create(path: &Path) -> Result<File> {
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn print_outcome(cli: &Cli, outcome: &Outcome) -> Result<()> {
    let mut stdout = io::stdout().lock();
    if cli.json {
        let envelope = json!({
            "schema_version": SCHEMA_VERSION,
            "command": cli.command.name(),
            "config": outcome.config,
            "summary": outcome.summary,
            "partial": outcome.partial,
        });
        serde_json::to_writer_pretty(&mut stdout, &envelope)?;
        writeln!(stdout)?;
    } else if !(matches!(cli.command, Command::Chunk(ref c) if c.out.is_none())) {
        writeln!(stdout, "{}:", cli.command.name())?;
        if let Value::Object(fields) = &outcome.summary {
            for (key, value) in fields {
                writeln!(stdout, "  {key}: {value}")?;
            }
        }
    }
    Ok(())
}
