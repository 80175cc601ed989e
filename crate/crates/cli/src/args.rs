use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use delrefine_core::{ChunkConfig, ChunkMode, EditMode, EndpointConfig, Thresholds};

const ENV_HELP: &str = "\
Environment:
  DELREFINE_API_KEY   API key sent as a bearer token to the expert endpoint.
                      Keys are only read from the environment; use
                      --api-key-env (or endpoint.api_key_env in the manifest)
                      to read a different variable.
  DELREFINE_ENDPOINT  Default for --endpoint.
  DELREFINE_MODEL     Default for --model.
  RUST_LOG            Overrides the -v log filter.

Precedence: command-line flags, then the --manifest file, then built-in defaults.

Exit status: 0 on success, 1 on a fatal configuration or I/O error,
2 when the run completed but some records failed after retries.";

#[derive(Debug, Parser)]
#[command(name = "delrefine", version, about, after_help = ENV_HELP)]
pub struct Cli {
    /// More log output (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    pub verbose: u8,

    /// Print a versioned machine-readable summary on stdout.
    #[arg(long, global = true)]
    pub json: bool,

    /// TOML run manifest supplying defaults for every flag.
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split documents into word-bounded chunks and write them as JSONL.
    Chunk(ChunkCmd),
    /// Ask the expert for refined text and distil it into training programs.
    Distill(DistillCmd),
    /// Ask the expert for programs and execute them over a corpus.
    Refine(RefineCmd),
    /// Execute cached programs over a corpus without any network access.
    Execute(ExecuteCmd),
    /// Compare an original and a refined corpus.
    Stats(StatsCmd),
    /// Run the oracle closure evaluation on a synthetic labelled corpus.
    SynthEval(SynthEvalCmd),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Chunk(_) => "chunk",
            Command::Distill(_) => "distill",
            Command::Refine(_) => "refine",
            Command::Execute(_) => "execute",
            Command::Stats(_) => "stats",
            Command::SynthEval(_) => "synth-eval",
        }
    }
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// Input corpus (JSONL with `id`, `text`, optional `score`).
    #[arg(long = "in", value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Output file.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Resume cursor; progress is checkpointed here.
    #[arg(long, value_name = "PATH")]
    pub cursor: Option<PathBuf>,
    /// Process at most this many records in this invocation.
    #[arg(long)]
    pub limit: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ChunkModeArg {
    Greedy,
    Overlap,
}

impl From<ChunkModeArg> for ChunkMode {
    fn from(m: ChunkModeArg) -> Self {
        match m {
            ChunkModeArg::Greedy => ChunkMode::InferenceGreedy,
            ChunkModeArg::Overlap => ChunkMode::TrainingOverlap,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EditModeArg {
    Exact,
    Hierarchical,
}

impl From<EditModeArg> for EditMode {
    fn from(m: EditModeArg) -> Self {
        match m {
            EditModeArg::Exact => EditMode::ExactDp,
            EditModeArg::Hierarchical => EditMode::Hierarchical,
        }
    }
}

#[derive(Debug, Args)]
pub struct ChunkArgs {
    /// Chunk window in words.
    #[arg(long)]
    pub window: Option<usize>,
    /// Backward context in words for overlap chunking (default: 10% of the window).
    #[arg(long)]
    pub overlap: Option<usize>,
}

impl ChunkArgs {
    pub fn apply(&self, cfg: &mut ChunkConfig) {
        if let Some(window) = self.window {
            cfg.window = window;
            cfg.overlap_target = window / 10;
        }
        if let Some(overlap) = self.overlap {
            cfg.overlap_target = overlap;
        }
    }
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Reject pairs with an inserted or replacing span of at least this many chars.
    #[arg(long)]
    pub max_insert: Option<usize>,
    /// Reject pairs deleting fewer than this many chars (but more than zero).
    #[arg(long)]
    pub min_deleted: Option<usize>,
}

impl ThresholdArgs {
    pub fn apply(&self, t: &mut Thresholds) {
        if let Some(v) = self.max_insert {
            t.max_insert_chars = v;
        }
        if let Some(v) = self.min_deleted {
            t.min_deleted_chars = v;
        }
    }
}

#[derive(Debug, Args)]
pub struct EndpointArgs {
    /// Base URL of an OpenAI-compatible chat completions endpoint.
    #[arg(long, env = "DELREFINE_ENDPOINT", value_name = "URL")]
    pub endpoint: Option<String>,
    /// Model name sent with each request.
    #[arg(long, env = "DELREFINE_MODEL")]
    pub model: Option<String>,
    /// Name of the environment variable holding the API key.
    #[arg(long, value_name = "VAR")]
    pub api_key_env: Option<String>,
    /// Upper bound on concurrent requests.
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    /// Retries per request after the first attempt.
    #[arg(long)]
    pub max_retries: Option<u32>,
}

impl EndpointArgs {
    pub fn apply(&self, e: &mut EndpointConfig) {
        if let Some(v) = &self.endpoint {
            e.base_url = v.clone();
        }
        if let Some(v) = &self.model {
            e.model_name = v.clone();
        }
        if let Some(v) = &self.api_key_env {
            e.api_key_env = v.clone();
        }
        if let Some(v) = self.max_in_flight {
            e.max_in_flight = v;
        }
        if let Some(v) = self.max_retries {
            e.max_retries = v;
        }
    }
}

#[derive(Debug, Args)]
pub struct ChunkCmd {
    /// Input corpus.
    #[arg(long = "in", value_name = "PATH")]
    pub input: Option<PathBuf>,
    /// Chunk JSONL; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ChunkModeArg>,
    #[command(flatten)]
    pub chunk: ChunkArgs,
}

#[derive(Debug, Args)]
pub struct DistillCmd {
    #[command(flatten)]
    pub io: IoArgs,
    /// Reject log.
    #[arg(long, value_name = "PATH")]
    pub rejects: Option<PathBuf>,
    /// Chunking mode (default: overlap unless the manifest says otherwise).
    #[arg(long, value_enum)]
    pub mode: Option<ChunkModeArg>,
    #[arg(long, value_enum)]
    pub edit_mode: Option<EditModeArg>,
    #[command(flatten)]
    pub chunk: ChunkArgs,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
}

#[derive(Debug, Args)]
pub struct RefineCmd {
    #[command(flatten)]
    pub io: IoArgs,
    /// Per-document execution report.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
    /// Where to cache the generated programs.
    #[arg(long, value_name = "PATH")]
    pub programs: Option<PathBuf>,
    /// Stop dispatching after this many input words in this invocation.
    #[arg(long)]
    pub word_budget: Option<u64>,
    #[command(flatten)]
    pub chunk: ChunkArgs,
    #[command(flatten)]
    pub endpoint: EndpointArgs,
}

#[derive(Debug, Args)]
pub struct ExecuteCmd {
    #[command(flatten)]
    pub io: IoArgs,
    /// Program JSONL (`id`, `program`) produced by `refine`.
    #[arg(long, value_name = "PATH")]
    pub programs: Option<PathBuf>,
    /// Per-document execution report.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsCmd {
    /// Original corpus.
    #[arg(long, value_name = "PATH")]
    pub original: Option<PathBuf>,
    /// Refined corpus with the same ids.
    #[arg(long, value_name = "PATH")]
    pub refined: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthEvalCmd {
    /// Noise generator seed.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Number of synthetic documents.
    #[arg(long, default_value_t = 1000)]
    pub docs: usize,
    #[arg(long, value_enum)]
    pub edit_mode: Option<EditModeArg>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub chunk: ChunkArgs,
    /// Keep intermediate files here instead of a temporary directory.
    #[arg(long, value_name = "DIR")]
    pub workdir: Option<PathBuf>,
    /// Write the labelled corpus (with injected span annotations) as JSONL.
    #[arg(long, value_name = "PATH")]
    pub corpus_out: Option<PathBuf>,
}
