//! Chat-model access for expert refinement and program generation.

mod http;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use http::{ClientStats, HttpChatModel};

/// End-to-end refinement prompt; `{input_text_task}` is the document slot.
pub const E2E_PROMPT_V1: &str = include_str!("../../assets/e2e_refine_prompt_v1.txt");
/// Prompt wrapper for the distilled program-writing model.
pub const REFINE_PROMPT_V1: &str = include_str!("../../assets/refine_prompt_v1.txt");
pub const PROMPT_SLOT: &str = "{input_text_task}";
pub const DEFAULT_API_KEY_ENV: &str = "DELREFINE_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model_name: String,
    /// Name of the environment variable holding the API key. The key itself
    /// is never stored in configuration.
    pub api_key_env: String,
    pub top_p: f64,
    pub top_k: u32,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub max_retries: u32,
    pub timeout_secs: f64,
    pub backoff_base_ms: u64,
    pub max_in_flight: usize,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:8000/v1".into(),
            model_name: "default".into(),
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            top_p: 0.8,
            top_k: 20,
            temperature: None,
            max_tokens: None,
            max_retries: 3,
            timeout_secs: 120.0,
            backoff_base_ms: 500,
            max_in_flight: 8,
        }
    }
}

impl EndpointConfig {
    pub fn validate(&self) -> Result<(), ClientError> {
        if self.max_in_flight == 0 {
            return Err(ClientError::Config(
                "max_in_flight must be at least 1".into(),
            ));
        }
        if self.timeout_secs.is_nan() || self.timeout_secs <= 0.0 {
            return Err(ClientError::Config("timeout_secs must be positive".into()));
        }
        if self.base_url.is_empty() {
            return Err(ClientError::Config("base_url is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub finish_reason: Option<String>,
    /// Retries spent on this request.
    pub retries: u32,
}

impl Completion {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            finish_reason: Some("stop".into()),
            retries: 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClientError {
    #[error("transport error after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("model output was truncated")]
    Truncated,
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error("invalid endpoint configuration: {0}")]
    Config(String),
}

impl ClientError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Transport { .. } => "transport-error",
            Self::Status { .. } => "http-status",
            Self::Truncated => "truncated-output",
            Self::Malformed(_) => "malformed-response",
            Self::Config(_) => "config",
        }
    }
}

/// A single-turn chat endpoint. Implementations must be shareable across
/// worker threads.
pub trait ChatModel: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<Completion, ClientError>;
}

impl<F> ChatModel for F
where
    F: Fn(&str) -> Result<Completion, ClientError> + Send + Sync,
{
    fn complete(&self, prompt: &str) -> Result<Completion, ClientError> {
        self(prompt)
    }
}

pub fn render_prompt(template: &str, chunk_text: &str) -> String {
    template.replacen(PROMPT_SLOT, chunk_text, 1)
}

/// Recovers the document text from a prompt rendered by [`render_prompt`].
pub fn prompt_document<'p>(template: &str, prompt: &'p str) -> Option<&'p str> {
    let (head, tail) = template.split_once(PROMPT_SLOT)?;
    prompt.strip_prefix(head)?.strip_suffix(tail)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct E2EResponse {
    pub modification_reason: String,
    pub refined_text: String,
    pub raw: String,
}

const DOC_OPEN: &str = "[doc]";
const DOC_CLOSE: &str = "[/doc]";
const REASON_LABEL: &str = "modification_reason:";
const REFINED_LABEL: &str = "refined_text:";

/// Parses the two labelled `[doc]...[/doc]` blocks of an expert response.
///
/// The last `refined_text:` label wins, so echoed examples are ignored.
/// The reason block is optional; a bare `refined_text:` block is enough.
/// Block contents are returned exactly, without trimming.
pub fn parse_e2e_response(raw: &str) -> Result<E2EResponse, ClientError> {
    let malformed = |what: &str| ClientError::Malformed(what.to_owned());
    let label = raw
        .rfind(REFINED_LABEL)
        .ok_or_else(|| malformed("missing refined_text label"))?;
    let refined_text = delimited(&raw[label + REFINED_LABEL.len()..])
        .ok_or_else(|| malformed("refined_text block is not [doc]-delimited"))?;

    let head = &raw[..label];
    let modification_reason = match head.rfind(REASON_LABEL) {
        None => "",
        Some(at) => delimited(&head[at + REASON_LABEL.len()..])
            .ok_or_else(|| malformed("modification_reason block is not [doc]-delimited"))?,
    };

    Ok(E2EResponse {
        modification_reason: modification_reason.to_owned(),
        refined_text: refined_text.to_owned(),
        raw: raw.to_owned(),
    })
}

fn delimited(after_label: &str) -> Option<&str> {
    let body = after_label.trim_start().strip_prefix(DOC_OPEN)?;
    let end = body.rfind(DOC_CLOSE)?;
    Some(&body[..end])
}

/// Sends the end-to-end refinement prompt for `chunk_text` and parses the reply.
pub fn request_e2e_refinement(
    model: &dyn ChatModel,
    chunk_text: &str,
) -> Result<E2EResponse, ClientError> {
    let completion = model.complete(&render_prompt(E2E_PROMPT_V1, chunk_text))?;
    parse_e2e_response(&completion.text)
}

/// Asks the program model for a program; the output is returned verbatim.
pub fn request_program(model: &dyn ChatModel, chunk_text: &str) -> Result<Completion, ClientError> {
    model.complete(&render_prompt(REFINE_PROMPT_V1, chunk_text))
}

/// Formats an expert-style reply; handy for mocks and fixtures.
pub fn format_e2e_response(reason: &str, refined_text: &str) -> String {
    format!("{REASON_LABEL}\n{DOC_OPEN}{reason}{DOC_CLOSE}\n{REFINED_LABEL}\n{DOC_OPEN}{refined_text}{DOC_CLOSE}")
}
