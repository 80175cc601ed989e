use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::{ChatModel, ClientError, Completion, EndpointConfig};

const MAX_BACKOFF: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ClientStats {
    pub requests: u64,
    pub retries: u64,
    pub failures: u64,
    /// Highest number of simultaneously outstanding requests observed.
    pub peak_in_flight: usize,
}

struct Permits {
    available: Mutex<usize>,
    freed: Condvar,
}

struct Permit<'a>(&'a Permits);

impl Permits {
    fn acquire(&self) -> Permit<'_> {
        let mut available = self.available.lock().unwrap_or_else(|e| e.into_inner());
        while *available == 0 {
            available = self
                .freed
                .wait(available)
                .unwrap_or_else(|e| e.into_inner());
        }
        *available -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.freed.notify_one();
    }
}

/// Blocking client for an OpenAI-compatible `/chat/completions` endpoint.
///
/// Transport errors, HTTP 429 and 5xx responses are retried with
/// exponential backoff; other failures return immediately. At most
/// `max_in_flight` requests are outstanding at any time.
pub struct HttpChatModel {
    config: EndpointConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
    permits: Permits,
    in_flight: AtomicUsize,
    peak_in_flight: AtomicUsize,
    requests: AtomicU64,
    retries: AtomicU64,
    failures: AtomicU64,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [Message<'a>; 1],
    top_p: f64,
    top_k: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_tokens: Option<u32>,
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ResponseMessage {
    content: Option<String>,
}

enum Attempt {
    Done(Result<Completion, ClientError>),
    Retry(ClientError),
}

impl HttpChatModel {
    /// Builds a client; the API key is read from `config.api_key_env`.
    pub fn new(config: EndpointConfig) -> Result<Self, ClientError> {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty());
        Self::with_api_key(config, api_key)
    }

    pub fn with_api_key(
        config: EndpointConfig,
        api_key: Option<String>,
    ) -> Result<Self, ClientError> {
        config.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| ClientError::Config(e.to_string()))?;
        Ok(Self {
            permits: Permits {
                available: Mutex::new(config.max_in_flight),
                freed: Condvar::new(),
            },
            config,
            api_key,
            client,
            in_flight: AtomicUsize::new(0),
            peak_in_flight: AtomicUsize::new(0),
            requests: AtomicU64::new(0),
            retries: AtomicU64::new(0),
            failures: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &EndpointConfig {
        &self.config
    }

    pub fn stats(&self) -> ClientStats {
        ClientStats {
            requests: self.requests.load(Ordering::Relaxed),
            retries: self.retries.load(Ordering::Relaxed),
            failures: self.failures.load(Ordering::Relaxed),
            peak_in_flight: self.peak_in_flight.load(Ordering::Relaxed),
        }
    }

    fn url(&self) -> String {
        format!(
            "{}/chat/completions",
            self.config.base_url.trim_end_matches('/')
        )
    }

    fn attempt(&self, body: &ChatRequest<'_>) -> Attempt {
        let mut request = self.client.post(self.url()).json(body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = match request.send() {
            Ok(r) => r,
            Err(e) => {
                return Attempt::Retry(ClientError::Transport {
                    attempts: 0,
                    message: e.to_string(),
                })
            }
        };
        let status = response.status();
        if !status.is_success() {
            let err = ClientError::Status {
                status: status.as_u16(),
                body: response.text().unwrap_or_default(),
            };
            return if status.as_u16() == 429 || status.is_server_error() {
                Attempt::Retry(err)
            } else {
                Attempt::Done(Err(err))
            };
        }
        let parsed: ChatResponse = match response.json() {
            Ok(p) => p,
            Err(e) if e.is_decode() => {
                return Attempt::Done(Err(ClientError::Malformed(e.to_string())))
            }
            Err(e) => {
                return Attempt::Retry(ClientError::Transport {
                    attempts: 0,
                    message: e.to_string(),
                })
            }
        };
        let Some(choice) = parsed.choices.into_iter().next() else {
            return Attempt::Done(Err(ClientError::Malformed("no choices".into())));
        };
        if choice.finish_reason.as_deref() == Some("length") {
            return Attempt::Done(Err(ClientError::Truncated));
        }
        Attempt::Done(Ok(Completion {
            text: choice.message.content.unwrap_or_default(),
            finish_reason: choice.finish_reason,
            retries: 0,
        }))
    }

    fn backoff(&self, retry: u32) -> Duration {
        let ms = self
            .config
            .backoff_base_ms
            .saturating_mul(1u64 << retry.min(20));
        Duration::from_millis(ms).min(MAX_BACKOFF)
    }
}

impl ChatModel for HttpChatModel {
    fn complete(&self, prompt: &str) -> Result<Completion, ClientError> {
        let body = ChatRequest {
            model: &self.config.model_name,
            messages: [Message {
                role: "user",
                content: prompt,
            }],
            top_p: self.config.top_p,
            top_k: self.config.top_k,
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
        };

        let _permit = self.permits.acquire();
        let now = self.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak_in_flight.fetch_max(now, Ordering::SeqCst);
        self.requests.fetch_add(1, Ordering::Relaxed);

        let mut retry = 0;
        let result = loop {
            match self.attempt(&body) {
                Attempt::Done(result) => break result,
                Attempt::Retry(err) if retry < self.config.max_retries => {
                    warn!(
                        "request failed ({err}); retry {} of {}",
                        retry + 1,
                        self.config.max_retries
                    );
                    thread::sleep(self.backoff(retry));
                    retry += 1;
                    self.retries.fetch_add(1, Ordering::Relaxed);
                }
                Attempt::Retry(err) => {
                    break Err(match err {
                        ClientError::Transport { message, .. } => ClientError::Transport {
                            attempts: retry + 1,
                            message,
                        },
                        other => other,
                    })
                }
            }
        };
        self.in_flight.fetch_sub(1, Ordering::SeqCst);

        match result {
            Ok(mut completion) => {
                completion.retries = retry;
                debug!("completion after {retry} retries");
                Ok(completion)
            }
            Err(e) => {
                self.failures.fetch_add(1, Ordering::Relaxed);
                Err(e)
            }
        }
    }
}
