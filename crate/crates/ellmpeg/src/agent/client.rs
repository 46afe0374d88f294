//! Chat-completion clients.
//!
//! The HTTP client speaks the common chat-completion wire protocol:
//! POST `{"model", "messages": [{"role", "content"}], "temperature",
//! "max_tokens"}`. The scripted client replays canned replies and records
//! every request, for tests and deterministic benchmark runs.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChatRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
}

/// One completion, with whatever accounting the server provided.
/// `latency_secs` is wall time for real clients and scripted values for
/// test clients, which keeps benchmark reports reproducible.
#[derive(Debug, Clone)]
pub struct ChatCompletion {
    pub text: String,
    pub prompt_tokens: Option<u32>,
    pub completion_tokens: Option<u32>,
    pub latency_secs: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ChatError {
    #[error("chat transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("assembled prompt of {len} chars exceeds the {budget}-char budget")]
    PromptBudgetExceeded { len: usize, budget: usize },
    #[error("scripted client has no reply left")]
    ScriptExhausted,
}

pub trait ChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<ChatCompletion, ChatError>;
}

/// Retries apply to transport errors only, never to model-content issues.
#[derive(Debug, Clone, Copy)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub backoff_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 2,
            backoff_ms: 100,
        }
    }
}

pub fn complete_with_retry(
    client: &dyn ChatClient,
    request: &ChatRequest,
    policy: RetryPolicy,
) -> Result<ChatCompletion, ChatError> {
    let mut attempts = 0;
    loop {
        attempts += 1;
        match client.complete(request) {
            Ok(c) => return Ok(c),
            Err(ChatError::Transport { message, .. }) if attempts <= policy.max_retries => {
                std::thread::sleep(std::time::Duration::from_millis(
                    policy.backoff_ms << (attempts - 1),
                ));
                let _ = message;
            }
            Err(ChatError::Transport { message, .. }) => {
                return Err(ChatError::Transport { attempts, message })
            }
            Err(e) => return Err(e),
        }
    }
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
}

#[derive(Deserialize)]
struct WireMessage {
    content: String,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: Option<u32>,
    #[serde(default)]
    completion_tokens: Option<u32>,
}

pub struct HttpChatClient {
    pub endpoint: String,
    pub model_name: String,
    client: reqwest::blocking::Client,
}

impl HttpChatClient {
    pub fn new(endpoint: &str, model_name: &str) -> Self {
        Self {
            endpoint: endpoint.to_string(),
            model_name: model_name.to_string(),
            client: reqwest::blocking::Client::new(),
        }
    }
}

impl ChatClient for HttpChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<ChatCompletion, ChatError> {
        let body = WireRequest {
            model: &self.model_name,
            messages: &request.messages,
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        };
        let start = Instant::now();
        let response = self
            .client
            .post(&self.endpoint)
            .json(&body)
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.json::<WireResponse>())
            .map_err(|e| ChatError::Transport {
                attempts: 1,
                message: e.to_string(),
            })?;
        let latency_secs = start.elapsed().as_secs_f64();
        let choice = response
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| ChatError::Transport {
                attempts: 1,
                message: "response carried no choices".into(),
            })?;
        let usage = response.usage;
        Ok(ChatCompletion {
            text: choice.message.content,
            prompt_tokens: usage.as_ref().and_then(|u| u.prompt_tokens),
            completion_tokens: usage.as_ref().and_then(|u| u.completion_tokens),
            latency_secs,
        })
    }
}

/// One scripted reply, or a scripted transport failure.
#[derive(Debug, Clone)]
pub enum ScriptedReply {
    Text {
        text: String,
        prompt_tokens: Option<u32>,
        completion_tokens: Option<u32>,
        latency_secs: f64,
    },
    TransportError(String),
}

impl ScriptedReply {
    pub fn text(s: impl Into<String>) -> Self {
        ScriptedReply::Text {
            text: s.into(),
            prompt_tokens: None,
            completion_tokens: None,
            latency_secs: 0.0,
        }
    }

    pub fn timed(s: impl Into<String>, prompt_tokens: u32, completion_tokens: u32, latency_secs: f64) -> Self {
        ScriptedReply::Text {
            text: s.into(),
            prompt_tokens: Some(prompt_tokens),
            completion_tokens: Some(completion_tokens),
            latency_secs,
        }
    }
}

/// Replays a queue of scripted replies; when the queue is empty, falls
/// back to the default reply if one is set. Records every request.
#[derive(Default)]
pub struct ScriptedChatClient {
    queue: Mutex<VecDeque<ScriptedReply>>,
    default_reply: Mutex<Option<ScriptedReply>>,
    requests: Mutex<Vec<ChatRequest>>,
}

impl ScriptedChatClient {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&self, reply: ScriptedReply) {
        self.queue.lock().unwrap().push_back(reply);
    }

    pub fn with_replies(replies: impl IntoIterator<Item = ScriptedReply>) -> Self {
        let c = Self::new();
        for r in replies {
            c.push(r);
        }
        c
    }

    pub fn set_default(&self, reply: ScriptedReply) {
        *self.default_reply.lock().unwrap() = Some(reply);
    }

    pub fn call_count(&self) -> usize {
        self.requests.lock().unwrap().len()
    }

    pub fn recorded_requests(&self) -> Vec<ChatRequest> {
        self.requests.lock().unwrap().clone()
    }
}

impl ChatClient for ScriptedChatClient {
    fn complete(&self, request: &ChatRequest) -> Result<ChatCompletion, ChatError> {
        self.requests.lock().unwrap().push(request.clone());
        let reply = self
            .queue
            .lock()
            .unwrap()
            .pop_front()
            .or_else(|| self.default_reply.lock().unwrap().clone())
            .ok_or(ChatError::ScriptExhausted)?;
        match reply {
            ScriptedReply::Text {
                text,
                prompt_tokens,
                completion_tokens,
                latency_secs,
            } => Ok(ChatCompletion {
                text,
                prompt_tokens,
                completion_tokens,
                latency_secs,
            }),
            ScriptedReply::TransportError(message) => Err(ChatError::Transport {
                attempts: 1,
                message,
            }),
        }
    }
}
