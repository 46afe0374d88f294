//! Pipeline orchestration: the reasoning phase end to end.
//!
//! Base mode is a single generation call. RAG mode adds tool selection and
//! retrieval (two LLM calls). Full mode adds the self-reflection loop,
//! bounded by `i_max`: each iteration is one reflection call plus, when the
//! feedback demands it, one revision call. An OK verdict exits immediately.

use serde::{Deserialize, Serialize};

use crate::config::PipelineMode;
use crate::retrieval::{search, EmbeddingProvider, ScoredChunk, StorePair};

use super::client::{complete_with_retry, ChatCompletion, ChatMessage, ChatRequest, RetryPolicy};
use super::{parse_feedback, parse_tool_label, prompts, ChatClient, ChatError, Feedback, ToolLabel, Verdict};

/// Per-call generation parameters plus the prompt budget and retry policy.
#[derive(Debug, Clone, Copy)]
pub struct CallParams {
    pub temperature: f64,
    pub max_tokens: u32,
    pub char_budget: usize,
    pub retry: RetryPolicy,
}

impl Default for CallParams {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            max_tokens: 1024,
            char_budget: 16_000,
            retry: RetryPolicy::default(),
        }
    }
}

fn issue(
    chat: &dyn ChatClient,
    prompt: String,
    params: &CallParams,
) -> Result<ChatCompletion, ChatError> {
    let request = ChatRequest {
        messages: vec![ChatMessage::user(prompt)],
        temperature: params.temperature,
        max_tokens: params.max_tokens,
    };
    complete_with_retry(chat, &request, params.retry)
}

/// Asks the model which tool the query concerns. Unparseable output falls
/// back to `Both`; only transport-level failure is an error.
pub fn select_tool(
    chat: &dyn ChatClient,
    query: &str,
    params: &CallParams,
) -> Result<(ToolLabel, ChatCompletion), ChatError> {
    let prompt = prompts::render_tool_select(query);
    let completion = issue(chat, prompt, params)?;
    Ok((parse_tool_label(&completion.text), completion))
}

/// Retrieval-grounded generation. `retrieved` may be empty.
pub fn generate(
    chat: &dyn ChatClient,
    query: &str,
    retrieved: &[ScoredChunk],
    params: &CallParams,
) -> Result<(String, ChatCompletion), ChatError> {
    let (prompt, _kept) = prompts::render_generate(query, retrieved, params.char_budget)?;
    let completion = issue(chat, prompt, params)?;
    Ok((completion.text.clone(), completion))
}

/// Base-mode generation: no context section at all.
pub fn generate_base(
    chat: &dyn ChatClient,
    query: &str,
    params: &CallParams,
) -> Result<(String, ChatCompletion), ChatError> {
    let prompt = prompts::render_generate_base(query, params.char_budget)?;
    let completion = issue(chat, prompt, params)?;
    Ok((completion.text.clone(), completion))
}

pub fn reflect(
    chat: &dyn ChatClient,
    query: &str,
    answer: &str,
    retrieved: &[ScoredChunk],
    params: &CallParams,
) -> Result<(Feedback, ChatCompletion), ChatError> {
    let (prompt, _kept) = prompts::render_reflect(query, answer, retrieved, params.char_budget)?;
    let completion = issue(chat, prompt, params)?;
    Ok((parse_feedback(&completion.text), completion))
}

pub fn revise(
    chat: &dyn ChatClient,
    query: &str,
    retrieved: &[ScoredChunk],
    answer: &str,
    feedback: &Feedback,
    params: &CallParams,
) -> Result<(String, ChatCompletion), ChatError> {
    let (prompt, _kept) =
        prompts::render_revise(query, answer, &feedback.raw, retrieved, params.char_budget)?;
    let completion = issue(chat, prompt, params)?;
    Ok((completion.text.clone(), completion))
}

/// Prompt/completion token counts for one LLM call. `estimated` is set
/// when the server reported no counts and a whitespace estimate was used.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenCount {
    pub prompt: u32,
    pub completion: u32,
    pub estimated: bool,
}

/// Full trace of one pipeline run over one query.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub schema_version: u32,
    pub query: String,
    pub mode: PipelineMode,
    pub tool: ToolLabel,
    pub retrieved: Vec<ScoredChunk>,
    pub answer: String,
    pub feedback_trail: Vec<Feedback>,
    pub llm_calls: u32,
    pub token_counts: Vec<TokenCount>,
    pub wall_times: Vec<f64>,
    pub stages: Vec<String>,
    pub template_hash: String,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
}

pub const ANSWER_RECORD_SCHEMA_VERSION: u32 = 1;

impl AnswerRecord {
    fn new(query: &str, mode: PipelineMode) -> Self {
        Self {
            schema_version: ANSWER_RECORD_SCHEMA_VERSION,
            query: query.to_string(),
            mode,
            tool: ToolLabel::Both,
            retrieved: Vec::new(),
            answer: String::new(),
            feedback_trail: Vec::new(),
            llm_calls: 0,
            token_counts: Vec::new(),
            wall_times: Vec::new(),
            stages: Vec::new(),
            template_hash: prompts::template_bundle_hash(),
            failed_stage: None,
            error: None,
        }
    }

    fn record_call(&mut self, completion: &ChatCompletion, prompt_chars_estimate: &str) {
        self.llm_calls += 1;
        let estimated = completion.prompt_tokens.is_none() || completion.completion_tokens.is_none();
        self.token_counts.push(TokenCount {
            prompt: completion
                .prompt_tokens
                .unwrap_or_else(|| prompt_chars_estimate.split_whitespace().count() as u32),
            completion: completion
                .completion_tokens
                .unwrap_or_else(|| completion.text.split_whitespace().count() as u32),
            estimated,
        });
        self.wall_times.push(completion.latency_secs);
    }

    /// Total inference wall time across all LLM calls.
    pub fn inference_secs(&self) -> f64 {
        self.wall_times.iter().sum()
    }

    pub fn completion_tokens_total(&self) -> u32 {
        self.token_counts.iter().map(|t| t.completion).sum()
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub mode: PipelineMode,
    pub i_max: u32,
    pub k: usize,
    pub params: CallParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: PipelineMode::Full,
            i_max: 1,
            k: 5,
            params: CallParams::default(),
        }
    }
}

pub struct PipelineContext<'a> {
    pub chat: &'a dyn ChatClient,
    pub embedder: Option<&'a dyn EmbeddingProvider>,
    pub stores: Option<&'a StorePair>,
}

/// Runs one query through the configured pipeline mode. Never panics on
/// model output; unrecoverable client errors mark the record failed with
/// the stage name.
pub fn run_pipeline(query: &str, ctx: &PipelineContext, cfg: &PipelineConfig) -> AnswerRecord {
    let mut rec = AnswerRecord::new(query, cfg.mode);
    if let Err((stage, message)) = drive(query, ctx, cfg, &mut rec) {
        rec.failed_stage = Some(stage);
        rec.error = Some(message);
    }
    rec
}

fn drive(
    query: &str,
    ctx: &PipelineContext,
    cfg: &PipelineConfig,
    rec: &mut AnswerRecord,
) -> Result<(), (String, String)> {
    let fail = |stage: &str| {
        let stage = stage.to_string();
        move |e: ChatError| (stage.clone(), e.to_string())
    };
    if query.trim().is_empty() {
        return Err(("validate".into(), "empty query".into()));
    }
    let params = &cfg.params;

    if cfg.mode == PipelineMode::Base {
        rec.stages.push("generate".into());
        let (answer, completion) = generate_base(ctx.chat, query, params).map_err(fail("generate"))?;
        rec.record_call(&completion, query);
        rec.answer = answer;
        return Ok(());
    }

    // Tool selection.
    rec.stages.push("select_tool".into());
    let (tool, completion) = select_tool(ctx.chat, query, params).map_err(fail("select_tool"))?;
    rec.record_call(&completion, query);
    rec.tool = tool;

    // Retrieval.
    rec.stages.push("retrieve".into());
    let stores = ctx
        .stores
        .ok_or_else(|| ("retrieve".to_string(), "vector stores not loaded".to_string()))?;
    let embedder = ctx
        .embedder
        .ok_or_else(|| ("retrieve".to_string(), "embedding provider not configured".to_string()))?;
    let query_vector = embedder
        .embed(query)
        .map_err(|e| ("retrieve".to_string(), e.to_string()))?;
    let selected = stores.select(tool.store_tag());
    rec.retrieved = search(&selected, &query_vector, cfg.k)
        .map_err(|e| ("retrieve".to_string(), e.to_string()))?;

    // Generation.
    rec.stages.push("generate".into());
    let (answer, completion) =
        generate(ctx.chat, query, &rec.retrieved, params).map_err(fail("generate"))?;
    rec.record_call(&completion, query);
    rec.answer = answer;

    if cfg.mode == PipelineMode::RagOnly {
        return Ok(());
    }

    // Self-reflection loop, bounded by i_max.
    for _ in 0..cfg.i_max {
        rec.stages.push("reflect".into());
        let (feedback, completion) =
            reflect(ctx.chat, query, &rec.answer, &rec.retrieved, params).map_err(fail("reflect"))?;
        rec.record_call(&completion, query);
        let verdict = feedback.verdict;
        rec.feedback_trail.push(feedback);
        if verdict == Verdict::Ok {
            break;
        }
        rec.stages.push("revise".into());
        let last = rec.feedback_trail.last().expect("just pushed");
        let (answer, completion) =
            revise(ctx.chat, query, &rec.retrieved, &rec.answer, last, params)
                .map_err(fail("revise"))?;
        rec.record_call(&completion, query);
        rec.answer = answer;
    }
    Ok(())
}
