//! LLM-as-judge correctness assessment.
//!
//! The judge prompt mandates a first line of exactly "CORRECT" or
//! "INCORRECT". An unparseable reply gets one re-ask; if the marker is
//! still missing, or the judge endpoint is unreachable, the query is
//! recorded as `Unjudged` rather than silently scored.

use serde::{Deserialize, Serialize};

use crate::agent::prompts::render_judge;
use crate::agent::{CallParams, ChatClient, ChatMessage, ChatRequest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JudgeVerdict {
    Correct,
    Incorrect,
    Unjudged,
}

/// First line exactly "CORRECT" or "INCORRECT"; anything else is no verdict.
pub fn parse_judge_verdict(raw: &str) -> Option<JudgeVerdict> {
    match raw.trim_start().lines().next().unwrap_or("").trim() {
        "CORRECT" => Some(JudgeVerdict::Correct),
        "INCORRECT" => Some(JudgeVerdict::Incorrect),
        _ => None,
    }
}

pub fn judge_answer(
    chat: &dyn ChatClient,
    query: &str,
    answer: &str,
    params: &CallParams,
) -> JudgeVerdict {
    let request = ChatRequest {
        messages: vec![ChatMessage::user(render_judge(query, answer))],
        temperature: params.temperature,
        max_tokens: params.max_tokens,
    };
    for _ in 0..2 {
        match crate::agent::complete_with_retry(chat, &request, params.retry) {
            Ok(completion) => {
                if let Some(verdict) = parse_judge_verdict(&completion.text) {
                    return verdict;
                }
            }
            Err(_) => return JudgeVerdict::Unjudged,
        }
    }
    JudgeVerdict::Unjudged
}
