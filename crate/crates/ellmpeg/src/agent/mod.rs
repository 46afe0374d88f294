//! LLM reasoning: tool selection, retrieval-grounded generation, and the
//! bounded self-reflection/revision loop.

mod client;
mod pipeline;
pub mod prompts;

pub use client::{
    complete_with_retry, ChatClient, ChatCompletion, ChatError, ChatMessage, ChatRequest,
    HttpChatClient, RetryPolicy, Role, ScriptedChatClient, ScriptedReply,
};
pub use pipeline::{
    run_pipeline, AnswerRecord, CallParams, PipelineConfig, PipelineContext, TokenCount,
};

use serde::{Deserialize, Serialize};

use crate::corpus::ToolTag;

/// Tool routing label produced by the model. Never unset: unparseable
/// output falls back to `Both`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToolLabel {
    FFmpeg,
    VVenC,
    Both,
}

impl ToolLabel {
    /// Store routing: `Both` selects the union pool.
    pub fn store_tag(self) -> Option<ToolTag> {
        match self {
            ToolLabel::FFmpeg => Some(ToolTag::FFmpeg),
            ToolLabel::VVenC => Some(ToolTag::VVenC),
            ToolLabel::Both => None,
        }
    }
}

/// Lowercase-trim the first token; exact matches map directly; otherwise
/// substring scan. Both or neither tool mentioned falls back to `Both`.
pub fn parse_tool_label(raw: &str) -> ToolLabel {
    let first = raw
        .split_whitespace()
        .next()
        .unwrap_or("")
        .trim_matches(|c: char| !c.is_ascii_alphanumeric())
        .to_lowercase();
    match first.as_str() {
        "ffmpeg" => return ToolLabel::FFmpeg,
        "vvenc" => return ToolLabel::VVenC,
        "both" => return ToolLabel::Both,
        _ => {}
    }
    let lower = raw.to_lowercase();
    match (lower.contains("ffmpeg"), lower.contains("vvenc")) {
        (true, false) => ToolLabel::FFmpeg,
        (false, true) => ToolLabel::VVenC,
        _ => ToolLabel::Both,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Ok,
    Revise,
}

/// Parsed self-reflection feedback.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feedback {
    pub raw: String,
    pub verdict: Verdict,
    pub notes: String,
}

/// The reflection prompt mandates a first line of exactly "OK" or
/// "REVISE". A missing marker is conservatively treated as REVISE.
pub fn parse_feedback(raw: &str) -> Feedback {
    let mut lines = raw.trim_start().lines();
    let first = lines.next().unwrap_or("").trim();
    let rest = lines.collect::<Vec<_>>().join("\n").trim().to_string();
    match first {
        "OK" => Feedback {
            raw: raw.to_string(),
            verdict: Verdict::Ok,
            notes: rest,
        },
        "REVISE" => Feedback {
            raw: raw.to_string(),
            verdict: Verdict::Revise,
            notes: rest,
        },
        _ => Feedback {
            raw: raw.to_string(),
            verdict: Verdict::Revise,
            notes: raw.to_string(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_from_exact_word() {
        assert_eq!(parse_tool_label("FFmpeg"), ToolLabel::FFmpeg);
        assert_eq!(parse_tool_label("vvenc"), ToolLabel::VVenC);
        assert_eq!(parse_tool_label("Both"), ToolLabel::Both);
        assert_eq!(parse_tool_label("  VVenC.  "), ToolLabel::VVenC);
    }

    #[test]
    fn label_from_substring_scan() {
        assert_eq!(parse_tool_label("I would use ffmpeg here."), ToolLabel::FFmpeg);
        assert_eq!(parse_tool_label("The VVenC encoder fits."), ToolLabel::VVenC);
    }

    #[test]
    fn label_fallback_is_both() {
        assert_eq!(parse_tool_label("You may need both tools."), ToolLabel::Both);
        assert_eq!(parse_tool_label(""), ToolLabel::Both);
        assert_eq!(
            parse_tool_label("use ffmpeg to feed vvenc"),
            ToolLabel::Both
        );
    }

    #[test]
    fn feedback_marker_ok() {
        let fb = parse_feedback("OK\nlooks good");
        assert_eq!(fb.verdict, Verdict::Ok);
        assert_eq!(fb.notes, "looks good");
    }

    #[test]
    fn feedback_marker_revise() {
        let fb = parse_feedback("REVISE\nmissing output file");
        assert_eq!(fb.verdict, Verdict::Revise);
        assert_eq!(fb.notes, "missing output file");
    }

    #[test]
    fn feedback_missing_marker_is_conservative_revise() {
        let fb = parse_feedback("The command seems fine to me overall.");
        assert_eq!(fb.verdict, Verdict::Revise);
        assert_eq!(fb.notes, fb.raw);
    }
}
