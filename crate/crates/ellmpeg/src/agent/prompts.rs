//! Prompt templates and budget-aware assembly.
//!
//! Templates are versioned files shipped with the crate; their combined
//! hash is recorded in every answer record so evaluation runs can be tied
//! to the exact prompt wording. Assembled prompts never exceed the
//! character budget: the lowest-ranked retrieved chunks are dropped first,
//! the query never.

use sha2::{Digest, Sha256};

use crate::retrieval::ScoredChunk;

use super::ChatError;

pub const TOOL_SELECT: &str = include_str!("../../templates/tool_select.txt");
pub const GENERATE: &str = include_str!("../../templates/generate.txt");
pub const GENERATE_BASE: &str = include_str!("../../templates/generate_base.txt");
pub const REFLECT: &str = include_str!("../../templates/reflect.txt");
pub const REVISE: &str = include_str!("../../templates/revise.txt");
pub const JUDGE: &str = include_str!("../../templates/judge.txt");

/// Hex SHA-256 over all shipped templates, in a fixed order.
pub fn template_bundle_hash() -> String {
    let mut hasher = Sha256::new();
    for t in [TOOL_SELECT, GENERATE, GENERATE_BASE, REFLECT, REVISE, JUDGE] {
        hasher.update(t.as_bytes());
        hasher.update([0u8]);
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn fill(template: &str, pairs: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in pairs {
        out = out.replace(&format!("{{{{{key}}}}}"), value);
    }
    out
}

/// Each retrieved chunk is rendered with its source metadata, in rank order.
fn context_block(chunks: &[ScoredChunk]) -> String {
    if chunks.is_empty() {
        return "(none)".to_string();
    }
    chunks
        .iter()
        .map(|sc| {
            format!(
                "[{} #{}]\n{}",
                sc.chunk.metadata.source_file, sc.chunk.metadata.chunk_index, sc.chunk.content
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

pub fn render_tool_select(query: &str) -> String {
    fill(TOOL_SELECT, &[("query", query)])
}

pub fn render_judge(query: &str, answer: &str) -> String {
    fill(JUDGE, &[("query", query), ("answer", answer)])
}

/// Renders `template` with the largest prefix of `retrieved` that fits the
/// budget. Returns the prompt and how many chunks were kept. Errors only
/// if the prompt exceeds the budget even with zero chunks.
fn render_within_budget(
    template: &str,
    retrieved: &[ScoredChunk],
    budget: usize,
    extra: &[(&str, &str)],
) -> Result<(String, usize), ChatError> {
    for keep in (0..=retrieved.len()).rev() {
        let context = context_block(&retrieved[..keep]);
        let mut pairs = vec![("context", context.as_str())];
        pairs.extend_from_slice(extra);
        let prompt = fill(template, &pairs);
        let len = prompt.chars().count();
        if len <= budget {
            return Ok((prompt, keep));
        }
        if keep == 0 {
            return Err(ChatError::PromptBudgetExceeded { len, budget });
        }
    }
    unreachable!("loop always returns at keep == 0")
}

pub fn render_generate(
    query: &str,
    retrieved: &[ScoredChunk],
    budget: usize,
) -> Result<(String, usize), ChatError> {
    render_within_budget(GENERATE, retrieved, budget, &[("query", query)])
}

pub fn render_generate_base(query: &str, budget: usize) -> Result<String, ChatError> {
    let prompt = fill(GENERATE_BASE, &[("query", query)]);
    let len = prompt.chars().count();
    if len > budget {
        return Err(ChatError::PromptBudgetExceeded { len, budget });
    }
    Ok(prompt)
}

pub fn render_reflect(
    query: &str,
    answer: &str,
    retrieved: &[ScoredChunk],
    budget: usize,
) -> Result<(String, usize), ChatError> {
    render_within_budget(
        REFLECT,
        retrieved,
        budget,
        &[("query", query), ("answer", answer)],
    )
}

pub fn render_revise(
    query: &str,
    answer: &str,
    feedback: &str,
    retrieved: &[ScoredChunk],
    budget: usize,
) -> Result<(String, usize), ChatError> {
    render_within_budget(
        REVISE,
        retrieved,
        budget,
        &[("query", query), ("answer", answer), ("feedback", feedback)],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Chunk, ChunkMetadata, ToolTag};

    fn scored(text: &str, idx: u32) -> ScoredChunk {
        ScoredChunk {
            chunk: Chunk {
                content: text.to_string(),
                metadata: ChunkMetadata {
                    source_file: "doc.txt".into(),
                    chunk_index: idx,
                    tool_tag: ToolTag::FFmpeg,
                },
            },
            distance: idx as f64,
        }
    }

    #[test]
    fn generate_prompt_contains_all_chunks_in_rank_order() {
        let retrieved: Vec<ScoredChunk> = (0..5).map(|i| scored(&format!("chunk text {i}"), i)).collect();
        let (prompt, kept) = render_generate("rotate a video", &retrieved, 16_000).unwrap();
        assert_eq!(kept, 5);
        let mut last = 0;
        for i in 0..5 {
            let pos = prompt.find(&format!("chunk text {i}")).unwrap();
            assert!(pos > last);
            last = pos;
        }
        assert!(prompt.contains("[doc.txt #2]"));
        assert!(prompt.contains("rotate a video"));
    }

    #[test]
    fn base_prompt_has_no_context_section() {
        let prompt = render_generate_base("rotate a video", 16_000).unwrap();
        assert!(!prompt.contains("Documentation"));
        assert!(prompt.contains("rotate a video"));
    }

    #[test]
    fn budget_drops_lowest_ranked_chunks_first() {
        let retrieved: Vec<ScoredChunk> = (0..5)
            .map(|i| scored(&"x".repeat(200), i))
            .collect();
        let base_len = render_generate("q", &[], 10_000).unwrap().0.chars().count();
        let budget = base_len + 2 * 230; // room for roughly two chunk blocks
        let (prompt, kept) = render_generate("q", &retrieved, budget).unwrap();
        assert!(kept < 5 && kept >= 1, "kept {kept}");
        assert!(prompt.contains("[doc.txt #0]"));
        assert!(!prompt.contains(&format!("[doc.txt #{}]", 4)));
    }

    #[test]
    fn query_is_never_dropped() {
        let long_query = "q".repeat(500);
        let err = render_generate(&long_query, &[], 100).unwrap_err();
        assert!(matches!(err, ChatError::PromptBudgetExceeded { .. }));
    }

    #[test]
    fn template_hash_is_stable_across_calls() {
        assert_eq!(template_bundle_hash(), template_bundle_hash());
        assert_eq!(template_bundle_hash().len(), 64);
    }
}
