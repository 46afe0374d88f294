//! Command extraction from answer text.

use super::tokenize::tokenize;

/// A command candidate pulled out of an answer. `raw_line` is the exact
/// substring of the answer at `source_span`; `argv` comes from the joined
/// (continuation-folded) text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedCommand {
    pub raw_line: String,
    pub program: String,
    pub argv: Vec<String>,
    /// Byte range in the answer.
    pub source_span: (usize, usize),
}

/// Scans an answer for executable content. Candidates are (a) lines inside
/// fenced code blocks that have command shape and (b) bare lines whose
/// first token is an allowlisted program. Trailing-backslash continuations
/// are joined. Prose is discarded. Malformed candidates are skipped and
/// reported in the diagnostics list.
pub fn extract_commands(answer: &str, allowlist: &[String]) -> (Vec<ExtractedCommand>, Vec<String>) {
    let mut commands = Vec::new();
    let mut diagnostics = Vec::new();

    // Physical lines with byte spans (excluding the newline).
    let mut lines: Vec<(usize, usize, &str)> = Vec::new();
    let mut offset = 0;
    for line in answer.split_inclusive('\n') {
        let body = line.trim_end_matches('\n').trim_end_matches('\r');
        lines.push((offset, offset + body.len(), body));
        offset += line.len();
    }

    let mut in_fence = false;
    let mut i = 0;
    while i < lines.len() {
        let (start, _, body) = lines[i];
        if body.trim_start().starts_with("```") {
            in_fence = !in_fence;
            i += 1;
            continue;
        }

        // Fold continuation lines into one logical command.
        let mut joined = String::new();
        let end;
        let mut j = i;
        loop {
            let (_, line_end, line_body) = lines[j];
            let trimmed = line_body.trim_end();
            if trimmed.ends_with('\\') && j + 1 < lines.len() {
                joined.push_str(trimmed.trim_end_matches('\\'));
                joined.push(' ');
                j += 1;
            } else {
                joined.push_str(line_body);
                end = line_end;
                break;
            }
        }
        let logical = joined.trim();
        let consumed = j - i + 1;
        i = j + 1;
        if logical.is_empty() {
            continue;
        }

        let mut words = logical.split_whitespace();
        let first = words.next().unwrap_or("");
        let second = words.next();
        let allowlisted = allowlist.iter().any(|p| p == first);
        let command_shape = allowlisted
            || (in_fence && second.map(|w| w.starts_with('-')).unwrap_or(false));
        if !command_shape {
            continue;
        }

        match tokenize(logical) {
            Ok(argv) if !argv.is_empty() => {
                let span_start = start;
                commands.push(ExtractedCommand {
                    raw_line: answer[span_start..end].to_string(),
                    program: argv[0].clone(),
                    argv,
                    source_span: (span_start, end),
                });
            }
            Ok(_) => {}
            Err(e) => diagnostics.push(format!(
                "skipped malformed candidate ({} line{}) at byte {start}: {e}",
                consumed,
                if consumed == 1 { "" } else { "s" }
            )),
        }
    }
    (commands, diagnostics)
}
