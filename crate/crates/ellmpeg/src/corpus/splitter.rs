//! Recursive delimiter splitting.
//!
//! A document is split at the coarsest delimiter first (paragraph breaks);
//! any piece still larger than the chunk size is recursively split at the
//! next finer delimiter. A piece that exceeds the chunk size with no
//! delimiter left is cut hard at exactly `chunk_size` characters. Delimiter
//! occurrences at split points are consumed; every other character of the
//! source survives into exactly one piece, in document order.
//!
//! Overlap is trailing-context carryover: each chunk after the first is
//! prefixed with up to `overlap` characters from the previous chunk's tail,
//! cut at the nearest delimiter boundary inside that window. If the prefix
//! would push the chunk over `chunk_size`, the prefix (never the new
//! material) is trimmed from the front.

use super::{Chunk, ChunkConfig, ChunkMetadata, CorpusError, SourceDocument};

/// Splits one document into chunks with metadata. Pure and deterministic.
pub fn split_document(doc: &SourceDocument, cfg: &ChunkConfig) -> Result<Vec<Chunk>, CorpusError> {
    cfg.validate()?;
    let pieces = split_pieces(&doc.text, cfg);
    let contents = apply_overlap(&pieces, cfg);
    let source_file = doc.file_name();
    Ok(contents
        .into_iter()
        .enumerate()
        .map(|(i, content)| Chunk {
            content,
            metadata: ChunkMetadata {
                source_file: source_file.clone(),
                chunk_index: i as u32,
                tool_tag: doc.tool_tag,
            },
        })
        .collect())
}

/// Splits raw text into non-overlapping pieces, each at most
/// `cfg.chunk_size` characters. Every piece is a contiguous substring of
/// the input; only delimiter occurrences at split points are dropped.
pub fn split_pieces(text: &str, cfg: &ChunkConfig) -> Vec<String> {
    let mut out = Vec::new();
    split_level(text, cfg, 0, &mut out, &mut |_, _| {});
    out
}

/// Same as [`split_pieces`] but reports every (piece depth, delimiter
/// level) consultation, for refinement-order checks.
pub fn split_pieces_traced(
    text: &str,
    cfg: &ChunkConfig,
    trace: &mut dyn FnMut(usize, usize),
) -> Vec<String> {
    let mut out = Vec::new();
    split_level(text, cfg, 0, &mut out, trace);
    out
}

fn split_level(
    text: &str,
    cfg: &ChunkConfig,
    level: usize,
    out: &mut Vec<String>,
    trace: &mut dyn FnMut(usize, usize),
) {
    if char_len(text) <= cfg.chunk_size {
        if !text.is_empty() {
            out.push(text.to_string());
        }
        return;
    }
    if level >= cfg.delimiters.len() {
        hard_split(text, cfg.chunk_size, out);
        return;
    }
    trace(out.len(), level);
    let delim = cfg.delimiters[level].as_str();
    let mut produced = false;
    for piece in text.split(delim) {
        if piece.is_empty() {
            continue;
        }
        produced = true;
        if char_len(piece) <= cfg.chunk_size {
            out.push(piece.to_string());
        } else {
            // Oversize piece: refine with the next finer delimiter only.
            split_level(piece, cfg, level + 1, out, trace);
        }
    }
    if !produced {
        // Text consisted solely of delimiter repetitions.
        hard_split(text, cfg.chunk_size, out);
    }
}

fn hard_split(text: &str, size: usize, out: &mut Vec<String>) {
    let chars: Vec<char> = text.chars().collect();
    for window in chars.chunks(size) {
        out.push(window.iter().collect());
    }
}

fn apply_overlap(pieces: &[String], cfg: &ChunkConfig) -> Vec<String> {
    if cfg.overlap == 0 || pieces.len() < 2 {
        return pieces.to_vec();
    }
    let mut out = Vec::with_capacity(pieces.len());
    out.push(pieces[0].clone());
    for pair in pieces.windows(2) {
        let (prev, piece) = (&pair[0], &pair[1]);
        let window = tail_chars(prev, cfg.overlap);
        let prefix = after_first_delimiter(window, &cfg.delimiters);
        let mut content = format!("{prefix}{piece}");
        let over = char_len(&content).saturating_sub(cfg.chunk_size);
        if over > 0 {
            content = skip_chars(&content, over).to_string();
        }
        out.push(content);
    }
    out
}

fn char_len(s: &str) -> usize {
    s.chars().count()
}

fn tail_chars(s: &str, n: usize) -> &str {
    let len = char_len(s);
    skip_chars(s, len.saturating_sub(n))
}

fn skip_chars(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[i..],
        None => "",
    }
}

/// Everything after the earliest delimiter occurrence in `window`, so the
/// carried overlap starts at a clean boundary. The whole window is used
/// when it contains no delimiter.
fn after_first_delimiter<'a>(window: &'a str, delimiters: &[String]) -> &'a str {
    for (i, _) in window.char_indices() {
        for d in delimiters {
            if window[i..].starts_with(d.as_str()) {
                return &window[i + d.len()..];
            }
        }
    }
    window
}
