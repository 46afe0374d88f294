//! Documentation ingestion and chunking.
//!
//! Documents are plain UTF-8 text files laid out as `corpus/ffmpeg/*.txt`
//! and `corpus/vvenc/*.txt`; the directory determines the tool tag. Each
//! document is split into overlapping chunks by a recursive delimiter
//! hierarchy, and a manifest of content hashes supports incremental
//! re-ingestion.

mod manifest;
mod splitter;

pub use manifest::{ChangeSet, CorpusManifest, ManifestEntry};
pub use splitter::{split_document, split_pieces, split_pieces_traced};

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Which tool a document (and its chunks) belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ToolTag {
    FFmpeg,
    VVenC,
}

impl fmt::Display for ToolTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ToolTag::FFmpeg => write!(f, "ffmpeg"),
            ToolTag::VVenC => write!(f, "vvenc"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("empty document: {0}")]
    EmptyDocument(PathBuf),
    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid chunk config: {0}")]
    InvalidConfig(String),
    #[error("no documents could be ingested")]
    NoDocuments,
    #[error("manifest i/o: {0}")]
    ManifestIo(#[from] std::io::Error),
    #[error("manifest parse: {0}")]
    ManifestParse(#[from] serde_json::Error),
}

/// A loaded source document, prior to chunking.
#[derive(Debug, Clone)]
pub struct SourceDocument {
    pub path: PathBuf,
    pub text: String,
    pub tool_tag: ToolTag,
    pub content_hash: String,
}

impl SourceDocument {
    /// Loads a document from disk. Empty files are rejected.
    pub fn load(path: &Path, tool_tag: ToolTag) -> Result<Self, CorpusError> {
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(path.to_path_buf(), text, tool_tag)
    }

    pub fn from_text(path: PathBuf, text: String, tool_tag: ToolTag) -> Result<Self, CorpusError> {
        if text.is_empty() {
            return Err(CorpusError::EmptyDocument(path));
        }
        let content_hash = content_hash(&text);
        Ok(Self {
            path,
            text,
            tool_tag,
            content_hash,
        })
    }

    pub fn file_name(&self) -> String {
        self.path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.path.to_string_lossy().into_owned())
    }
}

/// Hex SHA-256 of document text, used for change detection.
pub fn content_hash(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Chunking parameters: maximum chunk size, overlap carried between
/// consecutive chunks, and the ordered delimiter hierarchy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChunkConfig {
    pub chunk_size: usize,
    pub overlap: usize,
    pub delimiters: Vec<String>,
}

impl Default for ChunkConfig {
    fn default() -> Self {
        Self {
            chunk_size: 3000,
            overlap: 500,
            delimiters: default_delimiters(),
        }
    }
}

/// Paragraph breaks first, then line breaks, then sentence punctuation,
/// then single spaces.
pub fn default_delimiters() -> Vec<String> {
    ["\n\n", "\n", ". ", "! ", "? ", " "]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

impl ChunkConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.chunk_size == 0 {
            return Err(CorpusError::InvalidConfig("chunk_size must be > 0".into()));
        }
        if self.overlap >= self.chunk_size {
            return Err(CorpusError::InvalidConfig(format!(
                "overlap ({}) must be smaller than chunk_size ({})",
                self.overlap, self.chunk_size
            )));
        }
        if self.delimiters.is_empty() {
            return Err(CorpusError::InvalidConfig("delimiters must be non-empty".into()));
        }
        if self.delimiters.iter().any(|d| d.is_empty()) {
            return Err(CorpusError::InvalidConfig("delimiters must not contain the empty string".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkMetadata {
    pub source_file: String,
    pub chunk_index: u32,
    pub tool_tag: ToolTag,
}

/// A bounded text segment with its provenance metadata.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub content: String,
    pub metadata: ChunkMetadata,
}

/// Result of an (incremental) ingestion pass.
#[derive(Debug)]
pub struct IngestOutcome {
    /// Chunks for added and modified documents only. Unchanged documents
    /// emit nothing.
    pub chunks: Vec<Chunk>,
    pub manifest: CorpusManifest,
    /// Per-file errors; ingestion of the remaining files proceeds.
    pub errors: Vec<(PathBuf, CorpusError)>,
    pub unchanged: Vec<PathBuf>,
}

/// Ingests the given documents, splitting only those whose content hash
/// differs from `previous`. Fails only if no file could be ingested at all.
pub fn ingest(
    inputs: &[(PathBuf, ToolTag)],
    cfg: &ChunkConfig,
    previous: &CorpusManifest,
) -> Result<IngestOutcome, CorpusError> {
    cfg.validate()?;
    let mut chunks = Vec::new();
    let mut manifest = CorpusManifest::default();
    let mut errors = Vec::new();
    let mut unchanged = Vec::new();
    let mut ok_files = 0usize;

    for (path, tag) in inputs {
        let doc = match SourceDocument::load(path, *tag) {
            Ok(doc) => doc,
            Err(e) => {
                errors.push((path.clone(), e));
                continue;
            }
        };
        ok_files += 1;
        let key = path.to_string_lossy().into_owned();
        match previous.entries.get(&key) {
            Some(entry) if entry.content_hash == doc.content_hash => {
                manifest.entries.insert(key, entry.clone());
                unchanged.push(path.clone());
            }
            _ => {
                let doc_chunks = split_document(&doc, cfg)?;
                manifest.entries.insert(
                    key,
                    ManifestEntry {
                        content_hash: doc.content_hash.clone(),
                        chunk_count: doc_chunks.len() as u32,
                        ingested_at: now_epoch_secs(),
                    },
                );
                chunks.extend(doc_chunks);
            }
        }
    }

    if ok_files == 0 {
        return Err(CorpusError::NoDocuments);
    }
    Ok(IngestOutcome {
        chunks,
        manifest,
        errors,
        unchanged,
    })
}

fn now_epoch_secs() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Maps `root/ffmpeg/*.txt` and `root/vvenc/*.txt` to tagged document paths.
pub fn discover_corpus(root: &Path) -> Result<Vec<(PathBuf, ToolTag)>, CorpusError> {
    let mut inputs = Vec::new();
    for (dir, tag) in [("ffmpeg", ToolTag::FFmpeg), ("vvenc", ToolTag::VVenC)] {
        let sub = root.join(dir);
        if !sub.is_dir() {
            continue;
        }
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&sub)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().map(|x| x == "txt").unwrap_or(false))
            .collect();
        paths.sort();
        inputs.extend(paths.into_iter().map(|p| (p, tag)));
    }
    Ok(inputs)
}
