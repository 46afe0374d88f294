//! Flat vector stores and exact top-k search.
//!
//! Stores are immutable after build and rebuilt from scratch on corpus
//! change. The on-disk format is little-endian binary: magic `EVS1`,
//! u32 dimension, u32 count, u8 tool tag, the raw f32 vectors, then
//! length-prefixed chunk contents and metadata.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::Write;
use std::path::Path;

use crate::corpus::{Chunk, ChunkMetadata, ToolTag};

use super::{l2_distance, EmbeddingProvider, EmbeddingVector, RetrievalError, ScoredChunk};

const MAGIC: &[u8; 4] = b"EVS1";

/// Exhaustive (flat) index over one tool's chunks.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorStore {
    pub tool_tag: ToolTag,
    pub dimension: usize,
    /// Row-major flat array, `len() == count * dimension`.
    pub vectors: Vec<f32>,
    pub chunks: Vec<Chunk>,
}

impl VectorStore {
    pub fn empty(tool_tag: ToolTag, dimension: usize) -> Self {
        Self {
            tool_tag,
            dimension,
            vectors: Vec::new(),
            chunks: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    fn vector(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dimension..(i + 1) * self.dimension]
    }
}

/// The two tool-scoped stores.
#[derive(Debug)]
pub struct StorePair {
    pub ffmpeg: VectorStore,
    pub vvenc: VectorStore,
}

impl StorePair {
    /// Store selection for routing: a concrete tag selects one store,
    /// `None` selects the union of both (FFmpeg pool first).
    pub fn select(&self, tag: Option<ToolTag>) -> Vec<&VectorStore> {
        match tag {
            Some(ToolTag::FFmpeg) => vec![&self.ffmpeg],
            Some(ToolTag::VVenC) => vec![&self.vvenc],
            None => vec![&self.ffmpeg, &self.vvenc],
        }
    }
}

/// Embeds the chunks carrying `tool_tag` and builds that tool's store.
/// An empty chunk set yields an empty store, not an error.
pub fn build_store(
    chunks: &[Chunk],
    tool_tag: ToolTag,
    provider: &dyn EmbeddingProvider,
) -> Result<VectorStore, RetrievalError> {
    let own: Vec<&Chunk> = chunks.iter().filter(|c| c.metadata.tool_tag == tool_tag).collect();
    let dimension = provider.dimension();
    let mut store = VectorStore::empty(tool_tag, dimension);
    if own.is_empty() {
        eprintln!("warning: no {tool_tag} chunks; store will be empty");
        return Ok(store);
    }
    let texts: Vec<&str> = own.iter().map(|c| c.content.as_str()).collect();
    let vectors = provider.embed_batch(&texts)?;
    for v in &vectors {
        v.validate(dimension)?;
    }
    store.vectors.reserve(vectors.len() * dimension);
    for v in vectors {
        store.vectors.extend_from_slice(&v.0);
    }
    store.chunks = own.into_iter().cloned().collect();
    Ok(store)
}

#[derive(PartialEq)]
struct HeapEntry {
    distance: f64,
    index: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap by (distance, insertion index): ties lose on the
        // later-inserted candidate, so equal distances keep ascending
        // insertion order in the result.
        self.distance
            .total_cmp(&other.distance)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Exact Euclidean top-k over the candidate pool formed by the given
/// stores in order, using a bounded max-heap of size k (O(N log k)).
/// Returns exactly `min(k, pool size)` results, ascending by
/// (distance, pool insertion index).
pub fn search(
    stores: &[&VectorStore],
    query: &EmbeddingVector,
    k: usize,
) -> Result<Vec<ScoredChunk>, RetrievalError> {
    assert!(k >= 1, "k must be >= 1");
    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::with_capacity(k + 1);
    let mut pool: Vec<(&VectorStore, usize)> =
        Vec::with_capacity(stores.iter().map(|s| s.len()).sum());
    let mut pool_index = 0usize;
    for store in stores {
        if store.is_empty() {
            continue;
        }
        query.validate(store.dimension)?;
        for i in 0..store.len() {
            let distance = l2_distance(&query.0, store.vector(i));
            heap.push(HeapEntry {
                distance,
                index: pool_index,
            });
            if heap.len() > k {
                heap.pop();
            }
            pool.push((store, i));
            pool_index += 1;
        }
    }
    let mut entries: Vec<HeapEntry> = heap.into_vec();
    entries.sort_by(|a, b| a.cmp(b));
    Ok(entries
        .into_iter()
        .map(|e| {
            let (store, i) = pool[e.index];
            ScoredChunk {
                chunk: store.chunks[i].clone(),
                distance: e.distance,
            }
        })
        .collect())
}

fn write_u32(w: &mut impl Write, v: u32) -> std::io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn write_str(w: &mut impl Write, s: &str) -> std::io::Result<()> {
    write_u32(w, s.len() as u32)?;
    w.write_all(s.as_bytes())
}

/// Persists a store atomically (temp file + rename).
pub fn persist_store(store: &VectorStore, path: &Path) -> Result<(), RetrievalError> {
    let tmp = path.with_extension("evs.tmp");
    let mut buf: Vec<u8> = Vec::new();
    buf.write_all(MAGIC)?;
    write_u32(&mut buf, store.dimension as u32)?;
    write_u32(&mut buf, store.len() as u32)?;
    buf.push(tag_byte(store.tool_tag));
    for v in &store.vectors {
        buf.write_all(&v.to_le_bytes())?;
    }
    for chunk in &store.chunks {
        write_str(&mut buf, &chunk.content)?;
        write_str(&mut buf, &chunk.metadata.source_file)?;
        write_u32(&mut buf, chunk.metadata.chunk_index)?;
        buf.push(tag_byte(chunk.metadata.tool_tag));
    }
    std::fs::write(&tmp, &buf)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn tag_byte(tag: ToolTag) -> u8 {
    match tag {
        ToolTag::FFmpeg => 0,
        ToolTag::VVenC => 1,
    }
}

fn byte_tag(b: u8, offset: u64) -> Result<ToolTag, RetrievalError> {
    match b {
        0 => Ok(ToolTag::FFmpeg),
        1 => Ok(ToolTag::VVenC),
        other => Err(RetrievalError::CorruptStore {
            offset,
            message: format!("invalid tool tag byte {other:#04x}"),
        }),
    }
}

struct Reader<'a> {
    data: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], RetrievalError> {
        if self.offset + n > self.data.len() {
            return Err(RetrievalError::CorruptStore {
                offset: self.offset as u64,
                message: format!("truncated file while reading {what}"),
            });
        }
        let slice = &self.data[self.offset..self.offset + n];
        self.offset += n;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32, RetrievalError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn string(&mut self, what: &str) -> Result<String, RetrievalError> {
        let len = self.u32(what)? as usize;
        let at = self.offset as u64;
        let bytes = self.take(len, what)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| RetrievalError::CorruptStore {
            offset: at,
            message: format!("invalid UTF-8 in {what}"),
        })
    }
}

pub fn load_store(path: &Path) -> Result<VectorStore, RetrievalError> {
    let data = std::fs::read(path)?;
    let mut r = Reader { data: &data, offset: 0 };
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        let offset = magic.iter().zip(MAGIC).position(|(a, b)| a != b).unwrap_or(0) as u64;
        return Err(RetrievalError::CorruptStore {
            offset,
            message: format!("bad magic {magic:02x?}, expected {MAGIC:02x?}"),
        });
    }
    let dimension = r.u32("dimension")? as usize;
    let count = r.u32("count")? as usize;
    let tag_at = r.offset as u64;
    let tool_tag = byte_tag(r.take(1, "tool tag")?[0], tag_at)?;
    let mut vectors = Vec::with_capacity(count * dimension);
    for _ in 0..count * dimension {
        let b = r.take(4, "vector data")?;
        vectors.push(f32::from_le_bytes([b[0], b[1], b[2], b[3]]));
    }
    let mut chunks = Vec::with_capacity(count);
    for _ in 0..count {
        let content = r.string("chunk content")?;
        let source_file = r.string("source file")?;
        let chunk_index = r.u32("chunk index")?;
        let at = r.offset as u64;
        let chunk_tag = byte_tag(r.take(1, "chunk tool tag")?[0], at)?;
        if chunk_tag != tool_tag {
            return Err(RetrievalError::CorruptStore {
                offset: at,
                message: "chunk tag disagrees with store tag".into(),
            });
        }
        chunks.push(Chunk {
            content,
            metadata: ChunkMetadata {
                source_file,
                chunk_index,
                tool_tag: chunk_tag,
            },
        });
    }
    if r.offset != data.len() {
        return Err(RetrievalError::CorruptStore {
            offset: r.offset as u64,
            message: "trailing bytes after store payload".into(),
        });
    }
    Ok(VectorStore {
        tool_tag,
        dimension,
        vectors,
        chunks,
    })
}
