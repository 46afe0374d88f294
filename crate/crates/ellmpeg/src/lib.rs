//! Edge-deployable agentic RAG engine for FFmpeg/VVenC command generation.
//!
//! The pipeline has three phases: a retrieval setup phase (documentation
//! ingestion, chunking, embedding, tool-scoped flat vector stores), an LLM
//! reasoning phase (tool selection, retrieval-grounded generation, bounded
//! self-reflection), and a command execution phase (extraction, validation
//! against an allowlist, direct process dispatch). A benchmark harness
//! drives the pipeline over query pools and scores answers with judge LLMs.

pub mod agent;
pub mod config;
pub mod corpus;
pub mod eval;
pub mod executor;
pub mod retrieval;

pub use config::AppConfig;
pub use corpus::ToolTag;
