//! Application configuration.
//!
//! One TOML file configures every module; endpoints can be overridden per
//! machine with the `CHAT_ENDPOINT`, `EMBED_ENDPOINT`, and `JUDGE_ENDPOINT`
//! environment variables. Defaults follow the reference deployment:
//! 3000-character chunks with 500 overlap, k=5, one reflection iteration,
//! and a 4000-token context window.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{default_delimiters, ChunkConfig};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub root: PathBuf,
    pub manifest: PathBuf,
}

impl Default for CorpusSection {
    fn default() -> Self {
        Self {
            root: PathBuf::from("corpus"),
            manifest: PathBuf::from("index/manifest.json"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChunkingSection {
    pub chunk_size: usize,
    pub overlap: usize,
    pub delimiters: Vec<String>,
}

impl Default for ChunkingSection {
    fn default() -> Self {
        Self {
            chunk_size: 3000,
            overlap: 500,
            delimiters: default_delimiters(),
        }
    }
}

impl ChunkingSection {
    pub fn to_chunk_config(&self) -> ChunkConfig {
        ChunkConfig {
            chunk_size: self.chunk_size,
            overlap: self.overlap,
            delimiters: self.delimiters.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedProviderKind {
    Http,
    Mock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSection {
    pub k: usize,
    pub store_dir: PathBuf,
    pub provider: EmbedProviderKind,
    pub endpoint: String,
    pub model: String,
    /// Validated at startup against the provider's actual output length.
    pub dimension: usize,
    pub mock_seed: u64,
}

impl Default for RetrievalSection {
    fn default() -> Self {
        Self {
            k: 5,
            store_dir: PathBuf::from("index"),
            provider: EmbedProviderKind::Http,
            endpoint: "http://localhost:8080/embed".into(),
            model: "bge-small-en-v1.5".into(),
            dimension: 384,
            mock_seed: 42,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PipelineMode {
    Base,
    RagOnly,
    Full,
}

impl std::fmt::Display for PipelineMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PipelineMode::Base => write!(f, "base"),
            PipelineMode::RagOnly => write!(f, "ragonly"),
            PipelineMode::Full => write!(f, "full"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentSection {
    pub endpoint: String,
    pub model: String,
    /// Max tokens in the assembled prompt; the character budget is four
    /// characters per token.
    pub context_limit: usize,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub i_max: u32,
    pub mode: PipelineMode,
}

impl Default for AgentSection {
    fn default() -> Self {
        Self {
            endpoint: "http://localhost:11434/v1/chat/completions".into(),
            model: "qwen2.5".into(),
            context_limit: 4000,
            temperature: 0.0,
            max_output_tokens: 1024,
            i_max: 1,
            mode: PipelineMode::Full,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExecutorSection {
    pub workdir: PathBuf,
    pub timeout_secs: u64,
    pub allowlist: Vec<String>,
    /// Optional binary path overrides, e.g. ffmpeg = "/opt/ffmpeg/ffmpeg".
    pub binaries: BTreeMap<String, PathBuf>,
}

impl Default for ExecutorSection {
    fn default() -> Self {
        Self {
            workdir: PathBuf::from("runs"),
            timeout_secs: 300,
            allowlist: ["ffmpeg", "ffprobe", "ffplay", "vvencapp", "vvencFFapp"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            binaries: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeSection {
    pub name: String,
    pub endpoint: String,
    pub model: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub dataset: PathBuf,
    pub report_dir: PathBuf,
    pub judges: Vec<JudgeSection>,
    /// Constant-power fallback for the energy estimate, in watts.
    pub power_watts: Option<f64>,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self {
            dataset: PathBuf::from("data/queries.jsonl"),
            report_dir: PathBuf::from("reports"),
            judges: Vec::new(),
            power_watts: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub corpus: CorpusSection,
    pub chunking: ChunkingSection,
    pub retrieval: RetrievalSection,
    pub agent: AgentSection,
    pub executor: ExecutorSection,
    pub eval: EvalSection,
}

impl AppConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: AppConfig = toml::from_str(&text)?;
        config.apply_env_overrides();
        config.validate()?;
        Ok(config)
    }

    /// Defaults plus environment overrides, for running without a file.
    pub fn load_default() -> Result<Self, ConfigError> {
        let mut config = AppConfig::default();
        config.apply_env_overrides();
        config.validate()?;
        Ok(config)
    }

    fn apply_env_overrides(&mut self) {
        if let Ok(v) = std::env::var("CHAT_ENDPOINT") {
            self.agent.endpoint = v;
        }
        if let Ok(v) = std::env::var("EMBED_ENDPOINT") {
            self.retrieval.endpoint = v;
        }
        if let Ok(v) = std::env::var("JUDGE_ENDPOINT") {
            for judge in &mut self.eval.judges {
                judge.endpoint = v.clone();
            }
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.chunking
            .to_chunk_config()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.retrieval.k == 0 {
            return Err(ConfigError::Invalid("retrieval.k must be >= 1".into()));
        }
        if self.retrieval.dimension == 0 {
            return Err(ConfigError::Invalid("retrieval.dimension must be >= 1".into()));
        }
        if self.agent.context_limit == 0 {
            return Err(ConfigError::Invalid("agent.context_limit must be > 0".into()));
        }
        if self.executor.allowlist.is_empty() {
            return Err(ConfigError::Invalid("executor.allowlist must be non-empty".into()));
        }
        Ok(())
    }

    /// Character budget for assembled prompts: four characters per token.
    pub fn prompt_char_budget(&self) -> usize {
        self.agent.context_limit * 4
    }
}
