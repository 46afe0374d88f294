//! Batch evaluation runs.
//!
//! Every (mode, query) cell is answered by the pipeline, judged, and
//! appended to a JSONL checkpoint as soon as it completes. A resumed run
//! loads the checkpoint and skips finished cells, so an interrupted
//! benchmark continues where it stopped and produces the same final
//! records as an uninterrupted one.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::agent::{run_pipeline, AnswerRecord, CallParams, ChatClient, PipelineConfig, PipelineContext, ToolLabel};
use crate::config::PipelineMode;

use super::dataset::QueryRecord;
use super::energy::{EnergyMeter, RaplReader};
use super::judge::{judge_answer, JudgeVerdict};

#[derive(Debug, thiserror::Error)]
pub enum BenchmarkError {
    #[error("checkpoint {path}: {source}")]
    Checkpoint {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("checkpoint {path} line {line}: {message}")]
    CheckpointParse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// One fully processed (mode, query) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRecord {
    pub mode: PipelineMode,
    pub id: String,
    pub category: String,
    pub expected_tool: ToolLabel,
    pub record: AnswerRecord,
    pub judgments: BTreeMap<String, JudgeVerdict>,
}

pub struct BenchmarkOptions {
    pub modes: Vec<PipelineMode>,
    pub i_max: u32,
    pub k: usize,
    pub params: CallParams,
    pub checkpoint: PathBuf,
    pub resume: bool,
}

/// Measured RAPL energy per mode, in watt-hours. Empty without RAPL.
pub type RaplByMode = BTreeMap<String, f64>;

fn load_checkpoint(
    path: &PathBuf,
) -> Result<BTreeMap<(String, String), EvalRecord>, BenchmarkError> {
    let mut done = BTreeMap::new();
    if !path.exists() {
        return Ok(done);
    }
    let text = std::fs::read_to_string(path).map_err(|source| BenchmarkError::Checkpoint {
        path: path.clone(),
        source,
    })?;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: EvalRecord =
            serde_json::from_str(line).map_err(|e| BenchmarkError::CheckpointParse {
                path: path.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
        done.insert((record.mode.to_string(), record.id.clone()), record);
    }
    Ok(done)
}

/// Runs `dataset` through every requested mode. `judges` are named chat
/// clients; each one scores every answer. Returns the records in a fixed
/// order (mode-major, dataset order) regardless of interruptions.
pub fn run_benchmark(
    dataset: &[QueryRecord],
    ctx: &PipelineContext,
    judges: &[(String, &dyn ChatClient)],
    options: &BenchmarkOptions,
) -> Result<(Vec<EvalRecord>, RaplByMode), BenchmarkError> {
    let mut done = if options.resume {
        load_checkpoint(&options.checkpoint)?
    } else {
        BTreeMap::new()
    };
    if let Some(parent) = options.checkpoint.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| BenchmarkError::Checkpoint {
                path: options.checkpoint.clone(),
                source,
            })?;
        }
    }
    let mut log = std::fs::OpenOptions::new()
        .create(true)
        .append(options.resume)
        .write(true)
        .truncate(!options.resume)
        .open(&options.checkpoint)
        .map_err(|source| BenchmarkError::Checkpoint {
            path: options.checkpoint.clone(),
            source,
        })?;

    let mut rapl_by_mode = RaplByMode::new();
    for &mode in &options.modes {
        let cfg = PipelineConfig {
            mode,
            i_max: options.i_max,
            k: options.k,
            params: options.params,
        };
        let meter = EnergyMeter::start_with(RaplReader::probe(), None);
        for query in dataset {
            let key = (mode.to_string(), query.id.clone());
            if done.contains_key(&key) {
                continue;
            }
            let record = run_pipeline(&query.query, ctx, &cfg);
            let mut judgments = BTreeMap::new();
            for (name, judge) in judges {
                judgments.insert(
                    name.clone(),
                    judge_answer(*judge, &query.query, &record.answer, &options.params),
                );
            }
            let eval_record = EvalRecord {
                mode,
                id: query.id.clone(),
                category: query.category.clone(),
                expected_tool: query.tool,
                record,
                judgments,
            };
            let line = serde_json::to_string(&eval_record).expect("record serializes");
            writeln!(log, "{line}").map_err(|source| BenchmarkError::Checkpoint {
                path: options.checkpoint.clone(),
                source,
            })?;
            log.flush().map_err(|source| BenchmarkError::Checkpoint {
                path: options.checkpoint.clone(),
                source,
            })?;
            done.insert(key, eval_record);
        }
        if let Some(estimate) = meter.finish(0.0) {
            rapl_by_mode.insert(mode.to_string(), estimate.wh);
        }
    }

    // Fixed output order: requested mode order, then dataset order.
    let mut records = Vec::with_capacity(options.modes.len() * dataset.len());
    for &mode in &options.modes {
        for query in dataset {
            if let Some(record) = done.remove(&(mode.to_string(), query.id.clone())) {
                records.push(record);
            }
        }
    }
    Ok((records, rapl_by_mode))
}
