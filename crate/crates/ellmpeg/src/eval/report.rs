//! Metric aggregation and report serialization.
//!
//! Reports are deterministic: map keys are ordered, all timing comes from
//! the per-call latencies stored in the answer records, and nothing
//! timestamp-shaped is written. Building the same records twice yields
//! byte-identical JSON and CSV.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::benchmark::{EvalRecord, RaplByMode};
use super::energy::{constant_power_wh, EnergySource};
use super::judge::JudgeVerdict;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub query_count: usize,
    /// Per judge: correct answers over all queries in the category.
    pub accuracy: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeMetrics {
    pub query_count: usize,
    /// Per judge: correct answers over all queries. Unjudged counts as
    /// not correct; the unjudged tally is reported separately.
    pub accuracy: BTreeMap<String, f64>,
    pub unjudged: BTreeMap<String, usize>,
    pub mean_response_tokens: f64,
    pub mean_inference_secs: f64,
    /// Completion tokens per second of inference time, totalled over the
    /// whole mode.
    pub tokens_per_second: f64,
    pub energy_wh: Option<f64>,
    pub energy_source: Option<EnergySource>,
    pub per_category: BTreeMap<String, CategoryMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub modes: BTreeMap<String, ModeMetrics>,
}

fn accuracy_over(records: &[&EvalRecord]) -> (BTreeMap<String, f64>, BTreeMap<String, usize>) {
    let mut correct: BTreeMap<String, usize> = BTreeMap::new();
    let mut unjudged: BTreeMap<String, usize> = BTreeMap::new();
    for record in records {
        for (judge, verdict) in &record.judgments {
            let c = correct.entry(judge.clone()).or_default();
            let u = unjudged.entry(judge.clone()).or_default();
            match verdict {
                JudgeVerdict::Correct => *c += 1,
                JudgeVerdict::Incorrect => {}
                JudgeVerdict::Unjudged => *u += 1,
            }
        }
    }
    let total = records.len().max(1) as f64;
    let accuracy = correct
        .into_iter()
        .map(|(judge, c)| (judge, c as f64 / total))
        .collect();
    (accuracy, unjudged)
}

/// Aggregates finished records into per-mode metrics. Energy per mode is
/// the measured RAPL value when one exists, otherwise the constant-power
/// model over total inference time, otherwise absent.
pub fn build_report(
    records: &[EvalRecord],
    power_watts: Option<f64>,
    rapl: &RaplByMode,
) -> MetricsReport {
    let mut by_mode: BTreeMap<String, Vec<&EvalRecord>> = BTreeMap::new();
    for record in records {
        by_mode.entry(record.mode.to_string()).or_default().push(record);
    }

    let mut modes = BTreeMap::new();
    for (mode, records) in by_mode {
        let query_count = records.len();
        let total_tokens: u64 = records
            .iter()
            .map(|r| r.record.completion_tokens_total() as u64)
            .sum();
        let total_secs: f64 = records.iter().map(|r| r.record.inference_secs()).sum();
        let (accuracy, unjudged) = accuracy_over(&records);

        let mut per_category: BTreeMap<String, Vec<&EvalRecord>> = BTreeMap::new();
        for record in &records {
            per_category
                .entry(record.category.clone())
                .or_default()
                .push(record);
        }
        let per_category = per_category
            .into_iter()
            .map(|(category, records)| {
                let (accuracy, _) = accuracy_over(&records);
                (
                    category,
                    CategoryMetrics {
                        query_count: records.len(),
                        accuracy,
                    },
                )
            })
            .collect();

        let (energy_wh, energy_source) = match (rapl.get(&mode), power_watts) {
            (Some(&wh), _) => (Some(wh), Some(EnergySource::Rapl)),
            (None, Some(watts)) if watts > 0.0 => (
                Some(constant_power_wh(watts, total_secs)),
                Some(EnergySource::ConstantPower),
            ),
            _ => (None, None),
        };

        modes.insert(
            mode,
            ModeMetrics {
                query_count,
                accuracy,
                unjudged,
                mean_response_tokens: total_tokens as f64 / query_count.max(1) as f64,
                mean_inference_secs: total_secs / query_count.max(1) as f64,
                tokens_per_second: if total_secs > 0.0 {
                    total_tokens as f64 / total_secs
                } else {
                    0.0
                },
                energy_wh,
                energy_source,
                per_category,
            },
        );
    }
    MetricsReport {
        schema_version: REPORT_SCHEMA_VERSION,
        modes,
    }
}

fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

/// One row per (mode, judge); modes without judges get one row with the
/// judge columns empty.
pub fn render_csv(report: &MetricsReport) -> String {
    let mut out = String::from(
        "mode,judge,accuracy,unjudged,query_count,mean_response_tokens,mean_inference_secs,tokens_per_second,energy_wh\n",
    );
    for (mode, metrics) in &report.modes {
        let shared = format!(
            "{},{},{},{}",
            metrics.query_count,
            metrics.mean_response_tokens,
            metrics.mean_inference_secs,
            metrics.tokens_per_second
        );
        let energy = metrics.energy_wh.map(|wh| wh.to_string()).unwrap_or_default();
        if metrics.accuracy.is_empty() {
            out.push_str(&format!("{},,,,{shared},{energy}\n", csv_field(mode)));
        }
        for (judge, accuracy) in &metrics.accuracy {
            let unjudged = metrics.unjudged.get(judge).copied().unwrap_or(0);
            out.push_str(&format!(
                "{},{},{accuracy},{unjudged},{shared},{energy}\n",
                csv_field(mode),
                csv_field(judge),
            ));
        }
    }
    out
}

/// Writes `report.json` and `report.csv` into `dir`.
pub fn write_report(report: &MetricsReport, dir: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir)?;
    let json_path = dir.join("report.json");
    let csv_path = dir.join("report.csv");
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    std::fs::write(&json_path, json)?;
    std::fs::write(&csv_path, render_csv(report))?;
    Ok((json_path, csv_path))
}
