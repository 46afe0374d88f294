//! Benchmark harness: dataset loading, LLM judging, energy accounting,
//! batch runs with checkpoint/resume, and deterministic metric reports.

mod benchmark;
mod dataset;
mod energy;
mod judge;
mod report;

pub use benchmark::{run_benchmark, BenchmarkError, BenchmarkOptions, EvalRecord};
pub use dataset::{load_dataset, DatasetError, QueryRecord};
pub use energy::{constant_power_wh, EnergyEstimate, EnergyMeter, EnergySource, RaplReader};
pub use judge::{judge_answer, parse_judge_verdict, JudgeVerdict};
pub use report::{build_report, render_csv, write_report, CategoryMetrics, MetricsReport, ModeMetrics};
