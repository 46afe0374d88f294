//! Command-line interface.
//!
//! Exit codes: 0 success, 2 configuration problem, 3 index missing or
//! unreadable, 4 model endpoint unreachable, 5 generated command rejected
//! by validation, 6 execution failure (non-zero exit or timeout).

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use ellmpeg::agent::{
    run_pipeline, AnswerRecord, CallParams, ChatClient, HttpChatClient, PipelineConfig,
    PipelineContext, RetryPolicy,
};
use ellmpeg::config::{AppConfig, EmbedProviderKind, PipelineMode};
use ellmpeg::corpus::{discover_corpus, ingest, CorpusManifest, ToolTag};
use ellmpeg::eval::{
    build_report, load_dataset, run_benchmark, BenchmarkOptions, write_report,
};
use ellmpeg::executor::{
    execute, extract_commands, validate, ExecPolicy, ExecutionResult, ExtractedCommand,
    RunOptions, ValidatedCommand,
};
use ellmpeg::retrieval::{
    build_store, load_store, persist_store, EmbeddingProvider, HttpEmbedder, MockEmbedder,
    StorePair,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INDEX_MISSING: i32 = 3;
pub const EXIT_TRANSPORT: i32 = 4;
pub const EXIT_VALIDATION: i32 = 5;
pub const EXIT_EXECUTION: i32 = 6;

#[derive(Parser)]
#[command(name = "ellmpeg", about = "Agentic RAG assistant for FFmpeg and VVenC commands")]
struct Cli {
    /// Path to the TOML configuration. Without it, ./config.toml is used
    /// when present, otherwise built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest the corpus and (re)build the vector stores.
    Index(IndexArgs),
    /// Answer one query, optionally executing the generated command.
    Ask(AskArgs),
    /// Validate and execute one literal command line.
    Run(RunArgs),
    /// Run the benchmark over the dataset and write the report.
    Eval(EvalArgs),
}

#[derive(Args)]
struct IndexArgs {
    /// Rebuild even when the manifest reports no corpus change.
    #[arg(long)]
    rebuild: bool,
}

#[derive(Args)]
struct AskArgs {
    /// The natural-language query.
    query: String,
    /// Pipeline mode override: base, ragonly, or full.
    #[arg(long)]
    mode: Option<String>,
    /// Reflection iteration cap override.
    #[arg(long)]
    imax: Option<u32>,
    /// Execute the extracted command after validation.
    #[arg(long)]
    execute: bool,
    /// Skip the interactive confirmation before executing.
    #[arg(long)]
    yes: bool,
    /// Validate and report, but spawn nothing.
    #[arg(long)]
    dry_run: bool,
    /// Emit the full answer record as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct RunArgs {
    /// The command line to validate and run.
    command_line: String,
    #[arg(long)]
    yes: bool,
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Comma-separated modes to benchmark.
    #[arg(long, default_value = "base,ragonly,full")]
    modes: String,
    /// Continue from the checkpoint instead of starting over.
    #[arg(long)]
    resume: bool,
    /// Reflection iteration cap override.
    #[arg(long)]
    imax: Option<u32>,
}

pub fn main_inner() -> i32 {
    let cli = Cli::parse();
    let config = match load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match cli.command {
        Command::Index(args) => cmd_index(&config, &args),
        Command::Ask(args) => cmd_ask(&config, &args),
        Command::Run(args) => cmd_run(&config, &args),
        Command::Eval(args) => cmd_eval(&config, &args),
    }
}

fn load_config(path: Option<&Path>) -> Result<AppConfig, ellmpeg::config::ConfigError> {
    match path {
        Some(p) => AppConfig::load(p),
        None => {
            let default_path = Path::new("config.toml");
            if default_path.exists() {
                AppConfig::load(default_path)
            } else {
                AppConfig::load_default()
            }
        }
    }
}

fn make_embedder(config: &AppConfig) -> Box<dyn EmbeddingProvider> {
    match config.retrieval.provider {
        EmbedProviderKind::Http => Box::new(HttpEmbedder::new(
            &config.retrieval.endpoint,
            &config.retrieval.model,
            config.retrieval.dimension,
        )),
        EmbedProviderKind::Mock => Box::new(MockEmbedder::with_dimension(
            config.retrieval.mock_seed,
            config.retrieval.dimension,
        )),
    }
}

fn store_paths(config: &AppConfig) -> (PathBuf, PathBuf) {
    (
        config.retrieval.store_dir.join("ffmpeg.evs"),
        config.retrieval.store_dir.join("vvenc.evs"),
    )
}

fn load_stores(config: &AppConfig) -> Result<StorePair, i32> {
    let (ffmpeg_path, vvenc_path) = store_paths(config);
    if !ffmpeg_path.exists() || !vvenc_path.exists() {
        eprintln!(
            "error: vector stores not found in {}; run `ellmpeg index` first",
            config.retrieval.store_dir.display()
        );
        return Err(EXIT_INDEX_MISSING);
    }
    let load = |p: &Path| {
        load_store(p).map_err(|e| {
            eprintln!("error: cannot load {}: {e}", p.display());
            EXIT_INDEX_MISSING
        })
    };
    Ok(StorePair {
        ffmpeg: load(&ffmpeg_path)?,
        vvenc: load(&vvenc_path)?,
    })
}

fn cmd_index(config: &AppConfig, args: &IndexArgs) -> i32 {
    let inputs = match discover_corpus(&config.corpus.root) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: cannot scan corpus {}: {e}", config.corpus.root.display());
            return EXIT_CONFIG;
        }
    };
    if inputs.is_empty() {
        eprintln!(
            "error: no documents under {} (expected ffmpeg/*.txt and vvenc/*.txt)",
            config.corpus.root.display()
        );
        return EXIT_CONFIG;
    }

    let previous = CorpusManifest::load_or_default(&config.corpus.manifest).unwrap_or_default();
    let changes = previous.detect_changes(&inputs);
    let (ffmpeg_path, vvenc_path) = store_paths(config);
    let stores_present = ffmpeg_path.exists() && vvenc_path.exists();
    if !args.rebuild && changes.is_empty() && stores_present {
        println!("index up to date ({} documents)", inputs.len());
        return EXIT_OK;
    }

    // Stores are immutable: any change means a full rebuild, so split
    // everything from scratch rather than only the changed files.
    let outcome = match ingest(&inputs, &config.chunking.to_chunk_config(), &CorpusManifest::default()) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: ingestion failed: {e}");
            return EXIT_CONFIG;
        }
    };
    for (path, e) in &outcome.errors {
        eprintln!("warning: skipped {}: {e}", path.display());
    }

    let embedder = make_embedder(config);
    if let Err(e) = embedder.probe_determinism() {
        eprintln!("error: embedding provider failed the determinism probe: {e}");
        return EXIT_TRANSPORT;
    }
    if let Err(e) = std::fs::create_dir_all(&config.retrieval.store_dir) {
        eprintln!("error: cannot create {}: {e}", config.retrieval.store_dir.display());
        return EXIT_CONFIG;
    }
    for (tag, path) in [(ToolTag::FFmpeg, &ffmpeg_path), (ToolTag::VVenC, &vvenc_path)] {
        let store = match build_store(&outcome.chunks, tag, embedder.as_ref()) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: embedding failed for {tag}: {e}");
                return EXIT_TRANSPORT;
            }
        };
        if let Err(e) = persist_store(&store, path) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return EXIT_CONFIG;
        }
        println!("built {} ({} chunks)", path.display(), store.len());
    }
    if let Some(parent) = config.corpus.manifest.parent() {
        let _ = std::fs::create_dir_all(parent);
    }
    if let Err(e) = outcome.manifest.save(&config.corpus.manifest) {
        eprintln!("error: cannot write manifest: {e}");
        return EXIT_CONFIG;
    }
    println!(
        "indexed {} documents, {} chunks",
        inputs.len(),
        outcome.chunks.len()
    );
    EXIT_OK
}

fn parse_mode(s: &str) -> Result<PipelineMode, String> {
    match s.trim().to_lowercase().as_str() {
        "base" => Ok(PipelineMode::Base),
        "ragonly" => Ok(PipelineMode::RagOnly),
        "full" => Ok(PipelineMode::Full),
        other => Err(format!("unknown mode {other:?} (expected base, ragonly, or full)")),
    }
}

fn call_params(config: &AppConfig) -> CallParams {
    CallParams {
        temperature: config.agent.temperature,
        max_tokens: config.agent.max_output_tokens,
        char_budget: config.prompt_char_budget(),
        retry: RetryPolicy::default(),
    }
}

fn answer_query(
    config: &AppConfig,
    query: &str,
    mode: PipelineMode,
    i_max: u32,
) -> Result<AnswerRecord, i32> {
    let chat = HttpChatClient::new(&config.agent.endpoint, &config.agent.model);
    let needs_retrieval = mode != PipelineMode::Base;
    let embedder = needs_retrieval.then(|| make_embedder(config));
    let stores = if needs_retrieval {
        Some(load_stores(config)?)
    } else {
        None
    };
    let ctx = PipelineContext {
        chat: &chat,
        embedder: embedder.as_deref(),
        stores: stores.as_ref(),
    };
    let cfg = PipelineConfig {
        mode,
        i_max,
        k: config.retrieval.k,
        params: call_params(config),
    };
    let record = run_pipeline(query, &ctx, &cfg);
    if let (Some(stage), Some(error)) = (&record.failed_stage, &record.error) {
        eprintln!("error: pipeline failed at {stage}: {error}");
        return Err(if error.contains("transport") {
            EXIT_TRANSPORT
        } else {
            EXIT_CONFIG
        });
    }
    Ok(record)
}

struct CommandReview {
    accepted: Vec<ValidatedCommand>,
    rejected: Vec<(ExtractedCommand, String)>,
}

fn review_commands(config: &AppConfig, answer: &str) -> CommandReview {
    let (candidates, diagnostics) = extract_commands(answer, &config.executor.allowlist);
    for d in diagnostics {
        eprintln!("note: {d}");
    }
    let policy = ExecPolicy::new(
        config.executor.allowlist.clone(),
        config.executor.workdir.clone(),
    );
    let mut review = CommandReview {
        accepted: Vec::new(),
        rejected: Vec::new(),
    };
    for candidate in candidates {
        match validate(&candidate, &policy) {
            Ok(v) => review.accepted.push(v),
            Err(reason) => review.rejected.push((candidate, reason.to_string())),
        }
    }
    review
}

fn confirm(prompt: &str) -> bool {
    print!("{prompt} [y/N] ");
    let _ = std::io::stdout().flush();
    let mut line = String::new();
    if std::io::stdin().read_line(&mut line).is_err() {
        return false;
    }
    matches!(line.trim().to_lowercase().as_str(), "y" | "yes")
}

fn run_validated(
    config: &AppConfig,
    command: &ValidatedCommand,
    dry_run: bool,
    yes: bool,
) -> Result<ExecutionResult, i32> {
    if !dry_run && !yes && !confirm(&format!("execute `{}`?", command.raw_line)) {
        println!("skipped");
        return Err(EXIT_OK);
    }
    let options = RunOptions {
        dry_run,
        timeout: Duration::from_secs(config.executor.timeout_secs),
        binaries: config.executor.binaries.clone(),
    };
    match execute(command, &config.executor.workdir, &options) {
        Ok(result) => Ok(result),
        Err(e) => {
            eprintln!("error: {e}");
            Err(EXIT_EXECUTION)
        }
    }
}

fn report_result(result: &ExecutionResult) -> i32 {
    if result.dry_run {
        println!("dry run: command validated, nothing executed");
        return EXIT_OK;
    }
    if result.timed_out {
        eprintln!("error: command timed out after {:.1}s", result.duration_secs);
        return EXIT_EXECUTION;
    }
    if result.exit_code != 0 {
        eprintln!("error: command exited with status {}", result.exit_code);
        if !result.stderr_tail.is_empty() {
            eprintln!("{}", result.stderr_tail.trim_end());
        }
        return EXIT_EXECUTION;
    }
    println!("command succeeded in {:.2}s", result.duration_secs);
    for output in &result.outputs {
        println!("output: {}", output.display());
    }
    EXIT_OK
}

fn cmd_ask(config: &AppConfig, args: &AskArgs) -> i32 {
    let mode = match args.mode.as_deref().map(parse_mode) {
        Some(Ok(m)) => m,
        Some(Err(e)) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
        None => config.agent.mode,
    };
    let i_max = args.imax.unwrap_or(config.agent.i_max);
    let record = match answer_query(config, &args.query, mode, i_max) {
        Ok(r) => r,
        Err(code) => return code,
    };

    if args.json {
        println!("{}", serde_json::to_string_pretty(&record).expect("record serializes"));
    } else {
        println!("{}", record.answer.trim_end());
    }

    let review = review_commands(config, &record.answer);
    for (candidate, reason) in &review.rejected {
        eprintln!("rejected ({reason}): {}", candidate.raw_line);
    }
    if !args.execute && !args.dry_run {
        return if review.rejected.is_empty() { EXIT_OK } else { EXIT_VALIDATION };
    }
    if !review.rejected.is_empty() {
        return EXIT_VALIDATION;
    }
    if review.accepted.is_empty() {
        eprintln!("error: the answer contains no executable command");
        return EXIT_VALIDATION;
    }
    for command in &review.accepted {
        match run_validated(config, command, args.dry_run, args.yes) {
            Ok(result) => {
                let code = report_result(&result);
                if code != EXIT_OK {
                    return code;
                }
            }
            Err(code) => return code,
        }
    }
    EXIT_OK
}

fn cmd_run(config: &AppConfig, args: &RunArgs) -> i32 {
    let (candidates, diagnostics) = extract_commands(&args.command_line, &config.executor.allowlist);
    for d in diagnostics {
        eprintln!("note: {d}");
    }
    if candidates.is_empty() {
        eprintln!("error: no command recognized in the input");
        return EXIT_VALIDATION;
    }
    let policy = ExecPolicy::new(
        config.executor.allowlist.clone(),
        config.executor.workdir.clone(),
    );
    for candidate in candidates {
        let command = match validate(&candidate, &policy) {
            Ok(v) => v,
            Err(reason) => {
                eprintln!("rejected ({reason}): {}", candidate.raw_line);
                return EXIT_VALIDATION;
            }
        };
        match run_validated(config, &command, args.dry_run, args.yes) {
            Ok(result) => {
                let code = report_result(&result);
                if code != EXIT_OK {
                    return code;
                }
            }
            Err(code) => return code,
        }
    }
    EXIT_OK
}

fn cmd_eval(config: &AppConfig, args: &EvalArgs) -> i32 {
    let mut modes = Vec::new();
    for part in args.modes.split(',') {
        match parse_mode(part) {
            Ok(m) => modes.push(m),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_CONFIG;
            }
        }
    }
    let dataset = match load_dataset(&config.eval.dataset) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };

    let chat = HttpChatClient::new(&config.agent.endpoint, &config.agent.model);
    let needs_retrieval = modes.iter().any(|&m| m != PipelineMode::Base);
    let embedder = needs_retrieval.then(|| make_embedder(config));
    let stores = if needs_retrieval {
        match load_stores(config) {
            Ok(s) => Some(s),
            Err(code) => return code,
        }
    } else {
        None
    };
    let ctx = PipelineContext {
        chat: &chat,
        embedder: embedder.as_deref(),
        stores: stores.as_ref(),
    };

    let judge_clients: Vec<(String, HttpChatClient)> = config
        .eval
        .judges
        .iter()
        .map(|j| (j.name.clone(), HttpChatClient::new(&j.endpoint, &j.model)))
        .collect();
    let judges: Vec<(String, &dyn ChatClient)> = judge_clients
        .iter()
        .map(|(name, client)| (name.clone(), client as &dyn ChatClient))
        .collect();

    let options = BenchmarkOptions {
        modes,
        i_max: args.imax.unwrap_or(config.agent.i_max),
        k: config.retrieval.k,
        params: call_params(config),
        checkpoint: config.eval.report_dir.join("checkpoint.jsonl"),
        resume: args.resume,
    };
    let (records, rapl) = match run_benchmark(&dataset, &ctx, &judges, &options) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let failed = records.iter().filter(|r| r.record.failed_stage.is_some()).count();
    if failed == records.len() {
        eprintln!("error: every query failed; is the model endpoint reachable?");
        return EXIT_TRANSPORT;
    }

    let report = build_report(&records, config.eval.power_watts, &rapl);
    match write_report(&report, &config.eval.report_dir) {
        Ok((json_path, csv_path)) => {
            println!("wrote {}", json_path.display());
            println!("wrote {}", csv_path.display());
        }
        Err(e) => {
            eprintln!("error: cannot write report: {e}");
            return EXIT_CONFIG;
        }
    }
    for (mode, metrics) in &report.modes {
        let accuracy: Vec<String> = metrics
            .accuracy
            .iter()
            .map(|(judge, a)| format!("{judge}={a:.3}"))
            .collect();
        println!(
            "{mode}: {} queries, accuracy [{}], {:.1} tokens/answer, {:.2} tok/s",
            metrics.query_count,
            accuracy.join(", "),
            metrics.mean_response_tokens,
            metrics.tokens_per_second,
        );
    }
    if failed > 0 {
        eprintln!("warning: {failed} of {} queries failed in the pipeline", records.len());
    }
    EXIT_OK
}
